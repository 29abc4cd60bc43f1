"""Physical device topologies: grids, Tokyo-style grids with diagonal
extras, custom JSON devices, and all-pairs hop-count distance matrices."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DisconnectedDeviceError

# Extra diagonal couplings laid over the base grid, by qubit count.
# The 12- and 16-qubit sets are subgraphs of the 20-qubit device.
_TOKYO_EXTRA = {
    12: [(1, 6), (2, 5), (4, 9), (5, 8), (6, 11), (7, 10)],
    16: [(1, 6), (2, 5), (4, 9), (5, 8), (6, 11), (7, 10), (9, 14), (10, 13)],
    20: [(1, 7), (2, 6), (3, 9), (4, 8), (5, 11), (6, 10),
         (7, 13), (8, 12), (11, 17), (12, 16), (13, 19), (14, 18)],
}
_TOKYO_SHAPE = {12: (3, 4), 16: (4, 4), 20: (4, 5)}


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Device:
    """Coupling graph with per-node coordinates in the unit square."""

    n_nodes: int
    edges: tuple[tuple[int, int], ...]
    coords: np.ndarray
    name: str = "custom"
    _dist: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple(sorted({_norm_edge(int(u), int(v)) for u, v in self.edges}))
        object.__setattr__(self, "edges", edges)
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.shape != (self.n_nodes, 2):
            raise ValueError(f"coords must be ({self.n_nodes}, 2)")
        if coords.min() < 0.0 or coords.max() > 1.0:
            raise ValueError("coords must lie in the unit square")
        object.__setattr__(self, "coords", coords)
        for u, v in edges:
            if u == v:
                raise ValueError(f"self loop at node {u}")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValueError(f"edge ({u}, {v}) out of range")
        # connectivity check via BFS from node 0
        if self.n_nodes > 1 and np.any(self._bfs(0) < 0):
            raise DisconnectedDeviceError("device graph is not connected")

    @property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(ns) for ns in adj]

    def _bfs(self, start: int) -> np.ndarray:
        dist = np.full(self.n_nodes, -1, dtype=np.int64)
        dist[start] = 0
        queue = deque([start])
        adj = self.adjacency
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in self.edge_set()


def distance_matrix(device: Device) -> np.ndarray:
    """All-pairs shortest-path hop counts (BFS from every node), cached."""
    cached = device._dist.get("D")
    if cached is None:
        rows = [device._bfs(s) for s in range(device.n_nodes)]
        cached = np.stack(rows).astype(np.int64)
        if np.any(cached < 0):
            raise DisconnectedDeviceError("device graph is not connected")
        device._dist["D"] = cached
    return cached


def make_grid(rows: int, cols: int) -> Device:
    """Rectangular lattice; node id = r*cols + c, coords normalized row-major."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ValueError("grid needs at least two nodes")
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    coords = np.empty((rows * cols, 2), dtype=np.float64)
    for r in range(rows):
        for c in range(cols):
            x = c / (cols - 1) if cols > 1 else 0.5
            y = r / (rows - 1) if rows > 1 else 0.5
            coords[r * cols + c] = (x, y)
    return Device(rows * cols, tuple(edges), coords, name=f"grid:{rows}x{cols}")


def make_tokyo(n: int) -> Device:
    """Tokyo-style topology: base grid plus the diagonal extra edges."""
    if n not in _TOKYO_EXTRA:
        raise ValueError(f"tokyo devices exist for 12, 16 or 20 qubits, not {n}")
    rows, cols = _TOKYO_SHAPE[n]
    grid = make_grid(rows, cols)
    edges = grid.edges + tuple(_TOKYO_EXTRA[n])
    return Device(n, edges, grid.coords, name=f"tokyo:{n}")


def device_from_json(text: str) -> Device:
    """Custom topology: {"n": int, "edges": [[u,v],...], "coords": [[x,y],...]}."""
    obj = json.loads(text)
    for key in ("n", "edges", "coords"):
        if key not in obj:
            raise ValueError(f'device JSON needs key "{key}"')
    return Device(int(obj["n"]), tuple((int(u), int(v)) for u, v in obj["edges"]),
                  np.asarray(obj["coords"], dtype=np.float64))


def device_from_spec(spec: str) -> Device:
    """Resolve 'grid:RxC', 'tokyo:N', or a path to a device JSON file."""
    if spec.startswith("grid:"):
        rows, _, cols = spec[5:].partition("x")
        return make_grid(int(rows), int(cols))
    if spec.startswith("tokyo:"):
        return make_tokyo(int(spec[6:]))
    with open(spec, "r", encoding="utf-8") as fh:
        dev = device_from_json(fh.read())
    return Device(dev.n_nodes, dev.edges, dev.coords, name=spec)

"""Assignment objective, decay-weighted effective flow, and step rewards.

The objective of a placement X for flow F and distances D is
Tr(F X D X^T), evaluated sparsely over the nonzero flow entries. A step
reward combines the objective decrease, a constant per-action penalty,
and a bonus per gate the action scheduled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import MappingError, ShapeMismatchError

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib


class Mapping:
    """Injective assignment of logical qubits to physical nodes.

    phys_of[i] is the node holding logical qubit i; log_of[u] is the
    qubit on node u (-1 when empty).
    """

    __slots__ = ("phys_of", "log_of", "n_nodes")

    def __init__(self, phys_of, n_nodes: int):
        phys_of = np.asarray(phys_of, dtype=np.int64)
        if phys_of.ndim != 1:
            raise MappingError("phys_of must be one-dimensional")
        if len(phys_of) > n_nodes:
            raise MappingError(
                f"{len(phys_of)} logical qubits exceed {n_nodes} device nodes"
            )
        if len(phys_of) and (phys_of.min() < 0 or phys_of.max() >= n_nodes):
            raise MappingError("mapping targets outside the device")
        if len(np.unique(phys_of)) != len(phys_of):
            raise MappingError("mapping is not injective")
        self.phys_of = phys_of
        self.n_nodes = n_nodes
        self.log_of = np.full(n_nodes, -1, dtype=np.int64)
        self.log_of[phys_of] = np.arange(len(phys_of), dtype=np.int64)

    @property
    def n_qubits(self) -> int:
        return len(self.phys_of)

    @classmethod
    def trivial(cls, n_qubits: int, n_nodes: int) -> "Mapping":
        return cls(np.arange(n_qubits), n_nodes)

    @classmethod
    def random(cls, n_qubits: int, n_nodes: int, seed) -> "Mapping":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(rng.permutation(n_nodes)[:n_qubits], n_nodes)

    def copy(self) -> "Mapping":
        return Mapping(self.phys_of.copy(), self.n_nodes)

    def swap_nodes(self, u: int, v: int) -> None:
        """Exchange the occupants of physical nodes u and v, in place."""
        a, b = self.log_of[u], self.log_of[v]
        if a >= 0:
            self.phys_of[a] = v
        if b >= 0:
            self.phys_of[b] = u
        self.log_of[u], self.log_of[v] = b, a

    def as_matrix(self) -> np.ndarray:
        """Dense 0/1 assignment matrix of shape (n_qubits, n_nodes)."""
        x = np.zeros((self.n_qubits, self.n_nodes), dtype=np.float64)
        x[np.arange(self.n_qubits), self.phys_of] = 1.0
        return x

    def __eq__(self, other):
        return (isinstance(other, Mapping) and self.n_nodes == other.n_nodes
                and np.array_equal(self.phys_of, other.phys_of))

    def __repr__(self):
        return f"Mapping({self.phys_of.tolist()}, n_nodes={self.n_nodes})"


@dataclass(frozen=True)
class RewardWeights:
    """Coefficients of the per-step reward and the lookahead schedule.

    reward_flow selects which flow the objective term sees: the
    decay-aggregated effective flow ("effective") or the bare current
    slice ("current").
    """

    lambda_qap: float = 1.0
    lambda_swap: float = 2.0
    lambda_gate: float = 2.0
    beta: float = -1.0
    gamma: float = 0.7
    horizon: int = 8
    reward_flow: str = "effective"

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.beta >= 0.0:
            raise ValueError("beta must be negative")
        if self.reward_flow not in ("effective", "current"):
            raise ValueError("reward_flow must be 'effective' or 'current'")


def load_weights(path) -> RewardWeights:
    """Read RewardWeights from a TOML or JSON config file."""
    path = str(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    obj = json.loads(raw) if path.endswith(".json") else tomllib.loads(raw.decode())
    known = {f for f in RewardWeights.__dataclass_fields__}
    unknown = set(obj) - known
    if unknown:
        raise ValueError(f"unknown reward config keys: {sorted(unknown)}")
    return RewardWeights(**obj)


def _check_shapes(mapping: Mapping, flow: np.ndarray, dist: np.ndarray) -> None:
    n_q, n_p = mapping.n_qubits, mapping.n_nodes
    if flow.shape != (n_q, n_q):
        raise ShapeMismatchError(f"flow shape {flow.shape} != ({n_q}, {n_q})")
    if dist.shape != (n_p, n_p):
        raise ShapeMismatchError(f"distance shape {dist.shape} != ({n_p}, {n_p})")


def qap_objective(mapping: Mapping, flow: np.ndarray, dist: np.ndarray) -> float:
    """Sum of F[i,j] * D[phys(i), phys(j)] over all ordered pairs."""
    flow = np.ascontiguousarray(flow, dtype=np.float64)
    dist = np.ascontiguousarray(dist, dtype=np.int64)
    _check_shapes(mapping, flow, dist)
    return _kernels.qap_objective(flow, dist, mapping.phys_of)


def effective_flow(slices, gamma: float, horizon: int) -> np.ndarray:
    """Decay-weighted aggregate sum(gamma^h * F[t+h], h=0..H).

    `slices` holds the flow matrices from the current slice onward;
    slices past the end of the circuit contribute zero.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must be in (0, 1)")
    if not slices:
        raise ValueError("need at least the current slice")
    agg = np.array(slices[0], dtype=np.float64, copy=True)
    for h in range(1, min(horizon, len(slices) - 1) + 1):
        agg += gamma**h * slices[h]
    return agg


def qap_reward(mapping_before: Mapping, flow_before: np.ndarray,
               mapping_after: Mapping, flow_after: np.ndarray,
               dist: np.ndarray) -> float:
    """Objective decrease across a transition; positive means improvement."""
    return (qap_objective(mapping_before, flow_before, dist)
            - qap_objective(mapping_after, flow_after, dist))


def total_reward(r_qap: float, n_scheduled: int, w: RewardWeights) -> float:
    """lambda_qap * r_qap + lambda_swap * beta + lambda_gate * |G|."""
    if n_scheduled < 0:
        raise ValueError("n_scheduled must be >= 0")
    return (w.lambda_qap * r_qap + w.lambda_swap * w.beta
            + w.lambda_gate * n_scheduled)

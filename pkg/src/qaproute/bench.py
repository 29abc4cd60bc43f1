"""Benchmark harness: route circuit suites and report CNOT overhead.

Each (circuit, router, mapping) combination yields one result row; the
routed schedule is re-validated against the replay oracle before the
row is emitted. Truncated or failed routes are kept as rows but
excluded from summary means.
"""

from __future__ import annotations

import csv
import glob
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .circuit import Circuit, load_circuit, random_circuit
from .device import Device, device_from_spec
from .env import validate_schedule
from .qap import Mapping
from .routers import (
    RoutedCircuit,
    route,
    route_bidirectional,
    route_with_policy,
)

ROW_FIELDS = ["circuit_id", "family", "n_qubits", "gate_count", "router",
              "mapping_seed", "inserted_cnots", "steps", "truncated",
              "wall_time_s"]


@dataclass(frozen=True)
class ResultRow:
    circuit_id: str
    family: str
    n_qubits: int
    gate_count: int
    router: str
    mapping_seed: int | None
    inserted_cnots: int
    steps: int
    truncated: bool
    wall_time_s: float


@dataclass(frozen=True)
class ExperimentSpec:
    circuits: str                      # glob pattern or "gen:N:COUNT:SEED"
    device: str                        # device spec string
    routers: tuple = ()                # (label, RouterConfig | "nn", passes)
    mapping: str = "trivial"           # "trivial" or "random:K:SEED"
    t_max: int = 1000
    out: str | None = None
    nn_checkpoint: str | None = None
    nn_seed: int = 0

    def __post_init__(self):
        if not self.routers:
            raise ValueError("need at least one router")


def circuit_family(circuit_id: str) -> str:
    """Family label from the filename prefix (MQTBench-style naming)."""
    stem = os.path.basename(circuit_id)
    for ext in (".qasm", ".json"):
        if stem.endswith(ext):
            stem = stem[: -len(ext)]
    head = stem.split("_")[0]
    return head if head and head.isalpha() else "unknown"


def _load_suite(spec_str: str) -> list[tuple[str, str, Circuit]]:
    """Expand the circuit spec into (id, family, circuit) triples."""
    if spec_str.startswith("gen:"):
        try:
            _, n, count, seed = spec_str.split(":")
            n, count, seed = int(n), int(count), int(seed)
        except ValueError:
            raise ValueError(f"bad generator spec {spec_str!r}, "
                             "expected gen:N:COUNT:SEED") from None
        return [(f"gen{n}-s{seed}-{i:03d}", "random", random_circuit(n, seed + i))
                for i in range(count)]
    paths = sorted(glob.glob(spec_str))
    if not paths:
        raise FileNotFoundError(f"no circuits match {spec_str!r}")
    return [(os.path.basename(p), circuit_family(p), load_circuit(p))
            for p in paths]


def _mappings(mapping_spec: str, n_qubits: int, n_nodes: int):
    if mapping_spec == "trivial":
        return [(None, Mapping.trivial(n_qubits, n_nodes))]
    if mapping_spec.startswith("random:"):
        try:
            _, count, seed = mapping_spec.split(":")
            count, seed = int(count), int(seed)
        except ValueError:
            raise ValueError(f"bad mapping spec {mapping_spec!r}, "
                             "expected random:K:SEED") from None
        return [(seed + i, Mapping.random(n_qubits, n_nodes,
                                          np.random.default_rng(seed + i)))
                for i in range(count)]
    raise ValueError(f"unknown mapping spec {mapping_spec!r}")


def _route_once(circuit: Circuit, device: Device, m0: Mapping, router,
                passes: int, t_max: int, nn_checkpoint, nn_seed) -> RoutedCircuit:
    if router == "nn":
        from .nn import EncoderParams, EncoderPolicy, load_params

        if nn_checkpoint:
            params = load_params(nn_checkpoint)
        else:
            params = EncoderParams.initialize(circuit.n_qubits, seed=nn_seed)
        return route_with_policy(circuit, device, m0,
                                 EncoderPolicy(params, device), t_max)
    if passes == 3:
        return route_bidirectional(circuit, device, m0, router, t_max)
    return route(circuit, device, m0, router, t_max)


def _run_task(task):
    (cid, family, circuit, device, label, router, passes, mapping,
     mseed, t_max, nn_checkpoint, nn_seed) = task
    start = time.perf_counter()
    try:
        routed = _route_once(circuit, device, mapping, router, passes,
                             t_max, nn_checkpoint, nn_seed)
        if not routed.truncated:
            validate_schedule(circuit, device, routed.initial_mapping,
                              routed.schedule)
        cnots, steps, truncated = (routed.inserted_cnots, routed.steps,
                                   routed.truncated)
    except Exception:
        cnots, steps, truncated = 0, 0, True
    wall = time.perf_counter() - start
    return ResultRow(cid, family, circuit.n_qubits, len(circuit.gates), label,
                     mseed, cnots, steps, truncated, round(wall, 6))


def run_experiment(spec: ExperimentSpec, out_stream=None) -> list[ResultRow]:
    """Route every (circuit, router, mapping) combination.

    Rows come back in deterministic nested order regardless of worker
    count; when out_stream is given they are also written incrementally
    as CSV. Worker count is 1 unless QAPR_THREADS is set.
    """
    device = device_from_spec(spec.device)
    suite = _load_suite(spec.circuits)
    tasks = []
    for cid, family, circuit in suite:
        for mseed, mapping in _mappings(spec.mapping, circuit.n_qubits,
                                        device.n_nodes):
            for label, router, passes in spec.routers:
                tasks.append((cid, family, circuit, device, label, router,
                              passes, mapping, mseed, spec.t_max,
                              spec.nn_checkpoint, spec.nn_seed))

    workers = max(1, int(os.environ.get("QAPR_THREADS", "1")))
    writer = None
    if out_stream is not None:
        writer = csv.writer(out_stream)
        writer.writerow(ROW_FIELDS)
    rows: list[ResultRow] = []

    def emit(row: ResultRow):
        rows.append(row)
        if writer is not None:
            writer.writerow([getattr(row, f) for f in ROW_FIELDS])
            out_stream.flush()

    if workers == 1 or len(tasks) < 2:
        for task in tasks:
            emit(_run_task(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for row in pool.map(_run_task, tasks, chunksize=1):
                emit(row)
    return rows


def summarize(rows: list[ResultRow], group_by: str = "router") -> list[dict]:
    """Mean/std of inserted CNOTs per group, truncated rows set aside."""
    if not rows:
        raise ValueError("no rows to summarize")
    if group_by not in ("router", "gate-range", "circuit-family"):
        raise ValueError(f"unknown grouping {group_by!r}")

    def key(row: ResultRow) -> str:
        if group_by == "router":
            return row.router
        if group_by == "circuit-family":
            return row.family
        low = (row.gate_count // 50) * 50
        return f"[{low},{low + 50})"

    groups: dict[str, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault(key(row), []).append(row)
    out = []
    for name in sorted(groups):
        members = groups[name]
        kept = [r.inserted_cnots for r in members if not r.truncated]
        out.append({
            "group": name,
            "count": len(kept),
            "truncated": sum(1 for r in members if r.truncated),
            "mean_cnots": round(float(np.mean(kept)), 4) if kept else None,
            "std_cnots": round(float(np.std(kept)), 4) if kept else None,
        })
    return out


def export(records, fmt: str = "csv") -> str:
    """Serialize rows or summary dicts with a stable column order."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown export format {fmt!r}")
    dicts = [asdict(r) if isinstance(r, ResultRow) else dict(r) for r in records]
    if fmt == "json":
        return json.dumps(dicts, indent=1) + "\n"
    fields = ROW_FIELDS if (dicts and "circuit_id" in dicts[0]) or not dicts \
        else list(dicts[0])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields)
    writer.writeheader()
    writer.writerows(dicts)
    return buf.getvalue()

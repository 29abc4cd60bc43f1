"""Logical circuits: parsing, ASAP time slicing, and flow matrices.

A circuit is an ordered list of two-qubit gates; the order defines the
dependency DAG (two gates sharing a qubit keep their relative order).
Slicing partitions the gates into depth layers of qubit-disjoint gates,
and each layer maps to a symmetric flow matrix counting the pending
interactions of every qubit pair.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DisjointnessError, QasmSyntaxError, UnsupportedGateError

CNOT = "cnot"
SWAP = "swap"


@dataclass(frozen=True)
class Gate:
    """Two-qubit gate on logical qubits (q_u, q_v)."""

    q_u: int
    q_v: int
    kind: str = CNOT

    def __post_init__(self):
        if self.q_u == self.q_v:
            raise ValueError(f"gate endpoints must differ, got ({self.q_u}, {self.q_v})")
        if self.q_u < 0 or self.q_v < 0:
            raise ValueError("gate endpoints must be non-negative")
        if self.kind not in (CNOT, SWAP):
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.q_u, self.q_v)


@dataclass(frozen=True)
class Circuit:
    """Logical circuit: gate list in dependency order over n_qubits qubits."""

    n_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if g.q_u >= self.n_qubits or g.q_v >= self.n_qubits:
                raise IndexError(
                    f"gate ({g.q_u}, {g.q_v}) references qubit >= {self.n_qubits}"
                )

    def __len__(self) -> int:
        return len(self.gates)

    def reversed(self) -> "Circuit":
        """Gate-reversed circuit (used by the backward refinement pass)."""
        return Circuit(self.n_qubits, tuple(reversed(self.gates)))


# --- parsing ---------------------------------------------------------------

_QREG_RE = re.compile(r"qreg\s+(\w+)\s*\[\s*(\d+)\s*\]")
_ARG_RE = re.compile(r"(\w+)\s*\[\s*(\d+)\s*\]")
# statements that carry no routing information and are skipped outright
_IGNORED_STMT = ("openqasm", "include", "creg", "barrier", "measure", "reset", "//")

_TWO_QUBIT_GATES = {"cx": CNOT, "swap": SWAP}


def _parse_qasm(text: str) -> Circuit:
    n_qubits = None
    gates = []
    lineno = 0
    for rawline in text.splitlines():
        lineno += 1
        line = rawline.split("//")[0].strip()
        if not line:
            continue
        for stmt in filter(None, (s.strip() for s in line.split(";"))):
            low = stmt.lower()
            if low.startswith(_IGNORED_STMT):
                continue
            if low.startswith("qreg"):
                m = _QREG_RE.match(low)
                if not m:
                    raise QasmSyntaxError(f"malformed qreg: {stmt!r}", lineno)
                if n_qubits is not None:
                    raise QasmSyntaxError("multiple qreg declarations", lineno)
                n_qubits = int(m.group(2))
                continue
            if n_qubits is None:
                raise QasmSyntaxError(f"gate before qreg: {stmt!r}", lineno)
            head = re.match(r"([a-zA-Z_][\w]*)", stmt)
            if not head:
                raise QasmSyntaxError(f"malformed statement: {stmt!r}", lineno)
            mnemonic = head.group(1).lower()
            args = _ARG_RE.findall(stmt[head.end():])
            if not args:
                raise QasmSyntaxError(f"no qubit arguments: {stmt!r}", lineno)
            qubits = [int(idx) for _, idx in args]
            for q in qubits:
                if q >= n_qubits:
                    raise IndexError(
                        f"line {lineno}: qubit {q} >= register size {n_qubits}"
                    )
            if len(qubits) == 1:
                continue  # single-qubit gates carry no routing constraint
            if len(qubits) > 2:
                raise UnsupportedGateError(
                    f"{mnemonic} acts on {len(qubits)} qubits", lineno
                )
            if mnemonic not in _TWO_QUBIT_GATES:
                raise UnsupportedGateError(
                    f"unknown two-qubit gate {mnemonic!r}", lineno
                )
            gates.append(Gate(qubits[0], qubits[1], _TWO_QUBIT_GATES[mnemonic]))
    if n_qubits is None:
        raise QasmSyntaxError("missing qreg declaration")
    return Circuit(n_qubits, tuple(gates))


def _parse_json(text: str) -> Circuit:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QasmSyntaxError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "n" not in obj or "gates" not in obj:
        raise QasmSyntaxError('JSON circuit needs keys "n" and "gates"')
    n = int(obj["n"])
    gates = []
    for entry in obj["gates"]:
        if len(entry) != 2:
            raise UnsupportedGateError(f"gate entry {entry!r} is not a pair")
        u, v = int(entry[0]), int(entry[1])
        if u >= n or v >= n:
            raise IndexError(f"gate ({u}, {v}) references qubit >= {n}")
        gates.append(Gate(u, v))
    return Circuit(n, tuple(gates))


def parse_circuit(source, fmt: str = "qasm") -> Circuit:
    """Parse a circuit from text/bytes in 'qasm' or 'json' format.

    The qasm subset understands qreg/cx/swap; single-qubit gates are
    accepted and dropped, unknown two-qubit mnemonics raise.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if fmt == "qasm":
        return _parse_qasm(source)
    if fmt == "json":
        return _parse_json(source)
    raise ValueError(f"unknown circuit format {fmt!r}")


def load_circuit(path) -> Circuit:
    """Load a circuit file, picking the format from the extension."""
    path = str(path)
    fmt = "json" if path.endswith(".json") else "qasm"
    with open(path, "r", encoding="utf-8") as fh:
        return parse_circuit(fh.read(), fmt)


# --- slicing ---------------------------------------------------------------

def slice_indices(circuit: Circuit) -> list[list[int]]:
    """ASAP layering as original gate indices: each gate lands in the
    earliest slice after all earlier gates that share one of its qubits."""
    avail = [0] * circuit.n_qubits
    slices: list[list[int]] = []
    for k, g in enumerate(circuit.gates):
        level = max(avail[g.q_u], avail[g.q_v])
        if level == len(slices):
            slices.append([])
        slices[level].append(k)
        avail[g.q_u] = avail[g.q_v] = level + 1
    return slices


def slice_circuit(circuit: Circuit) -> list[list[Gate]]:
    """ASAP layering of the gates themselves (see slice_indices)."""
    return [[circuit.gates[k] for k in layer] for layer in slice_indices(circuit)]


def slice_to_flow(gates, n_qubits: int) -> np.ndarray:
    """Flow matrix of one slice: F[i, j] = multiplicity of gate (i, j)."""
    flow = np.zeros((n_qubits, n_qubits), dtype=np.float64)
    seen: set[int] = set()
    for g in gates:
        if g.q_u in seen or g.q_v in seen:
            raise DisjointnessError(
                f"slice gates are not qubit-disjoint at ({g.q_u}, {g.q_v})"
            )
        seen.add(g.q_u)
        seen.add(g.q_v)
        flow[g.q_u, g.q_v] += 1.0
        flow[g.q_v, g.q_u] += 1.0
    return flow


def random_circuit(n_qubits: int, seed) -> Circuit:
    """Random two-qubit circuit: gate count uniform in [8*n, 16*n], each
    gate a uniformly sampled distinct pair. Deterministic per seed."""
    if n_qubits < 2:
        raise ValueError("random circuits need at least two qubits")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_gates = int(rng.integers(8 * n_qubits, 16 * n_qubits, endpoint=True))
    gates = []
    for _ in range(n_gates):
        u, v = rng.choice(n_qubits, size=2, replace=False)
        gates.append(Gate(int(u), int(v)))
    return Circuit(n_qubits, tuple(gates))

"""Step-level routing decision process.

An episode walks a circuit slice by slice. Every action is a SWAP on a
device edge; gates of the current slice whose endpoints become adjacent
are scheduled immediately, and slices that clear entirely advance the
episode (running a zero-cost scheduling pass on each newly entered
slice, so no action is ever charged for an already-satisfied gate).

States are owned by a single episode and mutated in place by step();
use RoutingState.copy() to branch a what-if simulation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .circuit import Circuit, Gate, slice_circuit, slice_to_flow
from .device import Device, distance_matrix
from .errors import EpisodeFinishedError, IllegalActionError, MappingError
from .qap import Mapping, RewardWeights, total_reward


@dataclass(frozen=True)
class ScheduledGate:
    """An original gate emitted into the routed schedule."""

    gate_index: int
    logical: tuple[int, int]
    physical: tuple[int, int]


@dataclass(frozen=True)
class InsertedSwap:
    """A SWAP inserted on a physical device edge."""

    edge: tuple[int, int]


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    scheduled_gates: tuple[Gate, ...]
    swaps_inserted: int
    done: bool
    truncated: bool


@dataclass(frozen=True)
class EpisodeSpec:
    """Immutable per-episode inputs, shared by all copies of a state."""

    circuit: Circuit
    device: Device
    weights: RewardWeights
    t_max: int
    dist: np.ndarray
    edges: np.ndarray  # (m, 2) int64, lexicographically sorted
    slices: tuple  # tuple of tuples of (gate_index, Gate)
    flows: tuple  # per-slice flow matrices


class RoutingState:
    """Mutable episode state: mapping, slice cursor, flow, pending gates."""

    __slots__ = ("spec", "mapping", "t", "flow", "pending", "future_agg",
                 "steps", "j", "done", "truncated", "schedule", "trace")

    def __init__(self, spec: EpisodeSpec, mapping: Mapping):
        self.spec = spec
        self.mapping = mapping
        self.t = 0
        self.flow = np.zeros((spec.circuit.n_qubits,) * 2)
        self.pending: list[tuple[int, Gate]] = []
        self.future_agg = np.zeros_like(self.flow)
        self.steps = 0
        self.j = 0
        self.done = False
        self.truncated = False
        self.schedule: list = []
        self.trace: list[dict] = []

    def copy(self) -> "RoutingState":
        dup = RoutingState.__new__(RoutingState)
        dup.spec = self.spec
        dup.mapping = self.mapping.copy()
        dup.t = self.t
        dup.flow = self.flow.copy()
        dup.pending = list(self.pending)
        dup.future_agg = self.future_agg  # recomputed on slice entry only
        dup.steps = self.steps
        dup.j = self.j
        dup.done = self.done
        dup.truncated = self.truncated
        dup.schedule = list(self.schedule)
        dup.trace = list(self.trace)
        return dup

    # flow the reward objective is evaluated on
    def reward_flow(self) -> np.ndarray:
        if self.spec.weights.reward_flow == "current":
            return self.flow
        return self.flow + self.future_agg

    def pending_pairs(self) -> np.ndarray:
        if not self.pending:
            return np.empty((0, 2), dtype=np.int64)
        return np.array([g.pair for _, g in self.pending], dtype=np.int64)

    def pending_total(self) -> int:
        """Gates not yet scheduled, current slice plus all future slices."""
        later = sum(len(s) for s in self.spec.slices[self.t + 1:]) if not self.done else 0
        return len(self.pending) + later


def _sorted_edges(device: Device) -> np.ndarray:
    if not device.edges:
        return np.empty((0, 2), dtype=np.int64)
    return np.array(sorted(device.edges), dtype=np.int64)


def make_spec(circuit: Circuit, device: Device, weights: RewardWeights,
              t_max: int = 1000) -> EpisodeSpec:
    if circuit.n_qubits > device.n_nodes:
        raise MappingError(
            f"circuit has {circuit.n_qubits} qubits but device only "
            f"{device.n_nodes} nodes"
        )
    layers = slice_circuit(circuit)
    indexed = []
    k = 0
    for layer in layers:
        indexed.append(tuple((k + i, g) for i, g in enumerate(layer)))
        k += len(layer)
    flows = tuple(slice_to_flow(layer, circuit.n_qubits) for layer in layers)
    return EpisodeSpec(circuit, device, weights, t_max,
                       distance_matrix(device), _sorted_edges(device),
                       tuple(indexed), flows)


def _enter_slice(state: RoutingState) -> None:
    spec = state.spec
    state.pending = list(spec.slices[state.t])
    state.flow = spec.flows[state.t].copy()
    state.j = 0
    w = spec.weights
    agg = np.zeros_like(state.flow)
    for h in range(1, w.horizon + 1):
        if state.t + h >= len(spec.flows):
            break
        agg += w.gamma**h * spec.flows[state.t + h]
    state.future_agg = agg


def _clear_adjacent(state: RoutingState) -> list[Gate]:
    """Schedule every pending gate whose endpoints are adjacent; returns them."""
    spec, pos = state.spec, state.mapping.phys_of
    cleared = []
    remaining = []
    for idx, g in state.pending:
        pu, pv = int(pos[g.q_u]), int(pos[g.q_v])
        if spec.dist[pu, pv] == 1:
            state.schedule.append(ScheduledGate(idx, g.pair, (pu, pv)))
            state.flow[g.q_u, g.q_v] = 0.0
            state.flow[g.q_v, g.q_u] = 0.0
            cleared.append(g)
        else:
            remaining.append((idx, g))
    state.pending = remaining
    return cleared


def _advance(state: RoutingState) -> None:
    """Zero-cost pass: clear adjacent gates, hop over slices that empty."""
    while True:
        if state.pending:
            _clear_adjacent(state)
            if state.pending:
                return
        if state.t + 1 >= len(state.spec.slices):
            state.done = True
            return
        state.t += 1
        _enter_slice(state)


def reset(circuit: Circuit, device: Device, initial_mapping: Mapping,
          weights: RewardWeights | None = None, t_max: int = 1000,
          spec: EpisodeSpec | None = None) -> RoutingState:
    """Start an episode; runs the zero-cost pass before any action."""
    if spec is None:
        spec = make_spec(circuit, device, weights or RewardWeights(), t_max)
    if initial_mapping.n_qubits != circuit.n_qubits:
        raise MappingError("mapping covers the wrong number of qubits")
    if initial_mapping.n_nodes != device.n_nodes:
        raise MappingError("mapping targets the wrong device size")
    state = RoutingState(spec, initial_mapping.copy())
    if not spec.slices:
        state.done = True
        return state
    _enter_slice(state)
    _advance(state)
    return state


def legal_actions(state: RoutingState) -> list[tuple[int, int]]:
    """All device edges, lexicographically sorted; state-independent."""
    if state.done or state.truncated:
        raise EpisodeFinishedError("episode is over")
    return [tuple(e) for e in state.spec.edges.tolist()]


def step(state: RoutingState, action: tuple[int, int]):
    """Apply one SWAP. Mutates and returns the state plus a StepOutcome."""
    if state.done or state.truncated:
        raise EpisodeFinishedError("episode is over")
    spec = state.spec
    u, v = int(action[0]), int(action[1])
    if u > v:
        u, v = v, u
    if not spec.device.has_edge(u, v):
        raise IllegalActionError(f"({u}, {v}) is not a device edge")

    qap_before = _kernels.qap_objective(state.reward_flow(), spec.dist,
                                        state.mapping.phys_of)

    state.mapping.swap_nodes(u, v)
    state.schedule.append(InsertedSwap((u, v)))
    state.steps += 1
    state.j += 1

    scheduled = _clear_adjacent(state)
    qap_after = _kernels.qap_objective(state.reward_flow(), spec.dist,
                                       state.mapping.phys_of)
    r_qap = qap_before - qap_after
    reward = total_reward(r_qap, len(scheduled), spec.weights)

    state.trace.append({
        "t": state.t, "j": state.j, "action": [u, v], "reward": reward,
        "scheduled": [g.pair for g in scheduled],
        "qap_before": qap_before, "qap_after": qap_after,
    })

    if not state.pending:
        _advance(state)
    if not state.done and state.steps >= spec.t_max:
        state.truncated = True
    outcome = StepOutcome(reward, tuple(scheduled), 1, state.done,
                          state.truncated)
    return state, outcome


def observation(state: RoutingState, horizon: int):
    """(X, F_t, future flow stack, D) copies; futures past T are zeros."""
    spec = state.spec
    futures = []
    for h in range(1, horizon + 1):
        if state.t + h < len(spec.flows) and not state.done:
            futures.append(spec.flows[state.t + h].copy())
        else:
            futures.append(np.zeros_like(state.flow))
    return (state.mapping.as_matrix(), state.flow.copy(), futures,
            spec.dist.copy())


def dump_trace(state: RoutingState, fh) -> None:
    """Write the per-step episode trace as JSON lines."""
    for rec in state.trace:
        fh.write(json.dumps(rec) + "\n")


# --- replay oracle ----------------------------------------------------------

def validate_schedule(circuit: Circuit, device: Device, initial_mapping: Mapping,
                      schedule) -> None:
    """Replay a routed schedule on a permutation simulator.

    Checks that every original gate executes exactly once on physically
    adjacent nodes, in an order consistent with the circuit's qubit
    dependencies, and that inserted swaps use device edges. Raises
    ValueError on the first violation.
    """
    dist = distance_matrix(device)
    mapping = initial_mapping.copy()
    executed: list[int] = []
    last_for_qubit = [-1] * circuit.n_qubits
    for item in schedule:
        if isinstance(item, InsertedSwap):
            u, v = item.edge
            if not device.has_edge(u, v):
                raise ValueError(f"swap on non-edge ({u}, {v})")
            mapping.swap_nodes(u, v)
            continue
        idx = item.gate_index
        gate = circuit.gates[idx]
        pu, pv = int(mapping.phys_of[gate.q_u]), int(mapping.phys_of[gate.q_v])
        if dist[pu, pv] != 1:
            raise ValueError(f"gate {idx} executed on non-adjacent nodes "
                             f"({pu}, {pv})")
        if {pu, pv} != set(item.physical):
            raise ValueError(f"gate {idx} recorded nodes {item.physical} but "
                             f"replay puts it on ({pu}, {pv})")
        for q in gate.pair:
            if last_for_qubit[q] > idx:
                raise ValueError(f"gate {idx} executed after gate "
                                 f"{last_for_qubit[q]} sharing qubit {q}")
            last_for_qubit[q] = idx
        executed.append(idx)
    if sorted(executed) != list(range(len(circuit.gates))):
        raise ValueError("schedule does not execute every gate exactly once")

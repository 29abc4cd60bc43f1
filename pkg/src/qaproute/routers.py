"""Complete routing policies built on the step environment.

Four deterministic routers share the environment: a shortest-path walker
(basic), front-layer distance minimization with and without a weighted
future term (sabre variants), and a one-step reward maximizer over the
assignment objective (qap_greedy). A forward-backward-forward wrapper
refines any of them with two extra passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .circuit import Circuit, Gate
from .device import Device
from .env import EpisodeSpec, RoutingState, make_spec, reset, step
from .qap import Mapping, RewardWeights

BASIC_SWAP = "basic_swap"
SABRE_BASIC = "sabre_basic"
SABRE_LOOKAHEAD = "sabre_lookahead"
QAP_GREEDY = "qap_greedy"


@dataclass(frozen=True)
class RouterConfig:
    kind: str = QAP_GREEDY
    omega: float = 0.5        # weight of the future term (sabre_lookahead)
    future_window: int = 10   # slices feeding the future gate set
    horizon: int = 8          # effective-flow horizon (qap_greedy)
    gamma: float = 0.7
    reward_flow: str = "effective"

    def __post_init__(self):
        if self.kind not in (BASIC_SWAP, SABRE_BASIC, SABRE_LOOKAHEAD, QAP_GREEDY):
            raise ValueError(f"unknown router kind {self.kind!r}")
        if self.omega < 0:
            raise ValueError("omega must be >= 0")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")

    def weights(self) -> RewardWeights:
        return RewardWeights(gamma=self.gamma, horizon=self.horizon,
                             reward_flow=self.reward_flow)


@dataclass(frozen=True)
class RoutedCircuit:
    """Routed schedule plus CNOT accounting (1 SWAP = 3 CNOTs)."""

    schedule: tuple
    initial_mapping: Mapping
    final_mapping: Mapping
    inserted_swaps: int
    inserted_cnots: int
    steps: int
    truncated: bool = False


def count_cnots(routed: RoutedCircuit) -> int:
    return 3 * routed.inserted_swaps


def _finish(state: RoutingState, m0: Mapping) -> RoutedCircuit:
    return RoutedCircuit(tuple(state.schedule), m0.copy(),
                         state.mapping.copy(), state.steps, 3 * state.steps,
                         state.steps, state.truncated)


def _first_pending(state: RoutingState):
    """Lexicographically smallest pending gate by original circuit index."""
    return min(state.pending, key=lambda ig: ig[0])[1]


def _walk_step(state: RoutingState, gate: Gate) -> tuple[int, int]:
    """Next shortest-path swap moving gate.q_u's node toward gate.q_v's,
    with lowest-node-id tie break among distance-reducing neighbors."""
    spec = state.spec
    pos = state.mapping.phys_of
    src, dst = int(pos[gate.q_u]), int(pos[gate.q_v])
    adj = spec.device.adjacency
    best = min(n for n in adj[src] if spec.dist[n, dst] < spec.dist[src, dst])
    return (src, best) if src < best else (best, src)


def route_basic_swap(circuit: Circuit, device: Device, m0: Mapping,
                     t_max: int = 1000,
                     spec: EpisodeSpec | None = None) -> RoutedCircuit:
    """Walk each pending gate along a shortest path until adjacent.

    Gates are taken in circuit order; a gate at distance d costs d - 1
    swaps unless an earlier swap happens to clear it along the way.
    """
    if spec is None:
        spec = make_spec(circuit, device, RewardWeights(), t_max)
    state = reset(circuit, device, m0, spec=spec)
    while not (state.done or state.truncated):
        state, _ = step(state, _walk_step(state, _first_pending(state)))
    return _finish(state, m0)


def _future_pairs(state: RoutingState, window: int) -> np.ndarray:
    spec = state.spec
    pairs = []
    for t in range(state.t + 1, min(state.t + 1 + window, len(spec.slices))):
        pairs.extend(g.pair for _, g in spec.slices[t])
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.array(pairs, dtype=np.int64)


def _sabre_candidates(state: RoutingState) -> np.ndarray:
    """Device edges touching at least one qubit of a front-layer gate."""
    pos = state.mapping.phys_of
    touched = {int(pos[q]) for _, g in state.pending for q in g.pair}
    edges = state.spec.edges
    mask = np.array([int(u) in touched or int(v) in touched for u, v in edges])
    return edges[mask]


def route_sabre(circuit: Circuit, device: Device, m0: Mapping,
                cfg: RouterConfig, t_max: int = 1000,
                spec: EpisodeSpec | None = None,
                decision_log: list | None = None) -> RoutedCircuit:
    """Front-layer distance-sum minimization over candidate swaps.

    The basic score is the sum of physical distances of the front-layer
    gates after the candidate swap; the lookahead variant averages it and
    adds omega times the mean distance of the gates in the next
    future_window slices. A liveness escape kicks in when no gate has
    been scheduled for n_nodes consecutive swaps: the lexicographically
    smallest pending gate is walked in on its shortest path, which the
    plain score cycle cannot guarantee.
    """
    if cfg.kind not in (SABRE_BASIC, SABRE_LOOKAHEAD):
        raise ValueError(f"route_sabre got config kind {cfg.kind!r}")
    lookahead = cfg.kind == SABRE_LOOKAHEAD
    if spec is None:
        spec = make_spec(circuit, device, RewardWeights(), t_max)
    state = reset(circuit, device, m0, spec=spec)
    stall = 0
    while not (state.done or state.truncated):
        if stall >= device.n_nodes:
            gate = _first_pending(state)
            while not (state.done or state.truncated):
                state, out = step(state, _walk_step(state, gate))
                if out.scheduled_gates:
                    break
            stall = 0
            continue
        cand = _sabre_candidates(state)
        future = _future_pairs(state, cfg.future_window) if lookahead \
            else np.empty((0, 2), dtype=np.int64)
        scores = _kernels.sabre_scores(spec.dist, state.mapping.phys_of,
                                       state.mapping.log_of, cand,
                                       state.pending_pairs(), future,
                                       cfg.omega, lookahead)
        pick = int(np.argmin(scores))
        if decision_log is not None:
            decision_log.append({
                "candidates": [tuple(e) for e in cand.tolist()],
                "scores": scores.tolist(),
                "chosen": tuple(cand[pick].tolist()),
                "front": [g.pair for _, g in state.pending],
                "mapping": state.mapping.phys_of.copy(),
            })
        state, out = step(state, tuple(cand[pick]))
        stall = 0 if out.scheduled_gates else stall + 1
    return _finish(state, m0)


def route_qap_greedy(circuit: Circuit, device: Device, m0: Mapping,
                     cfg: RouterConfig, t_max: int = 1000,
                     spec: EpisodeSpec | None = None,
                     decision_log: list | None = None) -> RoutedCircuit:
    """One-step total-reward maximization over every device edge.

    Each candidate swap is scored by the reward the environment would
    emit for it (objective decrease on the effective flow, action
    penalty, gate bonus); ties break to the lexicographically smallest
    edge. When the best reward stays at the bare action penalty for
    n_nodes consecutive steps, the router escapes the plateau by walking
    the lexicographically smallest pending gate in on a shortest path.
    """
    if cfg.kind != QAP_GREEDY:
        raise ValueError(f"route_qap_greedy got config kind {cfg.kind!r}")
    if spec is None:
        spec = make_spec(circuit, device, cfg.weights(), t_max)
    w = spec.weights  # keep kernel scoring aligned with env rewards
    state = reset(circuit, device, m0, spec=spec)
    penalty = w.lambda_swap * w.beta
    stall = 0
    while not (state.done or state.truncated):
        if stall >= device.n_nodes:
            gate = _first_pending(state)
            while not (state.done or state.truncated):
                state, out = step(state, _walk_step(state, gate))
                if out.scheduled_gates:
                    break
            stall = 0
            continue
        rewards, _ = _kernels.score_actions(
            state.reward_flow(), state.flow, spec.dist,
            state.mapping.phys_of, state.mapping.log_of, spec.edges,
            state.pending_pairs(), w.lambda_qap, penalty, w.lambda_gate)
        pick = int(np.argmax(rewards))
        if decision_log is not None:
            decision_log.append({
                "rewards": rewards.tolist(),
                "chosen": tuple(spec.edges[pick].tolist()),
                "mapping": state.mapping.phys_of.copy(),
            })
        state, out = step(state, tuple(spec.edges[pick]))
        stall = stall + 1 if rewards[pick] <= penalty + 1e-9 else 0
    return _finish(state, m0)


def route(circuit: Circuit, device: Device, m0: Mapping, cfg: RouterConfig,
          t_max: int = 1000) -> RoutedCircuit:
    """Dispatch on cfg.kind."""
    if cfg.kind == BASIC_SWAP:
        return route_basic_swap(circuit, device, m0, t_max)
    if cfg.kind in (SABRE_BASIC, SABRE_LOOKAHEAD):
        return route_sabre(circuit, device, m0, cfg, t_max)
    return route_qap_greedy(circuit, device, m0, cfg, t_max)


def route_bidirectional(circuit: Circuit, device: Device, m0: Mapping,
                        cfg: RouterConfig, t_max: int = 1000) -> RoutedCircuit:
    """Forward-backward-forward refinement.

    Pass 1 routes forward from m0; pass 2 routes the gate-reversed
    circuit from pass 1's final layout; pass 3 routes the original
    circuit from pass 2's final layout and is the reported result.
    """
    first = route(circuit, device, m0, cfg, t_max)
    if first.truncated:
        return first
    backward = route(circuit.reversed(), device, first.final_mapping, cfg, t_max)
    if backward.truncated:
        return first
    return route(circuit, device, backward.final_mapping, cfg, t_max)


def route_with_policy(circuit: Circuit, device: Device, m0: Mapping,
                      policy, t_max: int = 1000, rng=None) -> RoutedCircuit:
    """Drive an episode with a policy callback.

    `policy(state)` returns one logit per device edge (legal-action
    order). With an rng the action is sampled from the softmax; without
    one the argmax is taken, which keeps the route deterministic.
    """
    spec = make_spec(circuit, device, RewardWeights(), t_max)
    state = reset(circuit, device, m0, spec=spec)
    while not (state.done or state.truncated):
        logits = np.asarray(policy(state), dtype=np.float64)
        if logits.shape != (len(spec.edges),):
            raise ValueError("policy must emit one logit per device edge")
        if rng is None:
            pick = int(np.argmax(logits))
        else:
            z = np.exp(logits - logits.max())
            pick = int(rng.choice(len(z), p=z / z.sum()))
        state, _ = step(state, tuple(spec.edges[pick]))
    return _finish(state, m0)

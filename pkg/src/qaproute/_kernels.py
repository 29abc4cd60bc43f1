"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

The jitted path is the default. Set ``QAPROUTE_BACKEND=numpy`` to force the
vectorized numpy fallback (used by the kernel benchmark and as a safety net
on platforms without a working numba install). Both paths are kept in this
module and tested against each other.

Conventions shared by every kernel:
  pos[i]   physical node currently holding logical qubit i (len n_q)
  occ[u]   logical qubit sitting on physical node u, -1 if empty (len n_p)
  flow     symmetric zero-diagonal float64 (n_q, n_q)
  dist     symmetric int64 hop-count matrix (n_p, n_p)
  edges    int64 (m, 2) array of device edges, lexicographically sorted
"""

import os

import numpy as np

BACKEND = os.environ.get("QAPROUTE_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"QAPROUTE_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")

if BACKEND == "numba":
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - exercised only without numba
        BACKEND = "numpy"

_JIT_OPTS = dict(cache=True, nogil=True)


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------

def qap_objective_np(flow, dist, pos):
    """Tr(F X D X^T) as the full double sum over ordered qubit pairs."""
    return float(np.sum(flow * dist[np.ix_(pos, pos)]))


def swap_deltas_np(flow, dist, pos, occ, edges):
    """Objective change of every edge swap, without any gate clearing."""
    m = len(edges)
    out = np.zeros(m, dtype=np.float64)
    for e in range(m):
        u, v = edges[e]
        a, b = occ[u], occ[v]
        du = dist[u][pos]
        dv = dist[v][pos]
        if a >= 0 and b >= 0:
            d = np.dot(flow[a] - flow[b], dv - du)
            # the k in {a, b} terms cancel by symmetry of flow and dist
            d -= (flow[a, b] - flow[b, b]) * (dv[b] - du[b])
            d -= (flow[a, a] - flow[b, a]) * (dv[a] - du[a])
        elif a >= 0:
            d = np.dot(flow[a], dv - du) - flow[a, a] * (dv[a] - du[a])
        elif b >= 0:
            d = np.dot(flow[b], du - dv) - flow[b, b] * (du[b] - dv[b])
        else:
            d = 0.0
        out[e] = 2.0 * d
    return out


def score_actions_np(flow_used, flow_cur, dist, pos, occ, edges, pend,
                     lam_qap, penalty, lam_gate):
    """Per-edge one-step reward for the greedy router.

    flow_used is the flow the QAP term is evaluated on (effective or
    current-slice); flow_cur supplies the weight removed when a pending
    gate clears. Returns (rewards, n_scheduled).
    """
    m = len(edges)
    rewards = np.empty(m, dtype=np.float64)
    nsched = np.zeros(m, dtype=np.int64)
    deltas = swap_deltas_np(flow_used, dist, pos, occ, edges)
    for e in range(m):
        u, v = edges[e]
        a, b = occ[u], occ[v]
        bonus = 0.0
        cleared = 0
        for g in range(len(pend)):
            i, j = pend[g]
            pi = v if i == a else (u if i == b else pos[i])
            pj = v if j == a else (u if j == b else pos[j])
            if dist[pi, pj] == 1:
                cleared += 1
                bonus += 2.0 * flow_cur[i, j]
        rewards[e] = lam_qap * (bonus - deltas[e]) + penalty + lam_gate * cleared
        nsched[e] = cleared
    return rewards, nsched


def sabre_scores_np(dist, pos, occ, cand, front, future, omega, lookahead):
    """Front-layer distance score of each candidate swap (lower is better)."""
    m = len(cand)
    scores = np.empty(m, dtype=np.float64)
    fpos = pos[front] if len(front) else None
    gpos = pos[future] if len(future) else None
    for e in range(m):
        u, v = cand[e]
        a, b = occ[u], occ[v]

        def moved(p):
            p = p.copy()
            if a >= 0:
                p[p == pos[a]] = -2
            if b >= 0:
                p[p == pos[b]] = u
            if a >= 0:
                p[p == -2] = v
            return p

        fr = 0.0
        if fpos is not None:
            fp = moved(fpos)
            fr = float(np.sum(dist[fp[:, 0], fp[:, 1]]))
        if not lookahead:
            scores[e] = fr
            continue
        s = fr / len(front)
        if gpos is not None:
            gp = moved(gpos)
            s += omega * float(np.mean(dist[gp[:, 0], gp[:, 1]]))
        scores[e] = s
    return scores


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if BACKEND == "numba":

    @njit(**_JIT_OPTS)
    def _qap_objective_jit(flow, dist, pos):
        n = flow.shape[0]
        total = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                f = flow[i, j]
                if f != 0.0:
                    total += 2.0 * f * dist[pos[i], pos[j]]
        return total

    @njit(**_JIT_OPTS)
    def _swap_delta_one(flow, dist, pos, u, v, a, b):
        n = flow.shape[0]
        d = 0.0
        if a >= 0 and b >= 0:
            for k in range(n):
                if k != a and k != b:
                    d += (flow[a, k] - flow[b, k]) * (
                        dist[v, pos[k]] - dist[u, pos[k]]
                    )
        elif a >= 0:
            for k in range(n):
                if k != a:
                    d += flow[a, k] * (dist[v, pos[k]] - dist[u, pos[k]])
        elif b >= 0:
            for k in range(n):
                if k != b:
                    d += flow[b, k] * (dist[u, pos[k]] - dist[v, pos[k]])
        return 2.0 * d

    @njit(**_JIT_OPTS)
    def _swap_deltas_jit(flow, dist, pos, occ, edges):
        m = edges.shape[0]
        out = np.empty(m, dtype=np.float64)
        for e in range(m):
            u = edges[e, 0]
            v = edges[e, 1]
            out[e] = _swap_delta_one(flow, dist, pos, u, v, occ[u], occ[v])
        return out

    @njit(**_JIT_OPTS)
    def _score_actions_jit(flow_used, flow_cur, dist, pos, occ, edges, pend,
                           lam_qap, penalty, lam_gate):
        m = edges.shape[0]
        rewards = np.empty(m, dtype=np.float64)
        nsched = np.zeros(m, dtype=np.int64)
        for e in range(m):
            u = edges[e, 0]
            v = edges[e, 1]
            a = occ[u]
            b = occ[v]
            delta = _swap_delta_one(flow_used, dist, pos, u, v, a, b)
            bonus = 0.0
            cleared = 0
            for g in range(pend.shape[0]):
                i = pend[g, 0]
                j = pend[g, 1]
                pi = pos[i]
                if i == a:
                    pi = v
                elif i == b:
                    pi = u
                pj = pos[j]
                if j == a:
                    pj = v
                elif j == b:
                    pj = u
                if dist[pi, pj] == 1:
                    cleared += 1
                    bonus += 2.0 * flow_cur[i, j]
            rewards[e] = lam_qap * (bonus - delta) + penalty + lam_gate * cleared
            nsched[e] = cleared
        return rewards, nsched

    @njit(**_JIT_OPTS)
    def _sabre_scores_jit(dist, pos, occ, cand, front, future, omega, lookahead):
        m = cand.shape[0]
        scores = np.empty(m, dtype=np.float64)
        for e in range(m):
            u = cand[e, 0]
            v = cand[e, 1]
            a = occ[u]
            b = occ[v]
            fr = 0.0
            for g in range(front.shape[0]):
                i = front[g, 0]
                j = front[g, 1]
                pi = pos[i]
                if i == a:
                    pi = v
                elif i == b:
                    pi = u
                pj = pos[j]
                if j == a:
                    pj = v
                elif j == b:
                    pj = u
                fr += dist[pi, pj]
            if not lookahead:
                scores[e] = fr
                continue
            s = fr / front.shape[0]
            if future.shape[0] > 0:
                fu = 0.0
                for g in range(future.shape[0]):
                    i = future[g, 0]
                    j = future[g, 1]
                    pi = pos[i]
                    if i == a:
                        pi = v
                    elif i == b:
                        pi = u
                    pj = pos[j]
                    if j == a:
                        pj = v
                    elif j == b:
                        pj = u
                    fu += dist[pi, pj]
                s += omega * fu / future.shape[0]
            scores[e] = s
        return scores

    def qap_objective_nb(flow, dist, pos):
        return float(_qap_objective_jit(flow, dist, pos))

    qap_objective = qap_objective_nb
    swap_deltas = _swap_deltas_jit
    score_actions = _score_actions_jit
    sabre_scores = _sabre_scores_jit
else:
    qap_objective = qap_objective_np
    swap_deltas = swap_deltas_np
    score_actions = score_actions_np
    sabre_scores = sabre_scores_np

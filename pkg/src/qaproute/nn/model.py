"""Solution-aware policy encoder at toy scale.

Logical qubits are one-hot tokens mixed by attention whose per-head
probabilities are multiplicatively biased by the (effective) flow
matrix; physical placements are coordinate projections propagated
through distance-kernel residual layers. Both embeddings are fused,
passed through one attention layer biased by the product of flow and
distance, and read out by symmetric per-edge policy scores and a pooled
value.

The attention bias rule keeps rows stochastic: with A0 the ordinary
softmax attention, B the bias matrix row-max-normalized into [0, 1],
m_h a learned per-head scale and eps = 1e-3,

    A_h = rownorm( A0 * (softplus(m_h) * B + eps) ).

The eps floor makes all-zero bias rows fall back to plain attention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..device import Device, distance_matrix
from ..errors import NonFiniteError, NonSymmetricFlowError, SingularNormalizationError
from ..qap import Mapping
from . import autodiff as ad
from .autodiff import Tensor

BIAS_EPS = 1e-3


@dataclass(frozen=True)
class PolicyOutput:
    logits: np.ndarray  # one score per device edge, legal-action order
    value: float


class EncoderParams:
    """Named parameter arrays plus the width/depth hyperparameters."""

    def __init__(self, n_qubits: int, d: int = 16, layers: int = 2,
                 heads: int = 2, tensors: dict | None = None):
        if d % heads != 0:
            raise ValueError("head count must divide the hidden width")
        self.n_qubits = n_qubits
        self.d = d
        self.layers = layers
        self.heads = heads
        self.d_k = d // heads
        self.tensors = tensors if tensors is not None else {}

    def spec(self) -> list[tuple[str, tuple[int, ...]]]:
        """Deterministic (name, shape) layout of every parameter."""
        n, d, dk, h = self.n_qubits, self.d, self.d_k, self.heads
        out: list[tuple[str, tuple[int, ...]]] = [("embed.W", (n, d))]

        def attn_block(prefix: str):
            out.append((f"{prefix}.ln1.g", (d,)))
            out.append((f"{prefix}.ln1.b", (d,)))
            for i in range(h):
                out.append((f"{prefix}.attn.wq.{i}", (d, dk)))
                out.append((f"{prefix}.attn.wk.{i}", (d, dk)))
                out.append((f"{prefix}.attn.wv.{i}", (d, dk)))
            out.append((f"{prefix}.attn.wo", (d, d)))
            out.append((f"{prefix}.attn.bo", (d,)))
            out.append((f"{prefix}.attn.mix", (h,)))
            out.append((f"{prefix}.ln2.g", (d,)))
            out.append((f"{prefix}.ln2.b", (d,)))
            out.append((f"{prefix}.ffn.w1", (d, d)))
            out.append((f"{prefix}.ffn.b1", (d,)))
            out.append((f"{prefix}.ffn.w2", (d, d)))
            out.append((f"{prefix}.ffn.b2", (d,)))

        for layer in range(self.layers):
            attn_block(f"logical.{layer}")
        out.append(("logical.out_ln.g", (d,)))
        out.append(("logical.out_ln.b", (d,)))
        out.append(("phys.proj.w", (2, d)))
        out.append(("phys.proj.b", (d,)))
        for layer in range(self.layers):
            out.append((f"phys.{layer}.w", (d, d)))
            out.append((f"phys.{layer}.b", (d,)))
        out.append(("fuse.in.w1", (2 * d, d)))
        out.append(("fuse.in.b1", (d,)))
        out.append(("fuse.in.w2", (d, d)))
        out.append(("fuse.in.b2", (d,)))
        attn_block("fuse")
        out.append(("fuse.out_ln.g", (d,)))
        out.append(("fuse.out_ln.b", (d,)))
        out.append(("policy.w1", (2 * d, d)))
        out.append(("policy.b1", (d,)))
        out.append(("policy.w2", (d, 1)))
        out.append(("policy.b2", (1,)))
        out.append(("value.w1", (d, d)))
        out.append(("value.b1", (d,)))
        out.append(("value.w2", (d, 1)))
        out.append(("value.b2", (1,)))
        return out

    @classmethod
    def initialize(cls, n_qubits: int, d: int = 16, layers: int = 2,
                   heads: int = 2, seed: int = 0) -> "EncoderParams":
        """Seeded uniform [-1/sqrt(d), 1/sqrt(d)] init for every array."""
        params = cls(n_qubits, d, layers, heads)
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(d)
        for name, shape in params.spec():
            params.tensors[name] = rng.uniform(-bound, bound, size=shape)
        return params

    def n_parameters(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.n_qubits, self.d, self.layers, self.heads,
                             {k: v.copy() for k, v in self.tensors.items()})


def save_params(params: EncoderParams, path) -> None:
    """Flat little-endian float64 blob plus a JSON shape sidecar."""
    path = str(path)
    spec = params.spec()
    flat = np.concatenate([params.tensors[n].ravel() for n, _ in spec])
    flat.astype("<f8").tofile(path)
    sidecar = {
        "n_qubits": params.n_qubits, "d": params.d,
        "layers": params.layers, "heads": params.heads,
        "names": [[n, list(s)] for n, s in spec],
    }
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1)


def load_params(path) -> EncoderParams:
    path = str(path)
    with open(path + ".json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    params = EncoderParams(sidecar["n_qubits"], sidecar["d"],
                           sidecar["layers"], sidecar["heads"])
    flat = np.fromfile(path, dtype="<f8")
    offset = 0
    for name, shape in sidecar["names"]:
        size = int(np.prod(shape))
        params.tensors[name] = flat[offset:offset + size].reshape(shape).copy()
        offset += size
    if offset != flat.size:
        raise ValueError("checkpoint size does not match its sidecar")
    return params


# --- forward pieces ---------------------------------------------------------

def _normalize_bias(bias: np.ndarray) -> np.ndarray:
    """Row-max normalization into [0, 1]; all-zero rows stay zero."""
    rowmax = bias.max(axis=1, keepdims=True)
    return np.divide(bias, rowmax, out=np.zeros_like(bias), where=rowmax > 0)


def _attn_block(z: Tensor, bias_norm: np.ndarray, prefix: str, pt: dict,
                heads: int, d_k: int) -> Tensor:
    """Pre-norm residual attention + FFN with multiplicative bias mixing."""
    zn = ad.layer_norm(z, pt[f"{prefix}.ln1.g"], pt[f"{prefix}.ln1.b"])
    outs = []
    for i in range(heads):
        q = zn @ pt[f"{prefix}.attn.wq.{i}"]
        k = zn @ pt[f"{prefix}.attn.wk.{i}"]
        v = zn @ pt[f"{prefix}.attn.wv.{i}"]
        scores = ad.mul(q @ ad.transpose(k), 1.0 / np.sqrt(d_k))
        a0 = ad.softmax_rows(scores)
        mix = ad.softplus(ad.take_rows(pt[f"{prefix}.attn.mix"], np.array([i])))
        biased = ad.mul(a0, ad.add(ad.mul(mix, bias_norm), BIAS_EPS))
        attn = ad.div(biased, ad.tsum(biased, axis=1, keepdims=True))
        outs.append(attn @ v)
    mha = ad.add(ad.concat(outs, axis=1) @ pt[f"{prefix}.attn.wo"],
                 pt[f"{prefix}.attn.bo"])
    z = ad.add(z, mha)
    zn = ad.layer_norm(z, pt[f"{prefix}.ln2.g"], pt[f"{prefix}.ln2.b"])
    ffn = ad.add(ad.relu(ad.add(zn @ pt[f"{prefix}.ffn.w1"],
                                pt[f"{prefix}.ffn.b1"])) @ pt[f"{prefix}.ffn.w2"],
                 pt[f"{prefix}.ffn.b2"])
    return ad.add(z, ffn)


def _check_flow(flow: np.ndarray, n_qubits: int) -> np.ndarray:
    flow = np.asarray(flow, dtype=np.float64)
    if flow.shape != (n_qubits, n_qubits):
        raise NonSymmetricFlowError(f"flow shape {flow.shape} does not match "
                                    f"{n_qubits} qubits")
    if not np.allclose(flow, flow.T) or np.any(np.diag(flow) != 0):
        raise NonSymmetricFlowError("flow must be symmetric with zero diagonal")
    return flow


def _logical_t(flow: np.ndarray, pt: dict, hp: EncoderParams) -> Tensor:
    bias = _normalize_bias(flow)
    z = ad._wrap(pt["embed.W"])  # one-hot tokens: E = I, so Z0 = W_E
    for layer in range(hp.layers):
        z = _attn_block(z, bias, f"logical.{layer}", pt, hp.heads, hp.d_k)
    return ad.layer_norm(z, pt["logical.out_ln.g"], pt["logical.out_ln.b"])


def _logical_distances(mapping: Mapping, dist: np.ndarray) -> np.ndarray:
    pos = mapping.phys_of
    return dist[np.ix_(pos, pos)].astype(np.float64)


def _physical_t(mapping: Mapping, device: Device, pt: dict,
                hp: EncoderParams) -> Tensor:
    coords = device.coords[mapping.phys_of]  # placement in logical order
    delta = _logical_distances(mapping, distance_matrix(device))
    rowsum = delta.sum(axis=1)
    if np.any(rowsum == 0):
        raise SingularNormalizationError(
            "distance kernel has an all-zero row (single-qubit circuit?)")
    inv_sqrt = 1.0 / np.sqrt(rowsum)
    delta_norm = delta * inv_sqrt[:, None] * inv_sqrt[None, :]
    z = ad.add(ad._wrap(coords) @ pt["phys.proj.w"], pt["phys.proj.b"])
    for layer in range(hp.layers):
        update = ad.add(z @ pt[f"phys.{layer}.w"], pt[f"phys.{layer}.b"])
        z = ad.add(z, ad.relu(ad._wrap(delta_norm) @ update))
    return z


def _fuse_head_t(z_log: Tensor, z_phys: Tensor, flow: np.ndarray,
                 delta_logical: np.ndarray, occ: np.ndarray,
                 edges: np.ndarray, pt: dict, hp: EncoderParams):
    cat = ad.concat([z_log, z_phys], axis=1)
    z = ad.add(ad.relu(ad.add(cat @ pt["fuse.in.w1"], pt["fuse.in.b1"]))
               @ pt["fuse.in.w2"], pt["fuse.in.b2"])
    bias = _normalize_bias(flow @ delta_logical)
    z = _attn_block(z, bias, "fuse", pt, hp.heads, hp.d_k)
    z = ad.layer_norm(z, pt["fuse.out_ln.g"], pt["fuse.out_ln.b"])

    a_idx = occ[edges[:, 0]]
    b_idx = occ[edges[:, 1]]
    mask_a = (a_idx >= 0).astype(np.float64)[:, None]
    mask_b = (b_idx >= 0).astype(np.float64)[:, None]
    za = ad.mul(ad.take_rows(z, np.maximum(a_idx, 0)), mask_a)
    zb = ad.mul(ad.take_rows(z, np.maximum(b_idx, 0)), mask_b)
    feat = ad.concat([ad.add(za, zb), ad.absolute(ad.sub(za, zb))], axis=1)
    hidden = ad.relu(ad.add(feat @ pt["policy.w1"], pt["policy.b1"]))
    logits = ad.add(hidden @ pt["policy.w2"], pt["policy.b2"])

    pooled = ad.tmean(z, axis=0, keepdims=True)
    vh = ad.relu(ad.add(pooled @ pt["value.w1"], pt["value.b1"]))
    value = ad.add(vh @ pt["value.w2"], pt["value.b2"])
    return logits, value


def _to_tensors(params: EncoderParams) -> dict:
    return {name: Tensor(arr) for name, arr in params.tensors.items()}


def _sorted_edges(device: Device) -> np.ndarray:
    return np.array(sorted(device.edges), dtype=np.int64)


# --- public surface ---------------------------------------------------------

def encode_logical(flow: np.ndarray, params: EncoderParams) -> np.ndarray:
    """Flow-biased attention embedding of the logical qubits, (n_q, d)."""
    flow = _check_flow(flow, params.n_qubits)
    return _logical_t(flow, _to_tensors(params), params).v


def encode_physical(mapping: Mapping, device: Device,
                    params: EncoderParams) -> np.ndarray:
    """Distance-kernel embedding of the occupied nodes, (n_q, d)."""
    return _physical_t(mapping, device, _to_tensors(params), params).v


def fuse_and_head(z_log: np.ndarray, z_phys: np.ndarray, flow: np.ndarray,
                  delta_logical: np.ndarray, mapping: Mapping, device: Device,
                  params: EncoderParams) -> PolicyOutput:
    """Fuse precomputed embeddings and evaluate the policy/value heads."""
    logits, value = _fuse_head_t(
        Tensor(z_log), Tensor(z_phys), np.asarray(flow, dtype=np.float64),
        np.asarray(delta_logical, dtype=np.float64), mapping.log_of,
        _sorted_edges(device), _to_tensors(params), params)
    return PolicyOutput(logits.v[:, 0].copy(), float(value.v[0, 0]))


def forward(flow: np.ndarray, mapping: Mapping, device: Device,
            params: EncoderParams) -> PolicyOutput:
    """Full stack: encoders, fusion, heads."""
    logits, value = _forward_t(flow, mapping, device, _to_tensors(params), params)
    out = PolicyOutput(logits.v[:, 0].copy(), float(value.v[0, 0]))
    if not (np.all(np.isfinite(out.logits)) and np.isfinite(out.value)):
        raise NonFiniteError("forward pass produced non-finite outputs")
    return out


def _forward_t(flow, mapping, device, pt, hp):
    flow = _check_flow(flow, hp.n_qubits)
    z_log = _logical_t(flow, pt, hp)
    z_phys = _physical_t(mapping, device, pt, hp)
    delta = _logical_distances(mapping, distance_matrix(device))
    return _fuse_head_t(z_log, z_phys, flow, delta, mapping.log_of,
                        _sorted_edges(device), pt, hp)


# --- gradient verification ---------------------------------------------------

def _probe_state(params: EncoderParams, seed: int = 0):
    """Deterministic random (flow, mapping, device) triple for grad checks."""
    from ..device import make_grid

    n = params.n_qubits
    rng = np.random.default_rng(seed)
    device = make_grid(2, (n + 1) // 2) if n >= 4 else make_grid(1, max(n, 2))
    raw = rng.uniform(0.0, 1.0, size=(n, n)) * rng.integers(0, 2, size=(n, n))
    flow = np.triu(raw, k=1)
    flow = flow + flow.T
    mapping = Mapping.random(n, device.n_nodes, rng)
    return flow, mapping, device


def grad_check(loss: str, params: EncoderParams, probe_count: int = 20,
               state=None, seed: int = 0, fd_step: float = 1e-5,
               loss_weight: float = 1.0) -> float:
    """Max relative error of tape gradients vs central finite differences.

    loss is "sum-of-logits" or "value". Relative error uses a small
    floor so coordinates the loss does not touch compare against the
    finite-difference noise floor rather than zero.
    """
    if loss not in ("sum-of-logits", "value"):
        raise ValueError(f"unknown loss {loss!r}")
    if probe_count < 1:
        raise ValueError("probe_count must be >= 1")
    flow, mapping, device = state if state is not None else _probe_state(params, seed)

    def loss_value(p: EncoderParams, want_grads: bool):
        pt = _to_tensors(p)
        logits, value = _forward_t(flow, mapping, device, pt, p)
        target = ad.tsum(logits) if loss == "sum-of-logits" else ad.tsum(value)
        target = ad.mul(target, loss_weight)
        if not np.isfinite(target.v):
            raise NonFiniteError("loss is not finite")
        if not want_grads:
            return float(target.v)
        target.backward()
        return float(target.v), {n: t.grad for n, t in pt.items()}

    _, grads = loss_value(params, True)
    for g in grads.values():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("analytic gradient is not finite")

    spec = params.spec()
    sizes = np.array([int(np.prod(s)) for _, s in spec])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed + 1)
    coords = rng.choice(total, size=min(probe_count, total), replace=False)

    worst = 0.0
    for flat_index in coords:
        block = int(np.searchsorted(np.cumsum(sizes), flat_index, side="right"))
        name, shape = spec[block]
        inner = flat_index - int(np.cumsum(sizes)[block]) + sizes[block]
        idx = np.unravel_index(inner, shape)
        perturbed = params.copy()
        perturbed.tensors[name][idx] += fd_step
        hi = loss_value(perturbed, False)
        perturbed.tensors[name][idx] -= 2.0 * fd_step
        lo = loss_value(perturbed, False)
        fd = (hi - lo) / (2.0 * fd_step)
        analytic = float(grads[name][idx])
        err = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-3)
        worst = max(worst, err)
    return worst


# --- env glue ----------------------------------------------------------------

class EncoderPolicy:
    """Callable policy over routing states, usable with route_with_policy."""

    def __init__(self, params: EncoderParams, device: Device):
        self.params = params
        self.device = device

    def __call__(self, state) -> np.ndarray:
        mapping = state.mapping
        return forward(state.reward_flow(), mapping, self.device,
                       self.params).logits

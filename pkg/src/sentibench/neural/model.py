"""BiLSTM + attention classifier: parameters, forward pass and exact backprop.

Architecture (default dimensions in brackets)::

    embedding [V x 64]
    -> BiLSTM layer 1 [64 -> 2 x 128]
    -> BiLSTM layer 2 [256 -> 2 x 128]
    -> attention pooling: score_t = H_t . v + b, softmax over non-PAD steps
    -> Linear(256 -> 64) -> ReLU -> Dropout -> Linear(64 -> 2)

Gate blocks are stacked ``i, f, g, o`` and every LSTM has two bias vectors
(``b_ih`` and ``b_hh``). Padded steps leave the recurrent state untouched and
emit zeros, so appending PAD never changes logits or gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

DIRECTIONS = ("fwd", "bwd")


@dataclass(frozen=True)
class HyperParams:
    embed_dim: int = 64
    hidden_dim1: int = 128
    hidden_dim2: int = 128
    head_dim: int = 64
    dropout: float = 0.4483
    lr: float = 0.0038
    weight_decay: float = 0.00107
    label_smoothing: float = 7.8e-5
    batch_size: int = 128
    max_len: int = 128
    max_epochs: int = 10
    patience: int = 3
    vocab_cap: int = 13600

    def __post_init__(self):
        for name in ("embed_dim", "hidden_dim1", "hidden_dim2", "head_dim", "batch_size",
                     "max_len", "max_epochs", "patience", "vocab_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        if not 0 <= self.label_smoothing < 1:
            raise ValueError("label_smoothing must lie in [0, 1)")
        if self.lr <= 0 or self.weight_decay < 0:
            raise ValueError("lr must be positive and weight_decay non-negative")


def layer_dims(hp: HyperParams) -> list[tuple[int, int, int]]:
    """(layer index, input size, hidden size) for both BiLSTM layers."""
    return [(1, hp.embed_dim, hp.hidden_dim1), (2, 2 * hp.hidden_dim1, hp.hidden_dim2)]


def param_shapes(hp: HyperParams, vocab_size: int) -> dict[str, tuple]:
    """Tensor names and shapes in checkpoint order."""
    shapes = {"embedding": (vocab_size, hp.embed_dim)}
    for layer, d_in, h in layer_dims(hp):
        for dr in DIRECTIONS:
            key = f"lstm{layer}.{dr}"
            shapes[f"{key}.W_ih"] = (4 * h, d_in)
            shapes[f"{key}.W_hh"] = (4 * h, h)
            shapes[f"{key}.b_ih"] = (4 * h,)
            shapes[f"{key}.b_hh"] = (4 * h,)
    ctx = 2 * hp.hidden_dim2
    shapes["attn.v"] = (ctx,)
    shapes["attn.b"] = (1,)
    shapes["head.W1"] = (hp.head_dim, ctx)
    shapes["head.b1"] = (hp.head_dim,)
    shapes["head.W2"] = (2, hp.head_dim)
    shapes["head.b2"] = (2,)
    return shapes


def count_params(hp: HyperParams, vocab_size: int) -> int:
    return int(sum(np.prod(s) for s in param_shapes(hp, vocab_size).values()))


def is_bias(name: str) -> bool:
    return name.rsplit(".", 1)[-1] in ("b_ih", "b_hh", "b", "b1", "b2")


def init_params(hp: HyperParams, vocab_size: int, seed: int = 0,
                dtype=np.float32) -> dict[str, np.ndarray]:
    """Seeded initialisation.

    Embedding ~ U(-0.1, 0.1); weight matrices ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))
    with fan_in their column count; biases zero except the forget-gate slice
    of ``b_ih``, which is 1 (so the summed forget bias starts at 1).
    """
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(hp, vocab_size).items():
        if name == "embedding":
            arr = rng.uniform(-0.1, 0.1, size=shape)
        elif is_bias(name):
            arr = np.zeros(shape)
            if name.endswith("b_ih"):
                h = shape[0] // 4
                arr[h:2 * h] = 1.0
        else:
            bound = 1.0 / np.sqrt(shape[-1])
            arr = rng.uniform(-bound, bound, size=shape)
        params[name] = arr.astype(dtype)
    return params


def flatten(params: dict) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params.values()])


def unflatten(vector: np.ndarray, like: dict) -> dict:
    out, pos = {}, 0
    for name, p in like.items():
        out[name] = vector[pos:pos + p.size].reshape(p.shape).astype(p.dtype)
        pos += p.size
    return out


# LSTM ------------------------------------------------------------------------

def _gates(z, h):
    return (expit(z[..., :h]), expit(z[..., h:2 * h]), np.tanh(z[..., 2 * h:3 * h]),
            expit(z[..., 3 * h:]))


def lstm_cell(x_t, h_prev, c_prev, W_ih, W_hh, b_ih, b_hh):
    """One LSTM step, returning ``(h_t, c_t)``."""
    i, f, g, o = _gates(x_t @ W_ih.T + h_prev @ W_hh.T + b_ih + b_hh, h_prev.shape[-1])
    c_t = f * c_prev + i * g
    return o * np.tanh(c_t), c_t


def lstm_direction(X, mask, W_ih, W_hh, b_ih, b_hh, reverse: bool):
    """Run one direction over ``X`` (B, T, d); masked steps carry state through."""
    B, T, _ = X.shape
    h = W_hh.shape[1]
    dtype = X.dtype
    Xp = X @ W_ih.T + (b_ih + b_hh)
    h_t = np.zeros((B, h), dtype=dtype)
    c_t = np.zeros((B, h), dtype=dtype)
    out = np.zeros((B, T, h), dtype=dtype)
    gates = np.zeros((B, T, 4, h), dtype=dtype)
    tanh_c = np.zeros((B, T, h), dtype=dtype)
    h_prev_all = np.zeros((B, T, h), dtype=dtype)
    c_prev_all = np.zeros((B, T, h), dtype=dtype)
    steps = range(T - 1, -1, -1) if reverse else range(T)
    for t in steps:
        m = mask[:, t, None]
        i, f, g, o = _gates(Xp[:, t] + h_t @ W_hh.T, h)
        c_new = f * c_t + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        gates[:, t, 0], gates[:, t, 1], gates[:, t, 2], gates[:, t, 3] = i, f, g, o
        tanh_c[:, t] = tc
        h_prev_all[:, t] = h_t
        c_prev_all[:, t] = c_t
        out[:, t] = m * h_new
        h_t = m * h_new + (1 - m) * h_t
        c_t = m * c_new + (1 - m) * c_t
    cache = (X, mask, gates, tanh_c, h_prev_all, c_prev_all, reverse)
    return out, cache


def lstm_direction_backward(d_out, cache, W_ih, W_hh):
    """Backprop through time; returns ``(dX, dW_ih, dW_hh, db)``.

    ``db`` is the gradient of both ``b_ih`` and ``b_hh`` (they enter as a sum).
    """
    X, mask, gates, tanh_c, h_prev_all, c_prev_all, reverse = cache
    B, T, h = d_out.shape
    dtype = d_out.dtype
    dXp = np.zeros((B, T, 4 * h), dtype=dtype)
    dW_hh = np.zeros_like(W_hh)
    dh_next = np.zeros((B, h), dtype=dtype)
    dc_next = np.zeros((B, h), dtype=dtype)
    steps = range(T) if reverse else range(T - 1, -1, -1)
    for t in steps:
        m = mask[:, t, None]
        i, f, g, o = gates[:, t, 0], gates[:, t, 1], gates[:, t, 2], gates[:, t, 3]
        tc = tanh_c[:, t]
        dh_new = m * (d_out[:, t] + dh_next)
        dc_new = m * dc_next
        do = dh_new * tc
        dc = dc_new + dh_new * o * (1 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev_all[:, t]
        dz = np.concatenate([di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g),
                             do * o * (1 - o)], axis=1)
        dXp[:, t] = dz
        dW_hh += dz.T @ h_prev_all[:, t]
        dh_next = dz @ W_hh + (1 - m) * dh_next
        dc_next = dc * f + (1 - m) * dc_next
    flat = dXp.reshape(B * T, 4 * h)
    dW_ih = flat.T @ X.reshape(B * T, -1)
    db = flat.sum(axis=0)
    dX = dXp @ W_ih
    return dX, dW_ih, dW_hh, db


# full model ------------------------------------------------------------------

@dataclass
class ForwardCache:
    ids: np.ndarray
    mask: np.ndarray
    layers: list = field(default_factory=list)
    H2: np.ndarray | None = None
    alpha: np.ndarray | None = None
    ctx: np.ndarray | None = None
    z1: np.ndarray | None = None
    drop_mask: np.ndarray | None = None
    a1d: np.ndarray | None = None


def forward(params, ids, lengths, hp: HyperParams, train: bool = False, rng=None):
    """Logits (B, 2), attention weights (B, T) and the backward cache.

    ``ids`` is a PAD(0)-padded (B, T) integer matrix. In train mode dropout
    uses inverted scaling with masks drawn from ``rng``.
    """
    emb = params["embedding"]
    dtype = emb.dtype
    ids = np.asarray(ids, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= emb.shape[0]):
        raise IndexError(f"token id outside [0, {emb.shape[0]})")
    B, T = ids.shape
    if (lengths > T).any() or (lengths < 1).any():
        raise ValueError("lengths must lie in [1, T]")
    mask = (np.arange(T)[None, :] < lengths[:, None]).astype(dtype)
    cache = ForwardCache(ids=ids, mask=mask)

    H = emb[ids]
    for layer, _, _ in layer_dims(hp):
        outs, caches = [], []
        for dr in DIRECTIONS:
            key = f"lstm{layer}.{dr}"
            out, c = lstm_direction(H, mask, params[f"{key}.W_ih"], params[f"{key}.W_hh"],
                                    params[f"{key}.b_ih"], params[f"{key}.b_hh"],
                                    reverse=(dr == "bwd"))
            outs.append(out)
            caches.append(c)
        cache.layers.append(caches)
        H = np.concatenate(outs, axis=2)

    scores = H @ params["attn.v"] + params["attn.b"][0]
    scores = np.where(mask > 0, scores, -np.inf)
    scores = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(scores) * mask
    alpha = e / e.sum(axis=1, keepdims=True)
    ctx = np.einsum("bt,btd->bd", alpha, H)

    z1 = ctx @ params["head.W1"].T + params["head.b1"]
    a1 = np.maximum(z1, 0)
    if train and hp.dropout > 0:
        rng = np.random.default_rng() if rng is None else rng
        keep = 1.0 - hp.dropout
        drop_mask = ((rng.random(a1.shape) < keep) / keep).astype(dtype)
    else:
        drop_mask = np.ones_like(a1)
    a1d = a1 * drop_mask
    logits = a1d @ params["head.W2"].T + params["head.b2"]

    cache.H2, cache.alpha, cache.ctx = H, alpha, ctx
    cache.z1, cache.drop_mask, cache.a1d = z1, drop_mask, a1d
    return logits, alpha, cache


def loss_label_smoothed(logits, labels, epsilon: float):
    """Mean cross-entropy against ``(1 - eps) * onehot + eps / 2``; also returns dlogits."""
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    B, K = logits.shape
    mx = logits.max(axis=1, keepdims=True)
    lse = mx + np.log(np.exp(logits - mx).sum(axis=1, keepdims=True))
    logp = logits - lse
    target = np.full((B, K), epsilon / K, dtype=logits.dtype)
    target[np.arange(B), labels] += 1.0 - epsilon
    loss = float(-(target * logp).sum() / B)
    dlogits = (np.exp(logp) - target) / B
    return loss, dlogits.astype(logits.dtype)


def backward(params, cache: ForwardCache, dlogits, hp: HyperParams) -> dict:
    """Gradients of every tensor in ``params`` given dL/dlogits."""
    grads = {}
    grads["head.W2"] = dlogits.T @ cache.a1d
    grads["head.b2"] = dlogits.sum(axis=0)
    da1 = (dlogits @ params["head.W2"]) * cache.drop_mask
    dz1 = da1 * (cache.z1 > 0)
    grads["head.W1"] = dz1.T @ cache.ctx
    grads["head.b1"] = dz1.sum(axis=0)
    dctx = dz1 @ params["head.W1"]

    H, alpha = cache.H2, cache.alpha
    dalpha = np.einsum("bd,btd->bt", dctx, H)
    de = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
    grads["attn.v"] = np.einsum("bt,btd->d", de, H)
    grads["attn.b"] = np.array([de.sum()], dtype=H.dtype)
    dH = alpha[:, :, None] * dctx[:, None, :] + de[:, :, None] * params["attn.v"]

    for (layer, _, h), caches in reversed(list(zip(layer_dims(hp), cache.layers))):
        dX = None
        for k, dr in enumerate(DIRECTIONS):
            key = f"lstm{layer}.{dr}"
            d_out = np.ascontiguousarray(dH[:, :, k * h:(k + 1) * h])
            dXk, dW_ih, dW_hh, db = lstm_direction_backward(
                d_out, caches[k], params[f"{key}.W_ih"], params[f"{key}.W_hh"])
            grads[f"{key}.W_ih"], grads[f"{key}.W_hh"] = dW_ih, dW_hh
            grads[f"{key}.b_ih"], grads[f"{key}.b_hh"] = db, db.copy()
            dX = dXk if dX is None else dX + dXk
        dH = dX

    d_emb = np.zeros_like(params["embedding"])
    E = d_emb.shape[1]
    np.add.at(d_emb, cache.ids.ravel(), dH.reshape(-1, E))
    grads["embedding"] = d_emb
    return {name: grads[name].astype(params[name].dtype, copy=False) for name in params}

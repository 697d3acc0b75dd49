"""Adam with bias correction and decoupled weight decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import is_bias

BETA1, BETA2, EPS = 0.9, 0.999, 1e-8


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def decay_mask(name: str, param: np.ndarray):
    """1 where weight decay applies; biases and the PAD embedding row are exempt."""
    if is_bias(name):
        return 0.0
    if name == "embedding":
        mask = np.ones((param.shape[0], 1), dtype=param.dtype)
        mask[0] = 0
        return mask
    return 1.0


def optimizer_step(params: dict, grads: dict, state: AdamState, lr: float,
                   weight_decay: float = 0.0, t: int | None = None) -> None:
    """In-place update ``theta -= lr * m_hat / (sqrt(v_hat) + eps) + lr * wd * theta``.

    ``t`` defaults to ``state.t + 1``; it must be at least 1.
    """
    t = state.t + 1 if t is None else t
    if t < 1:
        raise ValueError("step counter t must be >= 1")
    state.t = t
    c1 = 1.0 - BETA1 ** t
    c2 = 1.0 - BETA2 ** t
    for name, p in params.items():
        g = grads[name]
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= BETA1
        m += (1.0 - BETA1) * g
        v *= BETA2
        v += (1.0 - BETA2) * g * g
        update = (m / c1) / (np.sqrt(v / c2) + EPS)
        if weight_decay:
            update = update + weight_decay * decay_mask(name, p) * p
        p -= (lr * update).astype(p.dtype, copy=False)

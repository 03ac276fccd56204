"""Adam with bias correction, and the clamp used to keep weights non-negative."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .autograd import Tensor


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence[Tensor], lr: float = 0.001, **kw) -> "AdamState":
        return cls(
            lr=lr,
            m=[np.zeros_like(p.value) for p in params],
            v=[np.zeros_like(p.value) for p in params],
            **kw,
        )


def adam_step(params: Sequence[Tensor], state: AdamState) -> None:
    """One bias-corrected Adam update. Gradients are zeroed afterwards."""
    if len(state.m) != len(params) or len(state.v) != len(params):
        raise RuntimeError("Adam state was not initialised for these parameters")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, m, v in zip(params, state.m, state.v):
        if m.shape != p.value.shape:
            raise RuntimeError(f"Adam moment shape {m.shape} != parameter shape {p.value.shape}")
        g = p.grad if p.grad is not None else np.zeros_like(p.value)
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.value -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p.grad = np.zeros_like(p.value)


def project_nonnegative(params: Sequence[Tensor]) -> None:
    for p in params:
        np.maximum(p.value, 0.0, out=p.value)

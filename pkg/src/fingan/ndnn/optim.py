"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fingan.errors import ShapeMismatch


@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    learning_rate: float = 1e-4

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if not self.eps > 0:
            raise ValueError("Adam epsilon must be > 0")


def adam_step(params, grads, state: AdamState):
    """Update ``params`` in place and return ``(params, state)``.

    Moment buffers are created lazily on the first call.
    """
    if len(params) != len(grads):
        raise ShapeMismatch(f"{len(params)} parameters but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeMismatch(f"parameter {p.shape} vs gradient {g.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


class Adam:
    """Adam over a fixed list of ``(layer, name)`` parameter references."""

    def __init__(self, refs, learning_rate=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.refs = list(refs)
        self.state = AdamState(beta1=beta1, beta2=beta2, eps=eps, learning_rate=learning_rate)

    def step(self):
        params = [layer.params[n] for layer, n in self.refs]
        grads = [layer.grads[n] for layer, n in self.refs]
        adam_step(params, grads, self.state)

"""Adam optimizer with bias correction.

Defaults beta1=0.9, beta2=0.999, eps=1e-8; only the learning rate is swept
by the experiment harness.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, ShapeError
from .tensor import Tensor


class Adam:
    """Per-parameter first/second moment accumulators plus a step counter."""

    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr < 0:
            raise ShapeError(f"learning rate must be >= 0, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        # per-parameter update counters so bias correction stays exact for
        # parameters that sit out some steps
        self.t = [0] * len(self.params)

    def step(self) -> None:
        """Apply one bias-corrected update from each parameter's .grad.

        A parameter whose grad is None or all-zero is left exactly as it is:
        neither its moments nor its bias-correction counter advance. This keeps
        parameters untouched by a batch (unused table rows aside — those get a
        dense gradient) frozen instead of drifting on stale momentum.
        """
        self.step_count += 1
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if g.shape != p.data.shape:
                raise ShapeError(
                    f"gradient shape {g.shape} != parameter shape {p.data.shape}"
                    + (f" for '{p.name}'" if p.name else ""))
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient"
                                   + (f" for '{p.name}'" if p.name else ""))
            if not g.any():
                continue
            self.t[i] += 1
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / (1.0 - self.beta1 ** self.t[i])
            v_hat = self.v[i] / (1.0 - self.beta2 ** self.t[i])
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

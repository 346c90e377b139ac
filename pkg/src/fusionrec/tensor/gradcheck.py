"""Finite-difference gradient checking, the oracle for every backward rule."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import NumericError
from .tensor import Tape, Tensor


def grad_check(f: Callable[[Tape], Tensor], params: list[Tensor],
               h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    f builds a scalar loss on a fresh tape from the current values of params
    (which must be float64 for the differences to resolve). Returns
    max over coordinates of |analytic - numeric| / max(1, |analytic|).
    """
    tape = Tape()
    loss = f(tape)
    tape.backward(loss, params=params)
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.data.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up = f(Tape(record=False)).item()
            flat[k] = orig - h
            down = f(Tape(record=False)).item()
            flat[k] = orig
            numeric = (up - down) / (2.0 * h)
            if not np.isfinite(numeric):
                raise NumericError("non-finite finite-difference estimate")
            a = grad.reshape(-1)[k]
            rel = abs(a - numeric) / max(1.0, abs(a))
            if rel > worst:
                worst = rel
    return worst

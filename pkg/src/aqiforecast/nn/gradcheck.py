"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .layers import Parameter


class NonDeterministicClosure(RuntimeError):
    pass


def gradcheck(
    closure: Callable[[], float],
    params: list[Parameter],
    eps: float = 1e-5,
    floor: float = 1e-6,
    max_entries: int | None = None,
) -> float:
    """Largest relative error between analytic and central-difference gradients.

    ``closure`` runs forward and backward and returns the loss; it must not
    depend on random state (disable dropout). Relative error per entry is
    ``|a - n| / max(|a|, |n|, floor)``; the floor keeps round-off on
    near-zero gradients from reading as a large relative error.
    ``max_entries`` checks at most that many evenly spaced entries per
    parameter.
    """
    for p in params:
        p.zero_grad()
    loss = closure()
    analytic = [p.grad.copy() for p in params]
    for p in params:
        p.zero_grad()
    if closure() != loss:
        raise NonDeterministicClosure("closure returned different losses for identical inputs")

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.value.reshape(-1)
        ga = a.reshape(-1)
        if max_entries is None or flat.size <= max_entries:
            entries = range(flat.size)
        else:
            entries = np.linspace(0, flat.size - 1, max_entries).astype(int)
        for k in entries:
            orig = flat[k]
            flat[k] = orig + eps
            up = closure()
            flat[k] = orig - eps
            down = closure()
            flat[k] = orig
            num = (up - down) / (2.0 * eps)
            denom = max(abs(ga[k]), abs(num), floor)
            worst = max(worst, abs(ga[k] - num) / denom)
    for p, a in zip(params, analytic):
        p.grad[...] = a
    return worst

"""LSTM cell and layer.

Gate parameters are stored stacked in the order input, forget, output,
candidate: ``W`` is (4H, F), ``U`` is (4H, H) and ``b`` is (4H,). Rows
``k*H:(k+1)*H`` belong to gate ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from .layers import Module, Parameter, uniform_init

GATES = ("input", "forget", "output", "candidate")


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        if self.h.shape != self.c.shape:
            raise ValueError("hidden and cell state must have the same shape")

    @classmethod
    def zeros(cls, batch: int, hidden: int) -> "LstmState":
        return cls(np.zeros((batch, hidden)), np.zeros((batch, hidden)))


@dataclass
class LstmParams:
    W: Parameter
    U: Parameter
    b: Parameter

    @property
    def hidden(self) -> int:
        return self.U.value.shape[1]

    @property
    def n_in(self) -> int:
        return self.W.value.shape[1]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Views of ``(W_k, U_k, b_k)`` for one named gate."""
        k = GATES.index(name)
        rows = slice(k * self.hidden, (k + 1) * self.hidden)
        return self.W.value[rows], self.U.value[rows], self.b.value[rows]

    def as_list(self) -> list[Parameter]:
        return [self.W, self.U, self.b]


def init_lstm_params(n_in: int, hidden: int, rng: np.random.Generator,
                     name: str = "lstm") -> LstmParams:
    return LstmParams(
        Parameter(uniform_init(rng, (4 * hidden, n_in), hidden), f"{name}.W"),
        Parameter(uniform_init(rng, (4 * hidden, hidden), hidden), f"{name}.U"),
        Parameter(uniform_init(rng, (4 * hidden,), hidden), f"{name}.b"),
    )


def lstm_cell_forward(x: np.ndarray, prev: LstmState, params: LstmParams):
    """One time step for a batch ``x`` of shape (B, F).

    Returns the new state and a cache for :func:`lstm_cell_backward`.
    """
    x = np.atleast_2d(x)
    if x.shape[1] != params.n_in:
        raise ValueError(f"input width {x.shape[1]} != gate input size {params.n_in}")
    if prev.h.shape != (x.shape[0], params.hidden):
        raise ValueError(f"state shape {prev.h.shape} != ({x.shape[0]}, {params.hidden})")
    z = x @ params.W.value.T + prev.h @ params.U.value.T + params.b.value
    gates, c, h = kernels.lstm_gates_forward(np.ascontiguousarray(z), prev.c)
    return LstmState(h, c), (x, prev, gates, c)


def lstm_cell_backward(dh: np.ndarray, dc: np.ndarray, cache, params: LstmParams):
    """Accumulate gate-parameter gradients; return ``(dx, d_prev_state)``."""
    x, prev, gates, c = cache
    dz, dc_prev = kernels.lstm_gates_backward(gates, prev.c, c, dh, dc)
    params.W.grad += dz.T @ x
    params.U.grad += dz.T @ prev.h
    params.b.grad += dz.sum(axis=0)
    dx = dz @ params.W.value
    dh_prev = dz @ params.U.value
    return dx, LstmState(dh_prev, dc_prev)


class LSTMLayer(Module):
    """Unidirectional LSTM over a (B, T, F) batch, zero initial state."""

    def __init__(self, n_in: int, hidden: int, rng: np.random.Generator, name: str = "lstm"):
        self.params = init_lstm_params(n_in, hidden, rng, name)
        self.hidden = hidden
        self._caches = None

    def forward(self, x):
        bsz, steps, _ = x.shape
        state = LstmState.zeros(bsz, self.hidden)
        out = np.empty((bsz, steps, self.hidden))
        caches = []
        for t in range(steps):
            state, cache = lstm_cell_forward(x[:, t, :], state, self.params)
            out[:, t, :] = state.h
            caches.append(cache)
        self._caches = caches
        return out

    def backward(self, dout):
        bsz, steps, _ = dout.shape
        dx = np.empty((bsz, steps, self.params.n_in))
        dh_next = np.zeros((bsz, self.hidden))
        dc_next = np.zeros((bsz, self.hidden))
        for t in reversed(range(steps)):
            dx[:, t, :], dprev = lstm_cell_backward(
                dout[:, t, :] + dh_next, dc_next, self._caches[t], self.params
            )
            dh_next, dc_next = dprev.h, dprev.c
        return dx

    def parameters(self):
        return self.params.as_list()

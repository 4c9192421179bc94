"""Dense layers, activations and dropout with explicit forward/backward passes."""

from __future__ import annotations

import math

import numpy as np


class Parameter:
    __slots__ = ("name", "value", "grad")

    def __init__(self, value, name: str = ""):
        self.name = name
        self.value = np.ascontiguousarray(value, dtype=np.float64).copy()
        if not np.all(np.isfinite(self.value)):
            raise ValueError(f"parameter {name!r} has non-finite entries")
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Module:
    training = True

    def parameters(self) -> list[Parameter]:
        return []

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for child in self.children():
            child.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def children(self) -> list["Module"]:
        return []

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def dense_forward(x: np.ndarray, W: Parameter, b: Parameter) -> np.ndarray:
    """``y = x W^T + b`` for a batch ``x`` of shape (B, in)."""
    if x.ndim != 2 or x.shape[1] != W.value.shape[1]:
        raise ValueError(f"dense input shape {x.shape} does not match weight {W.value.shape}")
    return x @ W.value.T + b.value


def dense_backward(dy: np.ndarray, x: np.ndarray, W: Parameter, b: Parameter) -> np.ndarray:
    """Accumulate ``W``/``b`` gradients and return the gradient w.r.t. ``x``."""
    if dy.shape != (x.shape[0], W.value.shape[0]):
        raise ValueError(f"upstream gradient shape {dy.shape} does not match output")
    W.grad += dy.T @ x
    b.grad += dy.sum(axis=0)
    return dy @ W.value


def relu_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mask = x > 0
    return np.where(mask, x, 0.0), mask


def relu_backward(dy: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, dy, 0.0)


def dropout_forward(x: np.ndarray, rate: float, rng: np.random.Generator | None,
                    training: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout; evaluation mode (or ``rate == 0``) is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    keep = rng.random(x.shape) >= rate
    mask = keep / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dy: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    return dy if mask is None else dy * mask


class Dense(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, name: str = "dense"):
        self.W = Parameter(uniform_init(rng, (n_out, n_in), n_in), f"{name}.W")
        self.b = Parameter(uniform_init(rng, (n_out,), n_in), f"{name}.b")
        self._x = None

    def forward(self, x):
        self._x = x
        return dense_forward(x, self.W, self.b)

    def backward(self, dy):
        return dense_backward(dy, self._x, self.W, self.b)

    def parameters(self):
        return [self.W, self.b]


class ReLU(Module):
    def forward(self, x):
        y, self._mask = relu_forward(x)
        return y

    def backward(self, dy):
        return relu_backward(dy, self._mask)


class Dropout(Module):
    def __init__(self, rate: float, rng: np.random.Generator):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng
        self._mask = None

    def forward(self, x):
        y, self._mask = dropout_forward(x, self.rate, self.rng, self.training)
        return y

    def backward(self, dy):
        return dropout_backward(dy, self._mask)


class Sequential(Module):
    def __init__(self, *layers: Module):
        self.layers = list(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dy):
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def children(self):
        return self.layers

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

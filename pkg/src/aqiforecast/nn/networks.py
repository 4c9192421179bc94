"""The two network shapes used by the benchmark."""

from __future__ import annotations

import numpy as np

from .layers import Dense, Dropout, Module, ReLU, Sequential
from .lstm import LSTMLayer


class MLPRegressor(Module):
    """Fully connected ReLU network ending in one linear output unit."""

    def __init__(self, n_in: int, hidden: tuple[int, ...], rng: np.random.Generator):
        layers: list[Module] = []
        width = n_in
        for k, h in enumerate(hidden):
            layers += [Dense(width, h, rng, f"fc{k}"), ReLU()]
            width = h
        layers.append(Dense(width, 1, rng, "out"))
        self.body = Sequential(*layers)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.body.forward(x)[:, 0]

    def backward(self, dpred: np.ndarray) -> np.ndarray:
        return self.body.backward(dpred[:, None])

    def children(self):
        return [self.body]

    def parameters(self):
        return self.body.parameters()


class LSTMRegressor(Module):
    """Stacked LSTM layers, last hidden state into a ReLU/dropout head."""

    def __init__(self, n_in: int, lstm_hidden: tuple[int, ...], head: tuple[int, ...],
                 dropout: float, rng: np.random.Generator, dropout_rng: np.random.Generator):
        self.lstms = []
        width = n_in
        for k, h in enumerate(lstm_hidden):
            self.lstms.append(LSTMLayer(width, h, rng, f"lstm{k}"))
            width = h
        layers: list[Module] = []
        for k, h in enumerate(head):
            layers += [Dense(width, h, rng, f"fc{k}"), ReLU(), Dropout(dropout, dropout_rng)]
            width = h
        layers.append(Dense(width, 1, rng, "out"))
        self.head = Sequential(*layers)
        self._seq_shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        """``x`` is (B, T, F); returns (B,) predictions from the last step."""
        seq = x
        for layer in self.lstms:
            seq = layer.forward(seq)
        self._seq_shape = seq.shape
        return self.head.forward(seq[:, -1, :])[:, 0]

    def backward(self, dpred: np.ndarray) -> np.ndarray:
        dlast = self.head.backward(dpred[:, None])
        dseq = np.zeros(self._seq_shape)
        dseq[:, -1, :] = dlast
        for layer in reversed(self.lstms):
            dseq = layer.backward(dseq)
        return dseq

    def children(self):
        return [*self.lstms, self.head]

    def parameters(self):
        return [p for layer in self.lstms for p in layer.parameters()] + self.head.parameters()

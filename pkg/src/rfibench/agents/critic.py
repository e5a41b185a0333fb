"""Action-value networks ``Q(x, a)``, optionally with a feature encoder."""

from __future__ import annotations

import numpy as np

from ..neural import Network


class Critic:
    """``Q(x, a) = head([encoder(x), a])``; the encoder may be ``None``."""

    def __init__(self, head: Network, encoder: Network | None = None):
        self.head = head
        self.encoder = encoder
        self._feat = 0

    def forward(self, x, a):
        feat = self.encoder.forward(x) if self.encoder is not None else x
        self._feat = feat.shape[-1]
        return self.head.forward(np.concatenate([feat, a], axis=-1))[:, 0]

    __call__ = forward

    def backward(self, dq) -> np.ndarray:
        """Accumulate parameter gradients; returns ``dQ/da``."""
        d = self.head.backward(np.asarray(dq, float)[:, None])
        if self.encoder is not None:
            self.encoder.backward(d[:, :self._feat])
        return d[:, self._feat:]

    def nets(self) -> list:
        return [n for n in (self.encoder, self.head) if n is not None]

    def params(self):
        return [p for n in self.nets() for p in n.params()]

    def grads(self):
        return [g for n in self.nets() for g in n.grads()]

    def zero_grad(self):
        for n in self.nets():
            n.zero_grad()

    def copy_from(self, other: "Critic", tau=1.0):
        for mine, theirs in zip(self.nets(), other.nets()):
            mine.copy_from(theirs, tau)

    def clone(self) -> "Critic":
        return Critic(self.head.clone(), None if self.encoder is None else self.encoder.clone())

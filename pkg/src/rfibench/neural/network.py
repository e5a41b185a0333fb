"""Sequential networks built from a layer specification."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation
from .layers import LSTM, Dense, Dropout, LastStep, Layer, Parallel


class Network(Layer):
    """A chain of layers; also usable as a branch inside :class:`Parallel`."""

    kind = "sequential"

    def __init__(self, layers, in_dim=None):
        super().__init__()
        self.layers = list(layers)
        self._in = in_dim if in_dim is not None else self.layers[0].in_dim
        width = self._in
        for layer in self.layers:
            if layer.in_dim != width:
                raise ContractViolation(
                    f"layer {layer.kind} expects width {layer.in_dim}, previous gives {width}")
            width = layer.out_dim
        self._out = width

    @property
    def in_dim(self):
        return self._in

    @property
    def out_dim(self):
        return self._out

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def grads(self):
        return [g for layer in self.layers for g in layer.grads()]

    def param_names(self):
        return [f"{i}.{layer.kind}.{n}" for i, layer in enumerate(self.layers)
                for n in layer.param_names()]

    def spec(self):
        return {"type": "sequential", "in": self._in,
                "layers": [layer.spec() for layer in self.layers]}

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params()))

    def forward(self, x, train=False, rng=None, mode=None):
        """``mode`` ("train"/"eval") overrides ``train`` when given."""
        if mode is not None:
            if mode not in ("train", "eval"):
                raise ContractViolation(f"unknown mode {mode!r}")
            train = mode == "train"
        x = np.asarray(x, float)
        if x.shape[-1] != self._in:
            raise ContractViolation(f"network expects input width {self._in}, got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x, train, rng)
        self._cache = True
        return x

    __call__ = forward

    def backward(self, dy):
        self._take_cache()
        dy = np.asarray(dy, float)
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def zero_grad(self):
        for g in self.grads():
            g[...] = 0.0

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.reshape(-1) for p in self.params()]) if self.params() else np.zeros(0)

    def set_flat(self, flat):
        flat = np.asarray(flat, float)
        if flat.size != self.n_params:
            raise ContractViolation(f"expected {self.n_params} values, got {flat.size}")
        k = 0
        for p in self.params():
            p[...] = flat[k:k + p.size].reshape(p.shape)
            k += p.size

    def copy_from(self, other: "Network", tau: float = 1.0):
        """Polyak step ``self <- tau * other + (1 - tau) * self``."""
        for mine, theirs in zip(self.params(), other.params()):
            if tau == 1.0:
                mine[...] = theirs
            else:
                mine *= 1.0 - tau
                mine += tau * theirs

    def clone(self) -> "Network":
        net = build_network(self.spec())
        net.copy_from(self)
        return net


def mlp(n_in, hidden, n_out, activation="relu", out_activation="linear", rng=None,
        dropout=0.0) -> Network:
    layers = []
    width = n_in
    for h in hidden:
        layers.append(Dense(width, h, activation, rng))
        if dropout:
            layers.append(Dropout(dropout, h))
        width = h
    layers.append(Dense(width, n_out, out_activation, rng))
    return Network(layers, in_dim=n_in)


def build_layer(spec: dict, rng=None) -> Layer:
    kind = spec.get("type")
    if kind == "dense":
        return Dense(spec["in"], spec["out"], spec.get("activation", "linear"), rng)
    if kind == "lstm":
        return LSTM(spec["in"], spec["hidden"], rng)
    if kind == "dropout":
        return Dropout(spec["rate"], spec["dim"])
    if kind == "last":
        return LastStep(spec["dim"])
    if kind == "parallel":
        return Parallel([build_layer(b, rng) for b in spec["branches"]])
    if kind == "sequential":
        return build_network(spec, rng)
    raise ContractViolation(f"unknown layer type {kind!r}")


def build_network(spec: dict, rng=None) -> Network:
    """Instantiate a network from its ``spec()`` dictionary."""
    if spec.get("type", "sequential") != "sequential":
        raise ContractViolation("network spec must be sequential at the top level")
    layers = [build_layer(s, rng) for s in spec["layers"]]
    return Network(layers, in_dim=spec.get("in"))

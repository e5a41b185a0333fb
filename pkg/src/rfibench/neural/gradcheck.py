"""Central finite-difference gradient verification."""

from __future__ import annotations

import numpy as np


def _rel(a, n, floor):
    return np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), floor)


def gradient_check(net, x, rng, h=1e-5, floor=1e-8, max_entries=None) -> float:
    """Max relative error between backprop and central differences.

    The scalar probe is ``sum(R * net(x))`` for a fixed random ``R``. The
    network runs in eval mode. Relative error is
    ``|a - n| / max(|a| + |n|, floor)``, taken over every parameter entry
    and input entry (or a random subset of ``max_entries`` per tensor).
    """
    x = np.array(x, float)
    y = net.forward(x)
    R = rng.standard_normal(y.shape)
    net.zero_grad()
    dx = net.backward(R)
    analytic = [g.copy() for g in net.grads()]

    def loss():
        return float(np.sum(R * net.forward(x)))

    worst = 0.0
    tensors = list(zip(net.params(), analytic)) + [(x, dx)]
    for p, a in tensors:
        flat = p.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, max_entries, replace=False)
        a_flat = a.reshape(-1)
        for k in idx:
            old = flat[k]
            flat[k] = old + h
            up = loss()
            flat[k] = old - h
            down = loss()
            flat[k] = old
            num = (up - down) / (2 * h)
            worst = max(worst, float(_rel(a_flat[k], num, floor)))
    return worst


def random_composition(rng, max_layers=4, seq=True):
    """A random chain of dense / LSTM / dropout layers and a matching input.

    Returns ``(network, input)``; inputs are ``(batch, time, features)`` so
    LSTM layers may appear anywhere.
    """
    from .layers import LSTM, Dense, Dropout
    from .network import Network

    n_layers = int(rng.integers(1, max_layers + 1))
    width = int(rng.integers(2, 6))
    in_dim = width
    layers = []
    for k in range(n_layers):
        kinds = ["dense", "lstm", "dropout"] if seq else ["dense", "dropout"]
        # the first layer always carries parameters
        kind = rng.choice(kinds[:-1] if k == 0 else kinds)
        out = int(rng.integers(2, 6))
        if kind == "dense":
            act = str(rng.choice(["relu", "tanh", "linear"]))
            layers.append(Dense(width, out, act, rng))
            width = out
        elif kind == "lstm":
            layers.append(LSTM(width, out, rng))
            width = out
        else:
            layers.append(Dropout(float(rng.uniform(0.0, 0.5)), width))
    net = Network(layers, in_dim=in_dim)
    for p in net.params():
        p += rng.normal(0.0, 0.1, p.shape)
    x = rng.standard_normal((int(rng.integers(1, 4)), int(rng.integers(1, 6)), in_dim))
    return net, x

"""Layers with explicit forward caches and reverse-mode gradients.

Tensors are float64. Dense layers accept any number of leading axes;
recurrent layers take ``(batch, time, features)``.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation

ACTIVATIONS = ("relu", "tanh", "linear")


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Layer:
    kind = ""

    def __init__(self):
        self._cache = None

    @property
    def in_dim(self) -> int:
        raise NotImplementedError

    @property
    def out_dim(self) -> int:
        raise NotImplementedError

    def params(self) -> list:
        return []

    def grads(self) -> list:
        return []

    def param_names(self) -> list:
        return []

    def spec(self) -> dict:
        raise NotImplementedError

    def _take_cache(self):
        if self._cache is None:
            raise ContractViolation(f"{self.kind}: backward without a matching forward")
        cache, self._cache = self._cache, None
        return cache

    def _check_input(self, x):
        if x.shape[-1] != self.in_dim:
            raise ContractViolation(
                f"{self.kind}: expected last axis {self.in_dim}, got shape {x.shape}")


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in, n_out, activation="linear", rng=None):
        super().__init__()
        if activation not in ACTIVATIONS:
            raise ContractViolation(f"unknown activation {activation!r}")
        self.activation = activation
        rng = np.random.default_rng(0) if rng is None else rng
        if activation == "relu":
            limit = np.sqrt(6.0 / n_in)
        else:
            limit = np.sqrt(6.0 / (n_in + n_out))
        self.W = rng.uniform(-limit, limit, (n_in, n_out))
        self.b = np.zeros(n_out)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    @property
    def in_dim(self):
        return self.W.shape[0]

    @property
    def out_dim(self):
        return self.W.shape[1]

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]

    def param_names(self):
        return ["W", "b"]

    def spec(self):
        return {"type": "dense", "in": self.in_dim, "out": self.out_dim,
                "activation": self.activation}

    def forward(self, x, train=False, rng=None):
        self._check_input(x)
        z = x @ self.W + self.b
        if self.activation == "relu":
            y = np.maximum(z, 0.0)
        elif self.activation == "tanh":
            y = np.tanh(z)
        else:
            y = z
        self._cache = (x, y)
        return y

    def backward(self, dy):
        x, y = self._take_cache()
        if self.activation == "relu":
            dz = dy * (y > 0)
        elif self.activation == "tanh":
            dz = dy * (1.0 - y * y)
        else:
            dz = dy
        x2 = x.reshape(-1, self.in_dim)
        dz2 = dz.reshape(-1, self.out_dim)
        self.dW += x2.T @ dz2
        self.db += dz2.sum(axis=0)
        return dz @ self.W.T


class Dropout(Layer):
    """Inverted dropout: survivors are scaled by ``1 / (1 - rate)`` in training."""

    kind = "dropout"

    def __init__(self, rate, dim):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ContractViolation("dropout rate must lie in [0, 1)")
        self.rate = float(rate)
        self.dim = int(dim)

    @property
    def in_dim(self):
        return self.dim

    @property
    def out_dim(self):
        return self.dim

    def spec(self):
        return {"type": "dropout", "rate": self.rate, "dim": self.dim}

    def forward(self, x, train=False, rng=None):
        self._check_input(x)
        if not train or self.rate == 0.0:
            self._cache = (None,)
            return x
        if rng is None:
            raise ContractViolation("dropout in train mode needs an rng")
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        self._cache = (mask,)
        return x * mask

    def backward(self, dy):
        (mask,) = self._take_cache()
        return dy if mask is None else dy * mask


class LSTM(Layer):
    """Single-layer LSTM over the full sequence, zero initial state.

    Gate order in the stacked weights: input, forget, candidate, output.
    """

    kind = "lstm"

    def __init__(self, n_in, hidden, rng=None, forget_bias=1.0):
        super().__init__()
        rng = np.random.default_rng(0) if rng is None else rng
        h = int(hidden)
        lim_x = np.sqrt(6.0 / (n_in + h))
        lim_h = np.sqrt(6.0 / (2 * h))
        self.Wx = rng.uniform(-lim_x, lim_x, (n_in, 4 * h))
        self.Wh = rng.uniform(-lim_h, lim_h, (h, 4 * h))
        self.b = np.zeros(4 * h)
        self.b[h:2 * h] = forget_bias
        self.dWx = np.zeros_like(self.Wx)
        self.dWh = np.zeros_like(self.Wh)
        self.db = np.zeros_like(self.b)
        self.hidden = h

    @property
    def in_dim(self):
        return self.Wx.shape[0]

    @property
    def out_dim(self):
        return self.hidden

    def params(self):
        return [self.Wx, self.Wh, self.b]

    def grads(self):
        return [self.dWx, self.dWh, self.db]

    def param_names(self):
        return ["Wx", "Wh", "b"]

    def spec(self):
        return {"type": "lstm", "in": self.in_dim, "hidden": self.hidden}

    def forward(self, x, train=False, rng=None):
        if x.ndim != 3:
            raise ContractViolation(f"lstm expects (batch, time, features), got {x.shape}")
        self._check_input(x)
        B, T, _ = x.shape
        H = self.hidden
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        xw = x @ self.Wx + self.b
        hs = np.empty((B, T, H))
        steps = []
        for t in range(T):
            a = xw[:, t] + h @ self.Wh
            i = _sigmoid(a[:, :H])
            f = _sigmoid(a[:, H:2 * H])
            g = np.tanh(a[:, 2 * H:3 * H])
            o = _sigmoid(a[:, 3 * H:])
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            hs[:, t] = h
            steps.append((i, f, g, o, c_prev, h_prev, tc))
        self._cache = (x, steps)
        return hs

    def backward(self, dh_seq):
        x, steps = self._take_cache()
        B, T, _ = x.shape
        H = self.hidden
        dx = np.empty_like(x)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        da = np.empty((B, 4 * H))
        for t in range(T - 1, -1, -1):
            i, f, g, o, c_prev, h_prev, tc = steps[t]
            dh = dh_seq[:, t] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            da[:, :H] = dc * g * i * (1.0 - i)
            da[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
            da[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
            da[:, 3 * H:] = do * o * (1.0 - o)
            self.dWx += x[:, t].T @ da
            self.dWh += h_prev.T @ da
            self.db += da.sum(axis=0)
            dx[:, t] = da @ self.Wx.T
            dh_next = da @ self.Wh.T
            dc_next = dc * f
        return dx


class LastStep(Layer):
    """Select the final time step of a ``(batch, time, features)`` tensor."""

    kind = "last"

    def __init__(self, dim):
        super().__init__()
        self.dim = int(dim)

    @property
    def in_dim(self):
        return self.dim

    @property
    def out_dim(self):
        return self.dim

    def spec(self):
        return {"type": "last", "dim": self.dim}

    def forward(self, x, train=False, rng=None):
        if x.ndim != 3:
            raise ContractViolation(f"last expects (batch, time, features), got {x.shape}")
        self._check_input(x)
        self._cache = (x.shape,)
        return x[:, -1]

    def backward(self, dy):
        (shape,) = self._take_cache()
        dx = np.zeros(shape)
        dx[:, -1] = dy
        return dx


class Parallel(Layer):
    """Run several sub-networks on the same input and concatenate outputs."""

    kind = "parallel"

    def __init__(self, branches):
        super().__init__()
        self.branches = list(branches)
        dims = {b.in_dim for b in self.branches}
        if len(dims) != 1:
            raise ContractViolation(f"parallel branches disagree on input width: {dims}")

    @property
    def in_dim(self):
        return self.branches[0].in_dim

    @property
    def out_dim(self):
        return sum(b.out_dim for b in self.branches)

    def params(self):
        return [p for b in self.branches for p in b.params()]

    def grads(self):
        return [g for b in self.branches for g in b.grads()]

    def param_names(self):
        return [f"branch{i}.{n}" for i, b in enumerate(self.branches) for n in b.param_names()]

    def spec(self):
        return {"type": "parallel", "branches": [b.spec() for b in self.branches]}

    def forward(self, x, train=False, rng=None):
        outs = [b.forward(x, train, rng) for b in self.branches]
        self._cache = ([o.shape[-1] for o in outs],)
        return np.concatenate(outs, axis=-1)

    def backward(self, dy):
        (widths,) = self._take_cache()
        dx = 0.0
        start = 0
        for b, w in zip(self.branches, widths):
            dx = dx + b.backward(dy[..., start:start + w])
            start += w
        return dx

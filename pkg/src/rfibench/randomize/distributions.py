"""Parameter sampling distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation

KINDS = ("uniform", "loguniform_factor", "categorical")


@dataclass(frozen=True)
class ParamDistribution:
    """``uniform(lo, hi)`` and ``categorical`` give absolute values;
    ``loguniform_factor(lo, hi)`` gives a multiplier for the baseline value."""

    kind: str
    lo: float = 0.0
    hi: float = 0.0
    values: tuple = ()
    probs: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown distribution kind {self.kind!r}")
        if self.kind == "categorical":
            values = tuple(float(v) for v in self.values)
            if not values:
                raise ContractViolation("categorical distribution needs values")
            probs = tuple(float(p) for p in self.probs) or (1.0 / len(values),) * len(values)
            if len(probs) != len(values) or min(probs) < 0:
                raise ContractViolation("categorical probs must match values and be >= 0")
            if abs(sum(probs) - 1.0) > 1e-9:
                raise ContractViolation(f"categorical probs sum to {sum(probs)}, not 1")
            object.__setattr__(self, "values", values)
            object.__setattr__(self, "probs", probs)
        else:
            if not self.lo <= self.hi:
                raise ContractViolation(f"{self.kind}: lo={self.lo} > hi={self.hi}")
            if self.kind == "loguniform_factor" and self.lo <= 0:
                raise ContractViolation("loguniform_factor requires lo > 0")

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", float(lo), float(hi))

    @classmethod
    def loguniform_factor(cls, lo, hi):
        return cls("loguniform_factor", float(lo), float(hi))

    @classmethod
    def categorical(cls, values, probs=()):
        return cls("categorical", values=tuple(values), probs=tuple(probs))

    @classmethod
    def from_config(cls, entry: dict) -> "ParamDistribution":
        entry = dict(entry)
        kind = entry.pop("kind", None)
        if kind == "categorical":
            return cls.categorical(entry.pop("values", ()), entry.pop("probs", ()))
        if kind in ("uniform", "loguniform_factor"):
            try:
                dist = cls(kind, float(entry.pop("lo")), float(entry.pop("hi")))
            except KeyError as exc:
                raise ContractViolation(f"{kind} needs lo and hi") from exc
            if entry:
                raise ContractViolation(f"unexpected keys {sorted(entry)}")
            return dist
        raise ContractViolation(f"unknown distribution kind {kind!r}")

    def to_config(self) -> dict:
        if self.kind == "categorical":
            return {"kind": self.kind, "values": list(self.values), "probs": list(self.probs)}
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}

    @property
    def multiplicative(self) -> bool:
        return self.kind == "loguniform_factor"

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size)
        if self.kind == "loguniform_factor":
            if self.lo == self.hi:
                return self.lo if size is None else np.full(size, self.lo)
            return np.exp(rng.uniform(np.log(self.lo), np.log(self.hi), size))
        idx = rng.choice(len(self.values), size=size, p=self.probs)
        return np.asarray(self.values)[idx] if size is not None else self.values[int(idx)]

    def quantile(self, p: float) -> float:
        """Inverse CDF; for categorical, the smallest value with CDF >= p."""
        if self.kind == "uniform":
            return self.lo + p * (self.hi - self.lo)
        if self.kind == "loguniform_factor":
            return float(np.exp(np.log(self.lo) + p * (np.log(self.hi) - np.log(self.lo))))
        order = np.argsort(self.values, kind="stable")
        cdf = np.cumsum(np.asarray(self.probs)[order])
        k = int(np.searchsorted(cdf, p - 1e-12))
        return float(np.asarray(self.values)[order][min(k, len(order) - 1)])

    def apply(self, baseline, sample):
        return baseline * sample if self.multiplicative else sample

    def support(self):
        """``(lo, hi)`` of the produced value (factors for loguniform)."""
        if self.kind == "categorical":
            return min(self.values), max(self.values)
        return self.lo, self.hi

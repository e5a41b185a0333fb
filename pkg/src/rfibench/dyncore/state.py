"""Value types for the generalized-coordinate dynamics core."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation, NumericError

_VECTOR_FIELDS = (
    "link_masses",
    "link_lengths",
    "joint_damping",
    "joint_dry_friction",
    "joint_armature",
    "controller_gains",
)
_SCALAR_FIELDS = (
    "control_period",
    "feedback_period",
    "object_mass",
    "object_radius",
    "surface_friction_mu",
    "gravity",
    "action_noise_range",
)
_INDEXED = re.compile(r"^([a-z_]+)\[(\d+)\]$")

# Relative slack when checking that control_period is a multiple of feedback_period.
_PERIOD_TOL = 1e-9


@dataclass(frozen=True)
class GeneralizedState:
    """Generalized positions ``q`` and velocities ``v`` at time ``t``."""

    q: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if q.shape != v.shape:
            raise ContractViolation(f"q has {q.size} entries but v has {v.size}")
        if self.t < 0:
            raise ContractViolation(f"time must be non-negative, got {self.t}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n_dof(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class AppliedForces:
    """Actuation torques, external point forces and the injected random force.

    ``external`` is a sequence of ``(f_k, J_k)`` pairs; each contributes
    ``J_k.T @ f_k`` to the generalized force.
    """

    tau: np.ndarray
    external: tuple = ()
    rfi: np.ndarray | None = None

    def generalized(self, n_dof: int, actuated: np.ndarray) -> np.ndarray:
        """Total non-bias generalized force for a model with ``n_dof`` DoFs."""
        tau = np.asarray(self.tau, dtype=float).reshape(-1)
        if tau.size != actuated.size:
            raise ContractViolation(
                f"expected {actuated.size} actuation torques, got {tau.size}"
            )
        f = np.zeros(n_dof)
        f[actuated] += tau
        for fk, jk in self.external:
            jk = np.atleast_2d(np.asarray(jk, dtype=float))
            fk = np.asarray(fk, dtype=float).reshape(-1)
            if jk.shape != (fk.size, n_dof):
                raise ContractViolation(
                    f"external force Jacobian has shape {jk.shape}, "
                    f"expected {(fk.size, n_dof)}"
                )
            f += jk.T @ fk
        if self.rfi is not None:
            rfi = np.asarray(self.rfi, dtype=float).reshape(-1)
            if rfi.size != n_dof:
                raise ContractViolation(f"rfi has {rfi.size} entries, model has {n_dof} DoFs")
            f += rfi
        return f


@dataclass(frozen=True)
class DynamicsParams:
    """The randomizable physical, actuation and noise parameters of a task.

    Per-joint entries are arrays with one value per actuated joint (per link
    for masses and lengths). ``controller_gains`` has shape ``(n_joints, 3)``
    holding ``(Kp, Ki, Kd)`` rows.
    """

    link_masses: np.ndarray
    link_lengths: np.ndarray
    joint_damping: np.ndarray
    joint_dry_friction: np.ndarray
    joint_armature: np.ndarray
    controller_gains: np.ndarray
    control_period: float = 0.1
    feedback_period: float = 0.002
    object_mass: float = 0.2
    object_radius: float = 0.03
    surface_friction_mu: float = 0.3
    gravity: float = 9.81
    action_noise_range: float = 0.0

    def __post_init__(self):
        for name in _VECTOR_FIELDS:
            arr = np.array(getattr(self, name), dtype=float)
            if name == "controller_gains":
                arr = arr.reshape(-1, 3)
            else:
                arr = arr.reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in _SCALAR_FIELDS:
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def n_joints(self) -> int:
        return self.joint_damping.size

    # -- validation -----------------------------------------------------
    def violations(self) -> list[str]:
        """Names of parameters that break the invariants (empty when valid)."""
        bad = []
        for name in _VECTOR_FIELDS + _SCALAR_FIELDS:
            if not np.all(np.isfinite(getattr(self, name))):
                bad.append(name)
        for name in ("link_masses", "link_lengths"):
            if np.any(getattr(self, name) <= 0):
                bad.append(name)
        for name in ("control_period", "feedback_period", "object_mass", "object_radius"):
            if getattr(self, name) <= 0:
                bad.append(name)
        for name in ("joint_damping", "joint_dry_friction", "joint_armature"):
            if np.any(getattr(self, name) < 0):
                bad.append(name)
        if np.any(self.controller_gains < 0):
            bad.append("controller_gains")
        if self.surface_friction_mu < 0:
            bad.append("surface_friction_mu")
        if self.action_noise_range < 0:
            bad.append("action_noise_range")
        n = self.n_joints
        for name in ("joint_dry_friction", "joint_armature"):
            if getattr(self, name).size != n:
                bad.append(name)
        if self.controller_gains.shape[0] != n:
            bad.append("controller_gains")
        if self.feedback_period > 0 and self.control_period > 0:
            ratio = self.control_period / self.feedback_period
            if self.feedback_period > self.control_period * (1 + _PERIOD_TOL) or abs(
                ratio - round(ratio)
            ) > 1e-6:
                bad.append("feedback_period")
        return sorted(set(bad))

    def validate(self) -> "DynamicsParams":
        bad = self.violations()
        if bad:
            raise ContractViolation(f"invalid dynamics parameters: {', '.join(bad)}")
        return self

    # -- named access ---------------------------------------------------
    def manifest(self) -> list[str]:
        """Every scalar parameter name, e.g. ``joint_damping[1]``."""
        names = []
        for name in _VECTOR_FIELDS:
            names += [f"{name}[{i}]" for i in range(getattr(self, name).size)]
        return names + list(_SCALAR_FIELDS)

    @staticmethod
    def field_names() -> tuple[str, ...]:
        return _VECTOR_FIELDS + _SCALAR_FIELDS

    def get(self, name: str):
        base, index = _split_name(name)
        value = getattr(self, base)
        if index is None:
            return value.copy() if isinstance(value, np.ndarray) else value
        return float(value.reshape(-1)[index])

    def size_of(self, name: str) -> int:
        base, index = _split_name(name)
        if index is not None:
            return 1
        value = getattr(self, base)
        return int(np.size(value))

    def replace(self, **values) -> "DynamicsParams":
        """Copy with some entries replaced; keys may be indexed names."""
        updates = {}
        for name, value in values.items():
            base, index = _split_name(name)
            current = updates.get(base, getattr(self, base))
            if index is None:
                if isinstance(current, np.ndarray):
                    arr = np.asarray(value, dtype=float)
                    if arr.size == current.size:
                        arr = arr.reshape(current.shape).copy()
                    else:
                        arr = np.broadcast_to(arr, current.shape).copy()
                    updates[base] = arr
                else:
                    updates[base] = float(value)
            else:
                if not isinstance(current, np.ndarray):
                    raise ContractViolation(f"{base} is scalar and cannot be indexed")
                arr = np.array(current, dtype=float)
                if index >= arr.size:
                    raise ContractViolation(f"{name}: index out of range")
                arr.reshape(-1)[index] = float(value)
                updates[base] = arr
        return dataclasses.replace(self, **updates)

    def to_dict(self) -> dict:
        out = {}
        for name in _VECTOR_FIELDS:
            out[name] = getattr(self, name).tolist()
        for name in _SCALAR_FIELDS:
            out[name] = getattr(self, name)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DynamicsParams":
        unknown = set(data) - set(_VECTOR_FIELDS + _SCALAR_FIELDS)
        if unknown:
            raise ContractViolation(f"unknown dynamics parameters: {sorted(unknown)}")
        return cls(**data)

    def finite_or_raise(self):
        for name in _VECTOR_FIELDS + _SCALAR_FIELDS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise NumericError(f"non-finite parameter {name}")


def _split_name(name: str):
    m = _INDEXED.match(name)
    if m:
        base, index = m.group(1), int(m.group(2))
    else:
        base, index = name, None
    if base not in _VECTOR_FIELDS + _SCALAR_FIELDS:
        raise ContractViolation(f"unknown parameter name {name!r}")
    return base, index

"""Closed-form mass matrices and bias forces for the desk-scale models.

Coordinates: arms are serial planar chains of point masses at the distal
end of each link. ``offset`` is the absolute angle of the first link at
``q = 0``; vertical arms use ``-pi/2`` so that ``q = 0`` hangs down.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .state import DynamicsParams

PHYSICS_DT = 0.002


class PlanarArm:
    """Serial planar arm, in a vertical plane (gravity along -y) or horizontal."""

    def __init__(self, n_links, vertical=True, joint_lower=None, joint_upper=None,
                 torque_limit=None, offset=None, dt=PHYSICS_DT):
        self.n_links = int(n_links)
        self.vertical = bool(vertical)
        self.offset = float(-np.pi / 2 if offset is None and vertical else (offset or 0.0))
        n = self.n_links
        self.joint_lower = _vec(joint_lower, n, -np.inf)
        self.joint_upper = _vec(joint_upper, n, np.inf)
        self.torque_limit = _vec(torque_limit, n, np.inf)
        self.dt = dt

    @property
    def n_dof(self) -> int:
        return self.n_links

    @property
    def actuated(self) -> np.ndarray:
        return np.arange(self.n_links)

    def mass_matrix(self, q, params: DynamicsParams) -> np.ndarray:
        return kernels.arm_mass_matrix(
            np.asarray(q, float), params.link_lengths, params.link_masses,
            params.joint_armature, self.offset,
        )

    def gravity_load(self, q, params: DynamicsParams, masses=None) -> np.ndarray:
        if not self.vertical:
            return np.zeros(self.n_links)
        masses = params.link_masses if masses is None else np.asarray(masses, float)
        return kernels.arm_gravity(
            np.asarray(q, float), params.link_lengths, masses, params.gravity, self.offset
        )

    def dissipation(self, v, params: DynamicsParams):
        return kernels.dissipation(
            np.asarray(v, float), params.joint_damping, params.joint_dry_friction,
            kernels.SHARPNESS,
        )

    def bias(self, q, v, params: DynamicsParams) -> np.ndarray:
        q = np.asarray(q, float)
        v = np.asarray(v, float)
        c = kernels.arm_coriolis(q, v, params.link_lengths, params.link_masses, self.offset)
        c = c + self.gravity_load(q, params)
        return c + self.dissipation(v, params)[0]

    def points(self, q, params: DynamicsParams) -> np.ndarray:
        return kernels.arm_points(np.asarray(q, float), params.link_lengths, self.offset)

    def ee_position(self, q, params: DynamicsParams) -> np.ndarray:
        return self.points(q, params)[-1]

    def orientation(self, q) -> float:
        return self.offset + float(np.sum(q))

    def task_jacobian(self, q, params: DynamicsParams, rows=2) -> np.ndarray:
        """End-effector Jacobian; ``rows=3`` appends the orientation row."""
        jac = kernels.arm_point_jacobians(np.asarray(q, float), params.link_lengths, self.offset)
        j = jac[-1]
        if rows == 3:
            j = np.vstack([j, np.ones((1, self.n_links))])
        return j

    def kinetic_energy(self, q, v, params) -> float:
        v = np.asarray(v, float)
        return 0.5 * float(v @ self.mass_matrix(q, params) @ v)


class DecoupledJoints:
    """Independent revolute joints: ``M = diag(m l^2 + armature)``.

    Used for the tilting plate, and (with ``stiffness``) as a linear
    oscillator test model.
    """

    def __init__(self, n, stiffness=0.0, joint_lower=None, joint_upper=None,
                 torque_limit=None, dt=PHYSICS_DT):
        self.n = int(n)
        self.stiffness = _vec(stiffness, self.n, 0.0)
        self.joint_lower = _vec(joint_lower, self.n, -np.inf)
        self.joint_upper = _vec(joint_upper, self.n, np.inf)
        self.torque_limit = _vec(torque_limit, self.n, np.inf)
        self.dt = dt

    @property
    def n_dof(self) -> int:
        return self.n

    @property
    def actuated(self) -> np.ndarray:
        return np.arange(self.n)

    def mass_matrix(self, q, params: DynamicsParams) -> np.ndarray:
        return kernels.plate_inertia(params.link_masses, params.link_lengths, params.joint_armature)

    def gravity_load(self, q, params, masses=None) -> np.ndarray:
        return np.zeros(self.n)

    def dissipation(self, v, params: DynamicsParams):
        return kernels.dissipation(
            np.asarray(v, float), params.joint_damping, params.joint_dry_friction,
            kernels.SHARPNESS,
        )

    def bias(self, q, v, params: DynamicsParams) -> np.ndarray:
        return self.stiffness * np.asarray(q, float) + self.dissipation(v, params)[0]

    def kinetic_energy(self, q, v, params) -> float:
        v = np.asarray(v, float)
        return 0.5 * float(v @ self.mass_matrix(q, params) @ v)


def _vec(value, n, default):
    if value is None:
        return np.full(n, default, dtype=float)
    return np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()

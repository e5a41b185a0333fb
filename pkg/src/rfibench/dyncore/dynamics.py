"""Forward dynamics, integration, inverse kinematics, PID and contact."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation, NumericError
from . import kernels
from .state import AppliedForces, DynamicsParams, GeneralizedState


def _check_state(model, state: GeneralizedState):
    if state.n_dof != model.n_dof:
        raise ContractViolation(f"state has {state.n_dof} DoFs, model has {model.n_dof}")
    for arr in (state.q, state.v):
        bad = kernels.first_nonfinite(arr)
        if bad >= 0:
            raise NumericError(f"non-finite state entry at DoF {bad}", index=bad)


def forward_dynamics(model, state: GeneralizedState, params: DynamicsParams,
                     forces: AppliedForces) -> np.ndarray:
    """Generalized acceleration ``M^-1 (S tau + sum J_k^T f_k + f_r - c)``."""
    _check_state(model, state)
    f = forces.generalized(model.n_dof, model.actuated)
    if not np.all(np.isfinite(f)):
        raise NumericError("non-finite applied force")
    m = model.mass_matrix(state.q, params)
    c = model.bias(state.q, state.v, params)
    return np.linalg.solve(m, f - c)


def step(model, state: GeneralizedState, params: DynamicsParams,
         forces: AppliedForces, dt: float) -> GeneralizedState:
    """Semi-implicit Euler step with joint-limit clamping.

    Viscous damping and smoothed dry friction are integrated
    linearly-implicitly (``(M + dt*D) dv = dt*(f - c)``), which keeps the
    stiff friction term from chattering; everything else is explicit.
    """
    if dt <= 0:
        raise ContractViolation(f"dt must be positive, got {dt}")
    if model.dt is not None and abs(dt - model.dt) > 1e-12:
        raise ContractViolation(f"dt={dt} differs from the model timestep {model.dt}")
    _check_state(model, state)
    f = forces.generalized(model.n_dof, model.actuated)
    m = model.mass_matrix(state.q, params)
    c = model.bias(state.q, state.v, params)
    _, coeff = model.dissipation(state.v, params)
    acc = kernels.implicit_accel(m, f - c, coeff, dt)
    v = state.v + acc * dt
    q = state.q + v * dt
    kernels.clamp_limits(q, v, model.joint_lower, model.joint_upper)
    for arr in (v, q):
        bad = kernels.first_nonfinite(arr)
        if bad >= 0:
            raise NumericError(f"non-finite state after step at DoF {bad}", index=bad)
    return GeneralizedState(q, v, state.t + dt)


def jacobian_ik(model, cartesian_vel, q, params: DynamicsParams, damping=1e-4) -> np.ndarray:
    """Damped least-squares joint velocities ``J^T (J J^T + lambda^2 I)^-1 xdot``.

    ``cartesian_vel`` of length 3 also constrains the end-effector
    orientation rate.
    """
    xdot = np.asarray(cartesian_vel, float).reshape(-1)
    j = model.task_jacobian(q, params, rows=xdot.size)
    jjt = j @ j.T + damping**2 * np.eye(xdot.size)
    return j.T @ np.linalg.solve(jjt, xdot)


@dataclass
class PIDState:
    """Integrator and previous-error memory of the joint velocity loop."""

    integral: np.ndarray
    prev_error: np.ndarray
    fresh: np.ndarray

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), np.ones(n, dtype=bool))

    def reset(self):
        self.integral[:] = 0.0
        self.prev_error[:] = 0.0
        self.fresh[:] = True


def pd_velocity_loop(model, target_joint_vel, state: GeneralizedState, params: DynamicsParams,
                     pid: PIDState, gravity_masses=None, rfi=None, deadband=0.0):
    """Run the joint velocity PID for one control period.

    The PID output is recomputed every ``feedback_period`` and held in
    between; the plant advances with :func:`step` at the model timestep.
    ``gravity_masses`` enables gravity compensation with the given
    (controller-side) link masses. ``rfi`` optionally supplies one random
    generalized force row per physics step.

    Returns ``(torques, final_state)`` where ``torques`` has one row per
    feedback update.
    """
    dt = model.dt
    n_sub = int(round(params.control_period / dt))
    n_fb = int(round(params.feedback_period / dt))
    if n_sub < 1 or n_fb < 1 or n_sub % n_fb:
        raise ContractViolation("control/feedback periods are not multiples of the timestep")
    target = np.asarray(target_joint_vel, float).reshape(-1)
    if target.size != model.actuated.size:
        raise ContractViolation(f"expected {model.actuated.size} joint targets, got {target.size}")
    torques = []
    tau = np.zeros(target.size)
    act = model.actuated
    for s in range(n_sub):
        if s % n_fb == 0:
            err = target - state.v[act]
            tau = kernels.pid_torque(err, pid.integral, pid.prev_error, pid.fresh,
                                     params.controller_gains, n_fb * dt, model.torque_limit[act])
            if gravity_masses is not None:
                tau = tau + model.gravity_load(state.q, params, gravity_masses)[act]
            tau = kernels.shape_torque(tau, model.torque_limit[act], float(deadband))
            torques.append(tau)
        f_r = None if rfi is None else rfi[s]
        state = step(model, state, params, AppliedForces(tau=tau, rfi=f_r), dt)
    return np.array(torques), state


@dataclass(frozen=True)
class ObjectState:
    """Planar pose and twist of a sliding disc (metres, radians)."""

    pos: np.ndarray
    vel: np.ndarray
    yaw: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pos", np.asarray(self.pos, float).reshape(2))
        object.__setattr__(self, "vel", np.asarray(self.vel, float).reshape(2))

    def as_array(self) -> np.ndarray:
        return np.array([*self.pos, self.yaw, *self.vel, self.omega])

    @classmethod
    def from_array(cls, arr):
        return cls(arr[0:2], arr[3:5], float(arr[2]), float(arr[5]))


def planar_contact_step(obj: ObjectState, surface_tilt, mu: float, applied_force,
                        params: DynamicsParams, dt: float) -> ObjectState:
    """Advance a disc resting on a (possibly tilted) plane by one step.

    ``surface_tilt`` is ``(about_x, about_y)`` in radians or ``None`` for a
    level surface. ``applied_force`` is ``(fx, fy)`` or ``(fx, fy, torque)``
    in the surface frame.
    """
    f = np.zeros(3)
    src = np.asarray(applied_force, float).reshape(-1)
    f[: src.size] = src
    tilt = np.zeros(2) if surface_tilt is None else np.asarray(surface_tilt, float)
    g_t, g_n = kernels.plate_gravity(tilt, params.gravity)
    pos, vel, yaw, omega = kernels.puck_step(
        obj.pos, obj.vel, obj.yaw, obj.omega, f[:2], f[2],
        params.object_mass, params.object_radius, mu, g_t, g_n, dt,
    )
    return ObjectState(pos, vel, yaw, omega)

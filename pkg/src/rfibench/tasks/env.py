"""The reach, push and slide environments.

A policy step applies one normalised action for one control period:
action noise, inverse kinematics (reach, push), the joint velocity PID and
the physics sub-steps with a fresh random force row per sub-step under the
RFI regimes. Observations are corrupted (delay, noise, bias) after the
true observation is formed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..dyncore import PIDState, jacobian_ik, kernels
from ..dyncore.models import DecoupledJoints, PlanarArm
from ..errors import ContractViolation, NumericError
from ..randomize import (
    DelayBuffer,
    EnvRealization,
    EpisodeStreams,
    corrupt_observation,
    sample_rfi_force,
)
from .spec import TaskSpec
from .success import is_success, reward


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    terminated: bool
    info: dict = field(default_factory=dict)
    done: bool = False


def two_link_ik(target, l1, l2, offset, elbow):
    x, y = float(target[0]), float(target[1])
    d = np.clip((x * x + y * y - l1 * l1 - l2 * l2) / (2 * l1 * l2), -1.0, 1.0)
    q2 = elbow * np.arccos(d)
    phi1 = np.arctan2(y, x) - np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2))
    q1 = (phi1 - offset + np.pi) % (2 * np.pi) - np.pi
    return np.array([q1, q2])


class TaskEnv:
    task_id = ""
    obs_dim = 0
    act_dim = 2
    position_dims: tuple = ()

    def __init__(self, spec: TaskSpec, model, cfg: dict):
        self.spec = spec
        self.model = model
        self.cfg = dict(cfg)
        self.dt = model.dt
        self.record = False
        self.log: list[dict] = []
        self._real: EnvRealization | None = None

    # -- subclass hooks ---------------------------------------------------
    n_dof = 0

    @property
    def n_joints(self) -> int:
        return self.model.n_dof

    def _place(self, rng, tier):
        raise NotImplementedError

    def _advance(self, action, rfi):
        raise NotImplementedError

    def _raw_obs(self) -> np.ndarray:
        raise NotImplementedError

    def goal_distance(self) -> float:
        raise NotImplementedError

    def tracked(self) -> dict:
        raise NotImplementedError

    # -- episode ------------------------------------------------------------
    def reset(self, realization: EnvRealization, streams, tier: str | None = None) -> np.ndarray:
        """Start an episode in ``realization``; ``streams`` is an
        :class:`EpisodeStreams` or an integer seed."""
        if not isinstance(streams, EpisodeStreams):
            streams = EpisodeStreams.for_episode(int(streams), 0)
        p = realization.params.validate()
        self._real = realization
        self.streams = streams
        self.n_sub = int(round(p.control_period / self.dt))
        self.n_fb = int(round(p.feedback_period / self.dt))
        if self.n_sub < 1 or self.n_fb < 1 or self.n_sub % self.n_fb:
            raise ContractViolation("control/feedback period not a multiple of the timestep")
        if realization.rfi_config is not None and realization.rfi_config.size != self.n_dof:
            raise ContractViolation(
                f"rfi_config has {realization.rfi_config.size} entries, task has {self.n_dof} DoFs"
            )
        self._zero_rfi = np.zeros((self.n_sub, self.n_dof))
        self.pid = PIDState.zeros(self.n_joints)
        self._args = self._kernel_args(realization)
        self.t_step = 0
        self.time = 0.0
        self.last_command = np.zeros(self.n_joints)
        self._place(streams.reset, tier)
        raw = self._raw_obs()
        self._delay = DelayBuffer(raw, realization.obs_corruption.delay)
        obs = self._corrupt(raw)
        self.distances: list[float] = []
        self.terminated = False
        self.log = []
        if self.record:
            self._log_row(obs, np.zeros(self.act_dim), 0.0)
        return obs

    def _corrupt(self, raw):
        real = self._real
        obs = corrupt_observation(raw, real.obs_corruption, self._delay, self.streams.obs)
        if real.effects.obs_bias:
            obs[list(self.position_dims)] += real.effects.obs_bias
        return obs

    def step(self, action) -> StepOutcome:
        if self._real is None:
            raise ContractViolation("step() before reset()")
        if self.t_step >= self.spec.n_steps or self.terminated:
            raise ContractViolation("episode is over; call reset()")
        a = np.asarray(action, float).reshape(-1)
        if a.size != self.act_dim:
            raise ContractViolation(f"action has {a.size} entries, task expects {self.act_dim}")
        if not np.all(np.isfinite(a)):
            raise NumericError("non-finite action")
        clamped = bool(np.any(np.abs(a) > 1.0))
        a = np.clip(a, -1.0, 1.0)
        anr = self._real.params.action_noise_range
        if anr > 0:
            a = a + self.streams.action.uniform(-anr, anr, a.size)
        rfi = (sample_rfi_force(self._real.rfi_config, self.streams.force, size=self.n_sub)
               if self._real.rfi_active else self._zero_rfi)
        limit_hit = self._advance(a, rfi)
        self.t_step += 1
        self.time += self.n_sub * self.dt
        obs = self._corrupt(self._raw_obs())
        dist = self.goal_distance()
        self.distances.append(dist)
        flags = self._flags()
        terminated = bool(flags.get("fell_off", False))
        self.terminated = terminated
        r = self.reward(limit_hit, flags)
        info = {"goal_distance": dist, "limit_hit": bool(limit_hit),
                "action_clamped": clamped, **flags}
        done = terminated or self.t_step >= self.spec.n_steps
        if self.record:
            self._log_row(obs, a, r)
        return StepOutcome(obs, r, terminated, info, done)

    def reward(self, limit_hit=False, flags=None) -> float:
        flags = self._flags() if flags is None else flags
        return reward(self.task_id, self.goal_distance(), self.spec.success_threshold,
                      self.spec.weights, limit_hit=limit_hit,
                      table_hit=flags.get("table_hit", False),
                      ee_object_distance=flags.get("ee_object_distance", 0.0),
                      fell_off=flags.get("fell_off", False))

    def _flags(self) -> dict:
        return {}

    def success(self) -> bool:
        return is_success(self.distances, self.spec, self.terminated)

    # -- proprioception -------------------------------------------------------
    @property
    def joint_pos(self) -> np.ndarray:
        return self.q.copy()

    @property
    def joint_vel(self) -> np.ndarray:
        return self.v.copy()

    def _check(self, bad):
        if bad >= 0:
            raise NumericError(f"non-finite state at DoF {bad} (step {self.t_step})", index=bad)

    def _log_row(self, obs, action, r):
        row = {"t": self.time}
        for i, x in enumerate(self.q):
            row[f"q{i}"] = x
        for i, x in enumerate(self.v):
            row[f"v{i}"] = x
        for k, x in self.tracked().items():
            row[k] = x
        for i, x in enumerate(obs):
            row[f"obs{i}"] = x
        for i, x in enumerate(action):
            row[f"act{i}"] = x
        row["reward"] = r
        self.log.append(row)

    def write_log(self, path):
        if not self.log:
            raise ContractViolation("nothing recorded; set env.record = True before reset")
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.log[0]))
            writer.writeheader()
            for row in self.log:
                writer.writerow({k: repr(float(v)) for k, v in row.items()})

    def _arm_arrays(self, real: EnvRealization):
        p = real.params
        return dict(
            lengths=np.array(p.link_lengths), masses=np.array(p.link_masses),
            armature=np.array(p.joint_armature), damping=np.array(p.joint_damping),
            dry=np.array(p.joint_dry_friction), gains=np.array(p.controller_gains),
            tau_limit=np.array(self.model.torque_limit), q_lo=np.array(self.model.joint_lower),
            q_hi=np.array(self.model.joint_upper),
        )

    def _limit_speed(self, qdot):
        qmax = np.asarray(self.cfg["max_joint_speed"], float)
        scale = np.max(np.abs(qdot) / qmax)
        return qdot / scale if scale > 1.0 else qdot


class ReachEnv(TaskEnv):
    """Two-link arm in a vertical plane reaching a point above a table line.

    Observation: goal - ee (2), ee velocity (2). Action: in-plane Cartesian
    velocity, scaled by ``max_cartesian_speed``.
    """

    task_id = "reach"
    obs_dim = 4
    position_dims = (0, 1)

    n_dof = 2

    def _kernel_args(self, real):
        a = self._arm_arrays(real)
        a["comp_masses"] = np.array(real.controller_params.link_masses)
        return a

    def _place(self, rng, tier):
        if tier is None:
            start = self.spec.start_region.sample(rng)
            goal = self.spec.goal_region.sample(rng)
        else:
            t = self.spec.tier(tier)
            start, goal = t.start.copy(), t.goal.copy()
        p = self._real.controller_params
        self.q = two_link_ik(start, p.link_lengths[0], p.link_lengths[1], self.model.offset,
                             self.cfg.get("elbow", -1.0))
        self.v = np.zeros(2)
        self.goal = np.asarray(goal, float)

    def ee(self):
        return self.model.ee_position(self.q, self._real.params)

    def ee_velocity(self):
        return self.model.task_jacobian(self.q, self._real.params) @ self.v

    def _advance(self, a, rfi):
        xdot = a * self.cfg["max_cartesian_speed"]
        qdot = jacobian_ik(self.model, xdot, self.q, self._real.controller_params,
                           self.cfg.get("ik_damping", 1e-2))
        qdot = self._limit_speed(qdot)
        self.last_command = qdot
        g = self._args
        p = self._real.params
        q, v, hit, bad = kernels.arm_period(
            self.q, self.v, qdot, self.pid.integral, self.pid.prev_error, self.pid.fresh,
            g["lengths"], g["masses"], g["armature"], g["damping"], g["dry"], g["gains"],
            p.gravity, g["comp_masses"], g["tau_limit"], g["q_lo"], g["q_hi"], rfi,
            self.n_fb, self.dt, self._real.effects.deadband, self.model.offset,
        )
        self._check(bad)
        self.q, self.v = q, v
        return hit

    def _raw_obs(self):
        return np.concatenate([self.goal - self.ee(), self.ee_velocity()])

    def goal_distance(self):
        return float(np.linalg.norm(self.ee() - self.goal))

    def _flags(self):
        return {"table_hit": bool(self.ee()[1] <= self.cfg["table_height"])}

    def tracked(self):
        e, ev = self.ee(), self.ee_velocity()
        return {"ee_x": e[0], "ee_y": e[1], "ee_vx": ev[0], "ee_vy": ev[1]}


class PushEnv(TaskEnv):
    """Three-link horizontal arm pushing a disc to a goal.

    Observation: ee->puck (2), puck->goal (2), ee velocity (2), puck velocity
    (2), sin/cos of puck yaw (2).
    """

    task_id = "push"
    obs_dim = 10
    position_dims = (0, 1, 2, 3)

    n_dof = 6

    def _kernel_args(self, real):
        return self._arm_arrays(real)

    def _place(self, rng, tier):
        p = self._real.params
        cp = self._real.controller_params
        if tier is None:
            start = self.spec.start_region.sample(rng)
            goal = self.spec.goal_region.sample(rng)
            jitter = rng.uniform(-1.0, 1.0) * np.deg2rad(self.cfg.get("puck_angle_jitter_deg", 30.0))
            gap = rng.uniform(0.0, self.cfg.get("puck_gap", 0.01))
        else:
            t = self.spec.tier(tier)
            start, goal = t.start.copy(), t.goal.copy()
            jitter, gap = 0.0, 0.5 * self.cfg.get("puck_gap", 0.01)
        self.phi_ref = float(self.cfg.get("ee_orientation", 0.0))
        lengths = cp.link_lengths
        wrist = start - lengths[2] * np.array([np.cos(self.phi_ref), np.sin(self.phi_ref)])
        q12 = two_link_ik(wrist, lengths[0], lengths[1], self.model.offset,
                          self.cfg.get("elbow", 1.0))
        q3 = self.phi_ref - self.model.offset - q12.sum()
        q3 = (q3 + np.pi) % (2 * np.pi) - np.pi
        self.q = np.array([q12[0], q12[1], q3])
        self.v = np.zeros(3)
        ee = self.model.ee_position(self.q, p)
        heading = np.arctan2(goal[1] - ee[1], goal[0] - ee[0]) + jitter
        r = self.cfg["tip_radius"] + p.object_radius + gap
        puck_xy = ee + r * np.array([np.cos(heading), np.sin(heading)])
        self.puck = np.array([puck_xy[0], puck_xy[1], 0.0, 0.0, 0.0, 0.0])
        self.goal = np.asarray(goal, float)

    def ee(self):
        return self.model.ee_position(self.q, self._real.params)

    def ee_velocity(self):
        return self.model.task_jacobian(self.q, self._real.params) @ self.v

    def _advance(self, a, rfi):
        xdot = np.empty(3)
        xdot[:2] = a * self.cfg["max_cartesian_speed"]
        err = (self.phi_ref - self.model.orientation(self.q) + np.pi) % (2 * np.pi) - np.pi
        xdot[2] = self.cfg.get("orientation_gain", 1.0) * err
        qdot = jacobian_ik(self.model, xdot, self.q, self._real.controller_params,
                           self.cfg.get("ik_damping", 1e-2))
        qdot = self._limit_speed(qdot)
        self.last_command = qdot
        g = self._args
        p = self._real.params
        eff = self._real.effects
        q, v, puck, hit, bad = kernels.push_period(
            self.q, self.v, self.puck, qdot, self.pid.integral, self.pid.prev_error,
            self.pid.fresh, g["lengths"], g["masses"], g["armature"], g["damping"], g["dry"],
            g["gains"], g["tau_limit"], g["q_lo"], g["q_hi"], rfi, self.n_fb, self.dt,
            eff.deadband, self.model.offset, self.cfg["tip_radius"], p.object_mass,
            p.object_radius, p.surface_friction_mu, p.gravity,
            self.cfg["contact_stiffness"] * eff.contact_stiffness_scale,
            self.cfg["contact_damping"], eff.object_drag,
        )
        self._check(bad)
        self.q, self.v, self.puck = q, v, puck
        return hit

    def _raw_obs(self):
        ee = self.ee()
        pp = self.puck[0:2]
        yaw = self.puck[2]
        return np.concatenate([pp - ee, self.goal - pp, self.ee_velocity(), self.puck[3:5],
                               [np.sin(yaw), np.cos(yaw)]])

    def goal_distance(self):
        return float(np.linalg.norm(self.puck[0:2] - self.goal))

    def _flags(self):
        return {"ee_object_distance": float(np.linalg.norm(self.puck[0:2] - self.ee()))}

    def tracked(self):
        e, ev = self.ee(), self.ee_velocity()
        return {"ee_x": e[0], "ee_y": e[1], "ee_vx": ev[0], "ee_vy": ev[1],
                "puck_x": self.puck[0], "puck_y": self.puck[1], "puck_yaw": self.puck[2]}


class SlideEnv(TaskEnv):
    """Two-joint tilting plate sliding a disc to a fixed goal.

    Observation: puck position relative to the goal (2), puck velocity (2),
    sin/cos of puck yaw (2), joint positions (2), joint velocities (2).
    Action: joint velocity targets scaled by ``max_joint_speed``.
    """

    task_id = "slide"
    obs_dim = 10
    position_dims = (0, 1)

    n_dof = 5

    def _kernel_args(self, real):
        return self._arm_arrays(real)

    def _place(self, rng, tier):
        if tier is None:
            start = self.spec.start_region.sample(rng)
            goal = self.spec.goal_region.center
        else:
            t = self.spec.tier(tier)
            start, goal = t.start.copy(), t.goal.copy()
        self.q = np.zeros(2)
        self.v = np.zeros(2)
        self.puck = np.array([start[0], start[1], 0.0, 0.0, 0.0, 0.0])
        self.goal = np.asarray(goal, float)

    def _advance(self, a, rfi):
        qdot = a * np.asarray(self.cfg["max_joint_speed"], float)
        self.last_command = qdot
        g = self._args
        p = self._real.params
        eff = self._real.effects
        q, v, puck, hit, bad = kernels.slide_period(
            self.q, self.v, self.puck, qdot, self.pid.integral, self.pid.prev_error,
            self.pid.fresh, g["lengths"], g["masses"], g["armature"], g["damping"], g["dry"],
            g["gains"], g["tau_limit"], g["q_lo"], g["q_hi"], rfi, self.n_fb, self.dt,
            eff.deadband, p.object_mass, p.object_radius, p.surface_friction_mu, p.gravity,
            eff.object_drag,
        )
        self._check(bad)
        self.q, self.v, self.puck = q, v, puck
        return hit

    def _raw_obs(self):
        yaw = self.puck[2]
        return np.concatenate([self.puck[0:2] - self.goal, self.puck[3:5],
                               [np.sin(yaw), np.cos(yaw)], self.q, self.v])

    def goal_distance(self):
        return float(np.linalg.norm(self.puck[0:2] - self.goal))

    def _flags(self):
        half = np.asarray(self.cfg["plate_half_size"], float)
        return {"fell_off": bool(np.any(np.abs(self.puck[0:2]) > half))}

    def tracked(self):
        return {"joint_0": self.q[0], "joint_1": self.q[1], "puck_x": self.puck[0],
                "puck_y": self.puck[1], "puck_yaw": self.puck[2]}


ENV_CLASSES = {"reach": ReachEnv, "push": PushEnv, "slide": SlideEnv}


def build_model(task_id: str, cfg: dict):
    if task_id == "reach":
        return PlanarArm(2, vertical=True, joint_lower=cfg["joint_lower"],
                         joint_upper=cfg["joint_upper"], torque_limit=cfg["torque_limit"])
    if task_id == "push":
        return PlanarArm(3, vertical=False, joint_lower=cfg["joint_lower"],
                         joint_upper=cfg["joint_upper"], torque_limit=cfg["torque_limit"],
                         offset=0.0)
    if task_id == "slide":
        return DecoupledJoints(2, joint_lower=cfg["joint_lower"], joint_upper=cfg["joint_upper"],
                               torque_limit=cfg["torque_limit"])
    raise ContractViolation(f"unknown task {task_id!r}")


def make_env(spec: TaskSpec, cfg: dict) -> TaskEnv:
    return ENV_CLASSES[spec.task_id](spec, build_model(spec.task_id, cfg), cfg)

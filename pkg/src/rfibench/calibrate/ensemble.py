"""Trajectory ensembles and simulated-vs-target envelope comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from ..randomize import EpisodeStreams, sample_environment
from ..randomize.rng import DOMAIN_CALIBRATE, STREAM_ENV, stream


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """``data[i, t, c]``: trajectory ``i``, step ``t``, channel ``channels[c]``."""

    channels: tuple
    data: np.ndarray
    dt: float = 0.1

    def __post_init__(self):
        data = np.asarray(self.data, float)
        if data.ndim != 3 or data.shape[2] != len(self.channels):
            raise ContractViolation(
                f"data must be (n, steps, {len(self.channels)}), got {data.shape}")
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def length(self) -> int:
        return self.data.shape[1]

    def mean(self) -> np.ndarray:
        return self.data.mean(axis=0)

    def select(self, channels) -> "TrajectoryEnsemble":
        missing = [c for c in channels if c not in self.channels]
        if missing:
            raise ContractViolation(f"unknown channels {missing}; have {list(self.channels)}")
        idx = [self.channels.index(c) for c in channels]
        return TrajectoryEnsemble(tuple(channels), self.data[:, :, idx], self.dt)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trajectory", "step", *self.channels])
            for i in range(self.n):
                for t in range(self.length):
                    w.writerow([i, t, *(repr(float(x)) for x in self.data[i, t])])

    @classmethod
    def from_csv(cls, path, dt=0.1) -> "TrajectoryEnsemble":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header[:2] != ["trajectory", "step"]:
            raise ContractViolation("ensemble CSV must start with trajectory,step columns")
        channels = tuple(header[2:])
        ids = sorted({int(r[0]) for r in body})
        steps = sorted({int(r[1]) for r in body})
        data = np.full((len(ids), len(steps), len(channels)), np.nan)
        for r in body:
            data[ids.index(int(r[0])), steps.index(int(r[1]))] = [float(x) for x in r[2:]]
        if np.isnan(data).any():
            raise ContractViolation("ensemble CSV has missing rows")
        return cls(channels, data, dt)


def default_channels(task_id: str) -> tuple:
    if task_id == "slide":
        return ("puck_x", "puck_y", "joint_0", "joint_1")
    return ("ee_x", "ee_y", "ee_vx", "ee_vy")


def rollout_scripted(env, realization, policy, streams, channels) -> np.ndarray:
    """Run ``policy`` open loop for one episode; returns ``(steps, channels)``."""
    env.reset(realization, streams)
    rows = []
    for t in range(env.spec.n_steps):
        out = env.step(policy.act(t))
        tracked = env.tracked()
        rows.append([tracked[c] for c in channels])
        if out.done:
            break
    return np.asarray(rows, float)


def collect_ensemble(env, policy, realizations, seed=0, channels=None) -> TrajectoryEnsemble:
    """One scripted rollout per realization (a list or a callable ``i -> realization``
    together with ``n``)."""
    channels = tuple(channels or default_channels(env.task_id))
    data = [rollout_scripted(env, real, policy, EpisodeStreams.for_episode(seed, i, DOMAIN_CALIBRATE),
                             channels)
            for i, real in enumerate(realizations)]
    return TrajectoryEnsemble(channels, np.stack(data), dt=1.0 / env.spec.policy_rate)


def regime_ensemble(cfg, regime_kind, policy, n, seed=0, channels=None) -> TrajectoryEnsemble:
    """Scripted-policy ensemble under ``n`` environments drawn from a regime."""
    env = cfg.make_env()
    regime = cfg.regime(regime_kind)
    reals = [sample_environment(regime, cfg.baseline, stream(seed, DOMAIN_CALIBRATE, i, STREAM_ENV), cfg.obs_dim)
             for i in range(n)]
    return collect_ensemble(env, policy, reals, seed=seed, channels=channels)


@dataclass
class SpreadReport:
    channels: tuple
    sim_mean: np.ndarray
    sim_min: np.ndarray
    sim_max: np.ndarray
    target_mean: np.ndarray
    coverage: dict
    overall_coverage: float
    mean_discrepancy: float

    def summary(self) -> dict:
        return {"coverage": self.coverage, "overall_coverage": self.overall_coverage,
                "mean_discrepancy": self.mean_discrepancy}


def spread_report(sim: TrajectoryEnsemble, target: TrajectoryEnsemble, svg_path=None,
                  title: str | None = None) -> SpreadReport:
    """Envelope of ``sim`` against the samples of ``target``.

    Coverage is the fraction of target samples (over trajectories and
    steps) inside the pointwise sim min/max envelope.
    """
    if set(sim.channels) != set(target.channels):
        raise ContractViolation(
            f"channel mismatch: sim {list(sim.channels)} vs target {list(target.channels)}")
    target = target.select(sim.channels)
    if sim.length != target.length:
        raise ContractViolation(f"length mismatch: sim {sim.length} vs target {target.length}")
    lo, hi = sim.data.min(axis=0), sim.data.max(axis=0)
    inside = (target.data >= lo) & (target.data <= hi)
    coverage = {c: float(inside[:, :, k].mean()) for k, c in enumerate(sim.channels)}
    report = SpreadReport(
        channels=sim.channels, sim_mean=sim.mean(), sim_min=lo, sim_max=hi,
        target_mean=target.mean(), coverage=coverage, overall_coverage=float(inside.mean()),
        mean_discrepancy=float(np.mean(np.abs(sim.mean() - target.mean()))),
    )
    if svg_path is not None:
        plot_spread(report, svg_path, dt=sim.dt, title=title)
    return report


def plot_spread(report: SpreadReport, path, dt=0.1, title=None):
    from ..plotting import PALETTE, new_figure, save_svg

    k = len(report.channels)
    fig, axes = new_figure(6.0, 1.8 * k, nrows=k)
    t = np.arange(report.sim_mean.shape[0]) * dt
    for i, name in enumerate(report.channels):
        ax = axes[i, 0]
        ax.fill_between(t, report.sim_min[:, i], report.sim_max[:, i], color=PALETTE[0], alpha=0.25,
                        linewidth=0, label="sim envelope")
        ax.plot(t, report.sim_mean[:, i], color=PALETTE[0], linewidth=2.2, label="sim mean")
        ax.plot(t, report.target_mean[:, i], color=PALETTE[1], linewidth=2.2, label="target mean")
        ax.set_ylabel(name)
        ax.text(0.99, 0.9, f"coverage {report.coverage[name]:.2f}", transform=ax.transAxes,
                ha="right", va="top", fontsize=8)
    axes[-1, 0].set_xlabel("time [s]")
    axes[0, 0].legend(fontsize=7, loc="lower left")
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    save_svg(fig, path)

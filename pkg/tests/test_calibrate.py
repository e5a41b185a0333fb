import numpy as np
import pytest

from rfibench.calibrate import (
    DEConfig,
    TrajectoryEnsemble,
    collect_ensemble,
    differential_evolution,
    fit_baseline_detailed,
    regime_ensemble,
    scripted_policy,
    spread_report,
)
from rfibench.config import load_config
from rfibench.errors import ContractViolation
from rfibench.randomize import EnvRealization


def sphere(x):
    return float(np.sum(x**2))


def rosenbrock(x):
    return float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2)


def test_de_config_invariants():
    with pytest.raises(ContractViolation):
        DEConfig([0, 0], [1, 1], population=3)
    with pytest.raises(ContractViolation):
        DEConfig([0, 1], [1, 1])
    with pytest.raises(ContractViolation):
        DEConfig([0], [1], mutation=2.0)
    with pytest.raises(ContractViolation):
        DEConfig([0], [1], crossover=1.5)
    assert DEConfig(np.zeros(3), np.ones(3)).population == 45


def test_de_sphere():
    cfg = DEConfig(np.full(5, -5.0), np.full(5, 5.0), population=50, generations=200)
    res = differential_evolution(sphere, cfg, np.random.default_rng(0))
    assert res.cost < 1e-6
    assert np.all(np.diff(res.history) <= 0)
    assert res.history.size == 201


def test_de_rosenbrock():
    cfg = DEConfig([-2.0, -2.0], [2.0, 2.0], population=60, generations=500)
    res = differential_evolution(rosenbrock, cfg, np.random.default_rng(1))
    assert np.linalg.norm(res.x - 1.0) <= 1e-3


def test_de_deterministic_and_bounded():
    cfg = DEConfig([-1.0, 0.5], [1.0, 2.0], population=12, generations=20)
    a = differential_evolution(sphere, cfg, np.random.default_rng(4))
    b = differential_evolution(sphere, cfg, np.random.default_rng(4))
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.history, b.history)
    assert np.all(a.x >= cfg.lower) and np.all(a.x <= cfg.upper)
    assert a.x[1] == pytest.approx(0.5)


def test_de_rejects_non_finite_costs():
    def cost(x):
        if x[0] > 0:
            return np.nan
        if x[0] < -0.9:
            raise ArithmeticError("outside model")
        return float((x[0] + 0.5) ** 2)

    res = differential_evolution(cost, DEConfig([-1.0], [1.0], population=10, generations=40),
                                 np.random.default_rng(0))
    assert res.x[0] == pytest.approx(-0.5, abs=1e-3)
    assert np.isfinite(res.cost)


@pytest.fixture(scope="module")
def reach_setup():
    cfg = load_config("reach")
    env = cfg.make_env()
    pol = scripted_policy(cfg.spec)
    truth = cfg.baseline.replace(**{"joint_damping[0]": 0.7})

    def sim(p, seed=0):
        return collect_ensemble(env, pol, [EnvRealization(p, nominal=cfg.baseline)], seed=seed)

    return cfg, sim, truth


def test_self_identification_recovers_damping(reach_setup):
    cfg, sim, truth = reach_setup
    target = sim(truth)
    p, res = fit_baseline_detailed(target, sim, {"joint_damping[0]": (0.1, 2.0)}, cfg.baseline,
                                   population=10, generations=15, rng=np.random.default_rng(0))
    assert p.joint_damping[0] == pytest.approx(0.7, rel=0.05)
    assert 0.1 <= p.joint_damping[0] <= 2.0


def test_noisy_self_identification(reach_setup):
    cfg, sim, truth = reach_setup
    clean = sim(truth)
    noisy = TrajectoryEnsemble(clean.channels, clean.data
                               + np.random.default_rng(5).normal(0, 1e-3, clean.data.shape))
    p, _ = fit_baseline_detailed(noisy, sim, {"joint_damping[0]": (0.1, 2.0)}, cfg.baseline,
                                 population=10, generations=15, rng=np.random.default_rng(0))
    assert p.joint_damping[0] == pytest.approx(0.7, rel=0.10)


def test_zero_length_bounds_fix_dimension(reach_setup):
    cfg, sim, truth = reach_setup
    target = sim(truth)
    p, _ = fit_baseline_detailed(target, sim, {"joint_damping[0]": (0.1, 2.0),
                                               "joint_damping[1]": (0.05, 0.05)},
                                 cfg.baseline, population=8, generations=5,
                                 rng=np.random.default_rng(0))
    assert p.joint_damping[1] == 0.05


def test_fit_rejects_non_scalar_names(reach_setup):
    cfg, sim, truth = reach_setup
    with pytest.raises(ContractViolation):
        fit_baseline_detailed(sim(truth), sim, {"joint_damping": (0.1, 2.0)}, cfg.baseline)


def _ens(data, channels=("a",)):
    return TrajectoryEnsemble(channels, np.asarray(data, float))


def test_spread_identical_ensembles():
    rng = np.random.default_rng(0)
    e = _ens(rng.normal(size=(5, 20, 1)))
    rep = spread_report(e, e)
    assert rep.overall_coverage == 1.0
    assert rep.mean_discrepancy == 0.0


def test_spread_disjoint_target():
    sim = _ens(np.stack([np.zeros((10, 1)), np.full((10, 1), 0.5)]))
    target = _ens(np.ones((3, 10, 1)))
    assert spread_report(sim, target).overall_coverage == 0.0


def test_spread_coverage_order_statistic():
    rng = np.random.default_rng(2)
    n, T = 10, 4000
    sim = _ens(rng.uniform(size=(n, T, 1)))
    target = _ens(rng.uniform(size=(1, T, 1)))
    p = (n - 1) / (n + 1)
    cov = spread_report(sim, target).overall_coverage
    assert abs(cov - p) <= 3 * np.sqrt(p * (1 - p) / T)


def test_spread_mismatch_errors():
    a = _ens(np.zeros((2, 5, 1)), ("x",))
    b = _ens(np.zeros((2, 5, 1)), ("y",))
    with pytest.raises(ContractViolation, match="x"):
        spread_report(a, b)
    with pytest.raises(ContractViolation):
        spread_report(a, _ens(np.zeros((2, 6, 1)), ("x",)))


def test_spread_svg_and_csv_roundtrip(tmp_path):
    cfg = load_config("reach")
    pol = scripted_policy(cfg.spec)
    assert pol.covers(cfg.spec)
    sim = regime_ensemble(cfg, "DR", pol, 4, seed=0)
    target = regime_ensemble(cfg, "NR", pol, 2, seed=1)
    rep = spread_report(sim, target, tmp_path / "env.svg", title="reach")
    assert 0.0 <= rep.overall_coverage <= 1.0
    assert (tmp_path / "env.svg").read_text().startswith("<?xml")
    sim.to_csv(tmp_path / "sim.csv")
    back = TrajectoryEnsemble.from_csv(tmp_path / "sim.csv")
    np.testing.assert_array_equal(back.data, sim.data)
    assert back.channels == sim.channels


@pytest.mark.parametrize("task", ["reach", "push", "slide"])
def test_scripted_policies_cover_horizon(task):
    spec = load_config(task).spec
    pol = scripted_policy(spec)
    assert pol.covers(spec)
    assert np.all(np.abs(pol.commands) <= 1.0)

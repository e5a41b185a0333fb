import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfibench.config import load_config
from rfibench.errors import ContractViolation, NumericError
from rfibench.randomize import EnvRealization, EpisodeStreams, sample_environment
from rfibench.tasks import TIERS, ReachEnv, RewardWeights, TaskSpec, is_success, reward
from rfibench.tasks.spec import Region

TASKS = ("reach", "push", "slide")


def nr(cfg):
    return EnvRealization(params=cfg.baseline, nominal=cfg.baseline)


def test_spec_rejects_fractional_episode_length():
    region = Region([0, 0], [1, 1])
    with pytest.raises(ContractViolation):
        TaskSpec("reach", 6.05, 10.0, 0.01, 0.5, region, region)
    with pytest.raises(ContractViolation):
        TaskSpec("reach", 6.0, 10.0, 0.01, 7.0, region, region)
    with pytest.raises(ContractViolation):
        TaskSpec("reach", 6.0, 10.0, 0.0, 0.5, region, region)


@pytest.mark.parametrize("task,horizon,thr", [("reach", 6, 0.01), ("push", 8, 0.03),
                                              ("slide", 6, 0.023)])
def test_packaged_task_constants(task, horizon, thr):
    spec = load_config(task).spec
    assert spec.horizon == horizon
    assert spec.success_threshold == thr
    assert spec.policy_rate == 10
    assert spec.hold_steps == 5


@pytest.mark.parametrize("task", TASKS)
def test_reset_is_deterministic(task):
    cfg = load_config(task)
    env = cfg.make_env()
    a = env.reset(nr(cfg), 5)
    q_a = env.joint_pos
    b = env.reset(nr(cfg), 5)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(q_a, env.joint_pos)
    assert a.shape == (cfg.obs_dim,)


def test_push_puck_starts_next_to_end_effector(push_cfg):
    env = push_cfg.make_env()
    for seed in range(20):
        env.reset(nr(push_cfg), seed)
        d = np.linalg.norm(env.puck[:2] - env.ee())
        assert d <= push_cfg.baseline.object_radius + 0.02 + 1e-12


def test_slide_reset_flat_plate_and_start_region(slide_cfg):
    env = slide_cfg.make_env()
    for seed in range(20):
        env.reset(nr(slide_cfg), seed)
        np.testing.assert_array_equal(env.joint_pos, 0.0)
        assert slide_cfg.spec.start_region.contains(env.puck[:2])
        np.testing.assert_array_equal(env.goal, slide_cfg.spec.goal_region.center)


def test_reach_zero_action_holds(reach_cfg):
    env = reach_cfg.make_env()
    env.reset(nr(reach_cfg), 0)
    e0 = env.ee().copy()
    env.step(np.zeros(2))
    assert np.linalg.norm(env.ee() - e0) < 1e-3


def test_slide_falling_off_terminates_with_penalty(slide_cfg):
    env = slide_cfg.make_env()
    env.reset(nr(slide_cfg), 0)
    env.puck[0] = np.max(slide_cfg.model["plate_half_size"]) + 0.01
    out = env.step(np.zeros(2))
    assert out.terminated and out.done and out.info["fell_off"]
    w = slide_cfg.spec.weights
    assert out.reward == pytest.approx(-w.w_dist * out.info["goal_distance"] - w.w_fall)
    assert not env.success()
    with pytest.raises(ContractViolation):
        env.step(np.zeros(2))


@pytest.mark.parametrize("task", TASKS)
def test_horizon_ends_without_termination(task):
    cfg = load_config(task)
    env = cfg.make_env()
    env.reset(nr(cfg), 1)
    outs = []
    while True:
        out = env.step(np.zeros(2))
        outs.append(out)
        if out.done:
            break
    assert len(outs) == cfg.spec.n_steps
    assert not any(o.terminated for o in outs)
    assert all(np.all(np.isfinite(o.observation)) and np.isfinite(o.reward) for o in outs)


def test_action_clamped_and_flagged(reach_cfg):
    env = reach_cfg.make_env()
    env.reset(nr(reach_cfg), 0)
    out = env.step([3.0, 0.0])
    assert out.info["action_clamped"]
    env.reset(nr(reach_cfg), 0)
    assert not env.step([1.0, 0.0]).info["action_clamped"]


def test_action_errors(reach_cfg):
    env = reach_cfg.make_env()
    with pytest.raises(ContractViolation):
        env.step([0.0, 0.0])
    env.reset(nr(reach_cfg), 0)
    with pytest.raises(ContractViolation):
        env.step([0.0, 0.0, 0.0])
    with pytest.raises(NumericError):
        env.step([np.nan, 0.0])


def test_step_log_csv(tmp_path, reach_cfg):
    env = reach_cfg.make_env()
    env.record = True
    env.reset(nr(reach_cfg), 0)
    for _ in range(3):
        env.step([0.5, 0.0])
    env.write_log(tmp_path / "log.csv")
    rows = list(csv.DictReader(open(tmp_path / "log.csv")))
    assert len(rows) == 4
    assert {"t", "q0", "obs0", "act0", "reward"} <= set(rows[0])


@pytest.mark.parametrize("task", TASKS)
def test_observation_dimension_invariant_across_regimes(task):
    cfg = load_config(task)
    env = cfg.make_env()
    for kind in ("NR", "DR", "RFI", "RFI+"):
        streams = EpisodeStreams.for_episode(0, 3)
        real = sample_environment(cfg.regime(kind), cfg.baseline, streams.env, cfg.obs_dim)
        obs = env.reset(real, streams)
        assert obs.shape == (cfg.obs_dim,)
        assert env.step(np.array([0.3, -0.3])).observation.shape == (cfg.obs_dim,)


# -- success ----------------------------------------------------------------

def test_success_examples(reach_cfg, slide_cfg):
    spec = reach_cfg.spec
    assert is_success([0.05] * 55 + [0.008] * 5, spec)
    assert not is_success([0.009] * 59 + [0.012], spec)
    assert is_success([0.1] * 55 + [0.022] * 5, slide_cfg.spec)
    assert not is_success([0.0] * 60, spec, terminated=True)
    with pytest.raises(ContractViolation):
        is_success([], spec)


@settings(max_examples=100, deadline=None)
@given(d=st.lists(st.floats(0, 0.1), min_size=1, max_size=60), thr=st.floats(0.001, 0.1),
       extra=st.floats(0, 0.1))
def test_success_monotone_in_threshold(reach_cfg, d, thr, extra):
    if is_success(d, reach_cfg.spec, threshold=thr):
        assert is_success(d, reach_cfg.spec, threshold=thr + extra)


# -- reward -----------------------------------------------------------------

def test_reward_at_goal_and_limit_penalty():
    w = RewardWeights()
    r = reward("reach", 0.004, 0.01, w)
    assert r == pytest.approx(w.w_goal - w.w_dist * 0.004)
    assert r >= w.w_goal - w.w_dist * 0.01
    assert reward("reach", 0.004, 0.01, w) - reward("reach", 0.004, 0.01, w, limit_hit=True) \
        == pytest.approx(w.w_limit)


def test_push_reward_maximal_with_ee_on_puck_on_goal():
    w = RewardWeights()
    goal = np.array([0.6, 0.0])
    grid = np.linspace(-0.1, 0.1, 9)
    best, arg = -np.inf, None
    for px in grid:
        for py in grid:
            puck = goal + [px, py]
            for ex in grid:
                for ey in grid:
                    ee = puck + [ex, ey]
                    r = reward("push", np.linalg.norm(puck - goal), 0.03, w,
                               ee_object_distance=np.linalg.norm(ee - puck))
                    if r > best:
                        best, arg = r, (px, py, ex, ey)
    assert arg == (0.0, 0.0, 0.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(task=st.sampled_from(TASKS), dist=st.floats(0, 1.0), limit=st.booleans(),
       flag=st.booleans(), eo=st.floats(0, 1.0))
def test_reward_bounded(task, dist, limit, flag, eo):
    w = RewardWeights()
    diam = 1.0
    r = reward(task, dist, 0.01, w, limit_hit=limit, table_hit=flag, ee_object_distance=eo,
               fell_off=flag)
    extra = {"reach": w.w_table, "push": w.w_reach * diam, "slide": w.w_fall}[task]
    assert abs(r) <= w.w_goal + w.w_dist * diam + w.w_limit + extra


@pytest.mark.parametrize("task", TASKS)
def test_goal_tiers_ordered_by_distance(task):
    spec = load_config(task).spec
    d = [np.linalg.norm(spec.tier(t).goal - spec.tier(t).start) for t in TIERS]
    assert d[0] < d[1] < d[2]
    with pytest.raises(ContractViolation):
        spec.tier("impossible")


@pytest.mark.parametrize("task", TASKS)
def test_tier_reset_places_goal(task):
    cfg = load_config(task)
    env = cfg.make_env()
    env.reset(nr(cfg), 0, tier="hard")
    np.testing.assert_allclose(env.goal, cfg.spec.tier("hard").goal)


def test_reach_class_registered():
    assert load_config("reach").make_env().__class__ is ReachEnv

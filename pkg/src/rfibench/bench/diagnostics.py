"""OSI error, the white-noise UP ablation and EPI latent analysis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from sklearn.decomposition import PCA
from sklearn.metrics import silhouette_score

from ..agents.families import EPIPolicy, UPOSIPolicy, env_context
from ..errors import ContractViolation, DiagnosticError
from ..plotting import PALETTE, new_figure, save_svg
from ..randomize import EpisodeStreams, sample_environment
from ..randomize.rng import DOMAIN_EVAL
from .evaluate import PseudoRealSpec, evaluate

DEGENERATE_RANGE = 1e-9


# -- OSI error ---------------------------------------------------------------

@dataclass
class OSIError:
    percent: float
    per_dim: np.ndarray
    excluded: list
    n_samples: int


def osi_error(pred, true) -> OSIError:
    """Mean absolute error relative to each dimension's prediction range, in %.

    Dimensions whose predictions span less than 1e-9 are excluded and
    listed in ``excluded``.
    """
    pred = np.atleast_2d(np.asarray(pred, float))
    true = np.atleast_2d(np.asarray(true, float))
    if pred.shape != true.shape:
        raise ContractViolation(f"prediction shape {pred.shape} != truth shape {true.shape}")
    if pred.shape[0] == 0:
        raise ContractViolation("no samples")
    span = pred.max(axis=0) - pred.min(axis=0)
    keep = span >= DEGENERATE_RANGE
    excluded = [int(i) for i in np.flatnonzero(~keep)]
    if not keep.any():
        raise DiagnosticError("every OSI output dimension has a degenerate prediction range")
    per_dim = np.full(pred.shape[1], np.nan)
    per_dim[keep] = np.mean(np.abs(pred[:, keep] - true[:, keep]), axis=0) / span[keep] * 100.0
    return OSIError(float(np.mean(per_dim[keep])), per_dim, excluded, pred.shape[0])


def osi_rollout_error(policy: UPOSIPolicy, cfg, n: int = 20, seed: int = 1000) -> OSIError:
    """OSI error on fresh DR rollouts (evaluation key space, unseen in training)."""
    if not isinstance(policy, UPOSIPolicy) or policy.osi is None:
        raise ContractViolation("osi_error needs a UPOSI policy with a trained OSI")
    regime = cfg.regime("DR")
    env = cfg.make_env()
    preds, truth = [], []
    old = policy.conditioning
    policy.conditioning = "osi"
    try:
        for ep in range(n):
            streams = EpisodeStreams.for_episode(seed, ep, DOMAIN_EVAL)
            real = sample_environment(regime, cfg.baseline, streams.env, cfg.obs_dim)
            obs = env.reset(real, streams)
            policy.reset()
            while True:
                a = policy.act(obs, env_context(env, real))
                preds.append(policy.last_xi.copy())
                truth.append(real.xi)
                out = env.step(a)
                obs = out.observation
                if out.done:
                    break
    finally:
        policy.conditioning = old
    return osi_error(np.asarray(preds), np.asarray(truth))


# -- UP white-noise ablation -------------------------------------------------

def two_proportion_test(k1: int, n1: int, k2: int, n2: int) -> tuple[float, float]:
    """Pooled two-sided z-test; returns ``(z, p)``. Identical pooled extremes give p = 1."""
    p1, p2 = k1 / n1, k2 / n2
    pool = (k1 + k2) / (n1 + n2)
    var = pool * (1 - pool) * (1 / n1 + 1 / n2)
    if var <= 0:
        return 0.0, 1.0
    z = (p1 - p2) / np.sqrt(var)
    return float(z), float(2 * stats.norm.sf(abs(z)))


@dataclass
class AblationResult:
    conditioning: str
    rate_conditioned: float
    rate_noise: float
    delta: float
    n: int
    z: float
    p_value: float
    initial_states_match: bool
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "conditioning", "rate_conditioned", "rate_noise", "delta", "n", "z", "p_value",
            "initial_states_match")}


def up_noise_ablation(policy, cfg, source: str = "in-domain", n: int = 200, seed: int = 0,
                      regime: str = "DR", tier: str = "random",
                      conditioning: str | None = None) -> AblationResult:
    """Evaluate with the usual conditioning and with white noise in [-1, 1].

    Both arms use identical episode seeds. For UPOSI the conditioned arm
    uses ``conditioning`` (default: the policy's current mode); for EPI the
    latent ``z`` is replaced by noise drawn once per episode.
    """
    if not isinstance(policy, (UPOSIPolicy, EPIPolicy)):
        raise ContractViolation(
            f"the UP ablation needs a uposi or epi policy, got {getattr(policy, 'family', policy)!r}")
    target = PseudoRealSpec.from_config(cfg) if source == "pseudo-real" else None

    def run(noise: bool):
        old = policy.conditioning
        if noise:
            policy.conditioning = "noise"
        elif conditioning is not None:
            policy.conditioning = conditioning
        policy.noise_rng = np.random.default_rng(seed)
        try:
            return evaluate(policy, cfg, source, (tier,), n, seed, regime,
                            pseudo_real=target, keep_paths=0)[0]
        finally:
            policy.conditioning = old

    cond = run(False)
    noise = run(True)
    k1 = int(round(cond.success_rate * n))
    k2 = int(round(noise.success_rate * n))
    z, p = two_proportion_test(k1, n, k2, n)
    same = all(a.initial_obs == b.initial_obs for a, b in zip(cond.episodes, noise.episodes))
    mode = conditioning or policy.conditioning
    return AblationResult(mode, cond.success_rate, noise.success_rate,
                          cond.success_rate - noise.success_rate, n, z, p, same,
                          {"initial_obs": [e.initial_obs for e in cond.episodes]})


# -- latent analysis ---------------------------------------------------------

@dataclass
class LatentAnalysis:
    coords: np.ndarray
    labels: np.ndarray
    silhouette: float
    explained_variance: np.ndarray


def silhouette(points, labels) -> float:
    """Silhouette with the documented convention: 0 for identical points."""
    points = np.asarray(points, float)
    labels = np.asarray(labels)
    if np.ptp(points, axis=0).max(initial=0.0) == 0.0:
        return 0.0
    return float(silhouette_score(points, labels))


def latent_analysis(latent_sets, svg_path=None, title=None, names=None) -> LatentAnalysis:
    """PCA to 2-D of pooled latents plus a silhouette score keyed by set.

    ``latent_sets`` is a sequence of ``(n_i, d)`` arrays, one per parameter set.
    """
    sets = [np.atleast_2d(np.asarray(s, float)) for s in latent_sets]
    if len(sets) < 2:
        raise ContractViolation("latent analysis needs at least 2 parameter sets")
    if any(s.shape[0] == 0 for s in sets):
        raise ContractViolation("every parameter set needs at least one latent")
    pooled = np.concatenate(sets)
    labels = np.concatenate([np.full(s.shape[0], i) for i, s in enumerate(sets)])
    score = silhouette(pooled, labels)
    centred = pooled - pooled.mean(axis=0)
    if np.ptp(pooled, axis=0).max(initial=0.0) == 0.0:
        coords = np.zeros((pooled.shape[0], 2))
        evr = np.zeros(2)
    else:
        k = min(2, pooled.shape[1], pooled.shape[0])
        pca = PCA(n_components=k, svd_solver="full").fit(centred)
        coords = np.zeros((pooled.shape[0], 2))
        coords[:, :k] = pca.transform(centred)
        evr = np.zeros(2)
        evr[:k] = pca.explained_variance_ratio_
    if svg_path is not None:
        plot_latents(coords, labels, svg_path, title, names, score)
    return LatentAnalysis(coords, labels, score, evr)


def plot_latents(coords, labels, path, title=None, names=None, score=None):
    fig, axes = new_figure(4.5, 4.0)
    ax = axes[0, 0]
    for i in np.unique(labels):
        m = labels == i
        name = names[int(i)] if names is not None else f"set {int(i)}"
        ax.scatter(coords[m, 0], coords[m, 1], s=14, color=PALETTE[int(i) % len(PALETTE)],
                   label=name, alpha=0.8)
    ax.set_xlabel("PC 1")
    ax.set_ylabel("PC 2")
    head = title or "EPI latents"
    if score is not None:
        head += f" (silhouette {score:.3f})"
    ax.set_title(head)
    ax.legend(frameon=False, fontsize=8)
    save_svg(fig, path)


def epi_latents(policy: EPIPolicy, cfg, realizations, n: int = 20, seed: int = 0) -> list:
    """Probe each realization ``n`` times and return the embedded latents per set."""
    if not isinstance(policy, EPIPolicy):
        raise ContractViolation("latent analysis needs an epi policy")
    env = cfg.make_env()
    out = []
    for j, real in enumerate(realizations):
        zs = []
        for ep in range(n):
            streams = EpisodeStreams.for_episode(seed, j * 100003 + ep, DOMAIN_EVAL)
            obs = env.reset(real, streams)
            policy.reset()
            while policy.z is None:
                a = policy.act(obs, env_context(env, real))
                obs = env.step(a).observation
            zs.append(policy.z.copy())
        out.append(np.asarray(zs))
    return out


def distinct_realizations(cfg, quantiles=(0.1, 0.5, 0.9)) -> list:
    """Realizations with every DR parameter at a common quantile."""
    from ..randomize.regimes import EnvRealization

    regime = cfg.regime("DR")
    reals = []
    for q in quantiles:
        updates = {name: d.apply(cfg.baseline.get(name), d.quantile(q))
                   for name, d in regime.dr_distributions.items()}
        reals.append(EnvRealization(params=cfg.baseline.replace(**updates).validate(),
                                    nominal=cfg.baseline))
    return reals

"""Command-line entry point: train, eval, ablate, report, calibrate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ContractViolation, NumericError

EXIT_CONTRACT = 2
EXIT_NUMERIC = 3


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ContractViolation(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_value(v)
    return out


def _config(args):
    from .config import load_config

    return load_config(args.config if args.config else args.task)


def _load(path):
    from .agents import load_policy

    return load_policy(path)


def cmd_train(args) -> int:
    from .agents import train_policy
    from .bench.runs import write_artifacts

    cfg = _config(args)
    overrides = _overrides(args.set)
    if args.steps is not None:
        overrides["total_steps"] = args.steps

    def progress(ep, steps, ret, succ):
        if not args.quiet and ep % 50 == 0:
            print(f"episode {ep} steps {steps} return {ret:.2f} success {int(succ)}",
                  file=sys.stderr)

    result = train_policy(args.policy, cfg, args.regime, overrides, seed=args.seed,
                          progress=progress)
    stem = f"{cfg.task_id}_{args.policy}_{args.regime.replace('+', 'plus')}_s{args.seed}"
    meta = {"task": cfg.task_id, "family": args.policy, "regime": args.regime,
            "seed": args.seed, "config_hash": cfg.content_hash(), "config": cfg.raw,
            "train": {**cfg.train, **overrides}}
    paths = write_artifacts(result, args.out, stem, meta)
    print(json.dumps({k: str(v) for k, v in paths.items()}))
    return 0


def _manifest_task(extra, args):
    from .config import load_config

    if args.config or args.task:
        return _config(args)
    if "config" in extra:
        return load_config(extra["config"])
    if "task" in extra:
        return load_config(extra["task"])
    raise ContractViolation("cannot tell the task of this checkpoint; pass --task")


def cmd_eval(args) -> int:
    from .bench import evaluate, save_cells

    policy, extra = _load(args.checkpoint)
    cfg = _manifest_task(extra, args)
    regime = args.regime or extra.get("regime", "NR")
    goals = tuple(g.strip() for g in args.goals.split(",") if g.strip())
    label = args.label or extra.get("family", policy.family)
    cells = evaluate(policy, cfg, args.source, goals, args.n, args.seed, regime, label=label)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_cells(cells, out)
    for c in cells:
        print(f"{c.task} {c.source} {c.regime} {c.policy} {c.tier}: "
              f"success {c.success_rate:.3f} (n={c.n}) return {c.mean_return:.2f}")
    return 0


def cmd_ablate(args) -> int:
    from .bench import (
        distinct_realizations,
        epi_latents,
        latent_analysis,
        osi_rollout_error,
        up_noise_ablation,
    )
    from .bench.report import diagnostic_key

    policy, extra = _load(args.checkpoint)
    cfg = _manifest_task(extra, args)
    regime = extra.get("regime", "DR")
    label = args.label or extra.get("family", policy.family)
    key = diagnostic_key(cfg.task_id, regime, label)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.mode == "up-noise":
        res = up_noise_ablation(policy, cfg, args.source, args.n, args.seed, regime)
        payload = {**res.to_dict()}
        diag = {"up_delta": res.delta}
    elif args.mode == "osi-error":
        res = osi_rollout_error(policy, cfg, args.n, args.seed)
        payload = {"percent": res.percent, "excluded_dims": res.excluded,
                   "n_samples": res.n_samples, "per_dim": [None if np.isnan(x) else float(x)
                                                           for x in res.per_dim]}
        diag = {"osi_error_pct": res.percent}
    else:
        reals = distinct_realizations(cfg)
        sets = epi_latents(policy, cfg, reals, args.n, args.seed)
        svg = out.with_suffix(".svg")
        res = latent_analysis(sets, svg, title=f"{cfg.task_id} EPI latents",
                              names=["q=0.1", "q=0.5", "q=0.9"])
        payload = {"silhouette": res.silhouette, "svg": svg.name,
                   "explained_variance": res.explained_variance.tolist()}
        diag = {"latent_silhouette": res.silhouette}
    payload["mode"] = args.mode
    out.write_text(json.dumps({"cells": [], "diagnostics": {key: diag}, "result": payload},
                              sort_keys=True, indent=1))
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    from .bench import load_cells, write_report

    cells, diags = load_cells(args.in_dir)
    paths = write_report(cells, args.out, diags)
    print(f"wrote {paths['matrix']}, {paths['summary']} and {len(paths['figures'])} figures")
    return 0


def cmd_calibrate(args) -> int:
    import tomli_w

    from . import config as config_mod
    from .calibrate import (
        DEConfig,
        TrajectoryEnsemble,
        collect_ensemble,
        fit_baseline_detailed,
        scripted_policy,
        spread_report,
    )
    from .randomize import EnvRealization

    cfg = _config(args)
    env = cfg.make_env()
    script = scripted_policy(cfg.spec, args.amplitude)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.emit_target:
        real = config_mod.pseudo_real_realization(cfg)
        ens = collect_ensemble(env, script, [real] * args.n, seed=args.seed)
        ens.to_csv(out / "target.csv")
        print(out / "target.csv")
        return 0
    if not args.target or not args.bounds:
        raise ContractViolation("calibrate needs --target and --bounds (or --emit-target)")
    with open(args.bounds, "rb") as fh:
        spec = config_mod.tomllib.load(fh)
    bounds = {k: tuple(v) for k, v in spec.get("bounds", {}).items()}
    target = TrajectoryEnsemble.from_csv(args.target, dt=1.0 / cfg.spec.policy_rate)
    n = target.n

    def sim_factory(params):
        real = EnvRealization(params=params, nominal=cfg.baseline)
        return collect_ensemble(env, script, [real] * n, seed=args.seed,
                                channels=target.channels)

    de_opts = dict(spec.get("de", {}))
    params, res = fit_baseline_detailed(target, sim_factory, bounds, cfg.baseline,
                                        rng=np.random.default_rng(args.seed), **de_opts)
    raw = dict(cfg.raw)
    raw["baseline"] = params.to_dict()
    (out / "fitted.toml").write_bytes(tomli_w.dumps(_tomlable(raw)).encode())
    np.savetxt(out / "de_history.csv", np.column_stack([np.arange(res.history.size), res.history]),
               delimiter=",", header="generation,best_cost", comments="", fmt=["%d", "%.12g"])
    rep = spread_report(sim_factory(params), target, out / "envelope.svg",
                        title=f"{cfg.task_id}: fitted baseline vs target")
    print(json.dumps({"cost": res.cost, "evaluations": res.evaluations,
                      "fitted": {k: float(np.asarray(params.get(k)).reshape(-1)[0])
                                 for k in bounds}, **rep.summary()}, sort_keys=True))
    return 0


def _tomlable(x):
    if isinstance(x, dict):
        return {k: _tomlable(v) for k, v in x.items() if v is not None}
    if isinstance(x, (list, tuple)):
        return [_tomlable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _tomlable(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rfibench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def task_args(sp, required=False):
        sp.add_argument("--task", choices=("reach", "push", "slide"), required=required)
        sp.add_argument("--config", help="task config TOML (overrides --task)")

    t = sub.add_parser("train", help="train one policy")
    task_args(t)
    t.add_argument("--regime", default="NR", choices=("NR", "DR", "RFI", "RFI+"))
    t.add_argument("--policy", default="conservative",
                   choices=("conservative", "adaptive", "uposi", "epi"))
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--steps", type=int, help="total environment steps")
    t.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a [train] setting (JSON value)")
    t.add_argument("--out", required=True)
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    task_args(e)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--source", default="in-domain", choices=("in-domain", "pseudo-real"))
    e.add_argument("--goals", default="easy,intermediate,hard",
                   help="comma-separated tiers and/or 'random'")
    e.add_argument("--n", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--regime", help="training regime (default: from the checkpoint)")
    e.add_argument("--label", help="policy label in the report")
    e.add_argument("--out", required=True, help="cells JSON file")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", help="diagnostics on a checkpoint")
    task_args(a)
    a.add_argument("--mode", required=True, choices=("up-noise", "osi-error", "latent"))
    a.add_argument("--checkpoint", required=True)
    a.add_argument("--source", default="in-domain", choices=("in-domain", "pseudo-real"))
    a.add_argument("--n", type=int, default=200)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--label")
    a.add_argument("--out", required=True, help="diagnostics JSON file")
    a.set_defaults(func=cmd_ablate)

    r = sub.add_parser("report", help="matrix, summary and figures from result files")
    r.add_argument("--in", dest="in_dir", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)

    c = sub.add_parser("calibrate", help="fit baseline parameters to a target ensemble")
    task_args(c)
    c.add_argument("--target", help="target ensemble CSV")
    c.add_argument("--bounds", help="TOML with a [bounds] table and optional [de] table")
    c.add_argument("--emit-target", action="store_true",
                   help="write the pseudo-real scripted ensemble as target.csv and exit")
    c.add_argument("--n", type=int, default=5)
    c.add_argument("--amplitude", type=float, default=0.8)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "task", None) is None and getattr(args, "config", None) is None \
            and args.command in ("train", "calibrate"):
        print("error: --task or --config is required", file=sys.stderr)
        return EXIT_CONTRACT
    try:
        return args.func(args)
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Trained-policy cache and training artefacts (checkpoint, curve, manifest).

A run is keyed by a hash of the training code, the task config and the
run settings, so stale checkpoints are never reused after a change.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from ..agents import load_policy, save_policy, train_policy
from ..config import load_config

_TRAINING_PACKAGES = ("agents", "dyncore", "neural", "randomize", "tasks")
# trainer modules only some families depend on
_FAMILY_MODULES = {"uposi": {"uposi.py"}, "epi": {"epi.py", "ppo.py"}}
_OPTIONAL = set().union(*_FAMILY_MODULES.values())


def default_cache_dir() -> Path:
    return Path(os.environ.get("RFIBENCH_CACHE", Path.cwd() / ".rfibench_cache"))


def source_hash(family: str | None = None) -> str:
    """Hash of the code a training run of ``family`` depends on."""
    root = Path(__file__).resolve().parents[1]
    h = hashlib.sha256()
    files = [root / "config.py"]
    wanted = _FAMILY_MODULES.get(family, set())
    for pkg in _TRAINING_PACKAGES:
        for f in sorted((root / pkg).glob("*.py")):
            if pkg == "agents" and f.name in _OPTIONAL and f.name not in wanted:
                continue
            files.append(f)
    for f in files:
        h.update(f.relative_to(root).as_posix().encode())
        h.update(f.read_bytes())
    return h.hexdigest()[:16]


def run_key(family, cfg, regime, seed, overrides=None) -> str:
    blob = json.dumps({"src": source_hash(family), "cfg": cfg.content_hash(), "family": family,
                       "regime": regime, "seed": int(seed), "train": overrides or {}},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_artifacts(result, out_dir, stem, meta) -> dict:
    """Checkpoint, learning-curve CSV and JSON manifest for a training result."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / f"{stem}.rfiw"
    curve = out / f"{stem}_curve.csv"
    manifest = out / f"{stem}.json"
    save_policy(result.policy, ckpt, meta)
    np.savetxt(curve, result.learning_curve(), delimiter=",", header="episode,return,success",
               comments="", fmt=["%d", "%.10g", "%d"])
    info = {k: v for k, v in result.info.items() if _jsonable(v)}
    man = {**meta, "checkpoint": ckpt.name, "curve": curve.name, "env_steps": result.env_steps,
           "wall_time_s": result.wall_time, "episodes": len(result.returns),
           "final_success_rate_50": float(np.mean(result.successes[-50:]))
           if result.successes else None, "info": info}
    manifest.write_text(json.dumps(man, sort_keys=True, indent=2) + "\n")
    return {"checkpoint": ckpt, "curve": curve, "manifest": manifest}


def _jsonable(v) -> bool:
    try:
        json.dumps(v)
        return True
    except TypeError:
        return False


def trained_policy(family, task, regime, seed=0, overrides=None, cache_dir=None,
                   progress=None):
    """Load a cached policy or train and cache it. Returns ``(policy, manifest)``."""
    cfg = load_config(task)
    key = run_key(family, cfg, regime, seed, overrides)
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    stem = f"{cfg.task_id}_{family}_{regime.replace('+', 'plus')}_s{seed}_{key}"
    manifest = cache / f"{stem}.json"
    if manifest.exists() and (cache / f"{stem}.rfiw").exists():
        policy, _ = load_policy(cache / f"{stem}.rfiw")
        return policy, json.loads(manifest.read_text())
    result = train_policy(family, cfg, regime, overrides, seed=seed, progress=progress)
    meta = {"task": cfg.task_id, "family": family, "regime": regime, "seed": int(seed),
            "key": key, "config_hash": cfg.content_hash(), "train": overrides or {}}
    write_artifacts(result, cache, stem, meta)
    # EPI keeps auxiliary models only in memory; the policy itself round-trips.
    return result.policy, json.loads(manifest.read_text())

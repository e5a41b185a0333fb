"""Result matrix, JSON summary and trajectory figures.

Every output is a pure function of the input cells: rows and columns are
sorted, floats are written with ``repr`` and SVGs carry no timestamps.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from ..errors import ContractViolation
from ..plotting import PALETTE, new_figure, save_svg
from ..tasks.spec import TIERS
from .evaluate import EvalCell

NULL = "NA"
DIAGNOSTICS = ("osi_error_pct", "up_delta", "latent_silhouette")
CELLS_FILE_KEY = "cells"


def _tier_order(t):
    return (TIERS.index(t), t) if t in TIERS else (len(TIERS), t)


def _fmt(x) -> str:
    return NULL if x is None else repr(float(x))


def save_cells(cells, path, diagnostics=None):
    """Write cells (and optional diagnostics) as one JSON file ``report`` can read."""
    payload = {CELLS_FILE_KEY: [c.to_dict() for c in cells], "diagnostics": diagnostics or {}}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1))


def load_cells(in_dir) -> tuple[list[EvalCell], dict]:
    """All cells and diagnostics from ``*.json`` files in ``in_dir`` (sorted by name)."""
    cells, diags = [], {}
    for f in sorted(Path(in_dir).glob("*.json")):
        data = json.loads(f.read_text())
        if not isinstance(data, dict) or CELLS_FILE_KEY not in data:
            continue
        cells += [EvalCell.from_dict(c) for c in data[CELLS_FILE_KEY]]
        for key, vals in data.get("diagnostics", {}).items():
            diags.setdefault(key, {}).update(vals)
    return cells, diags


def diagnostic_key(task: str, regime: str, policy: str) -> str:
    return f"{task}/{regime}/{policy}"


def matrix_csv(cells, diagnostics=None) -> str:
    """Rows = (source, regime, policy); columns = task/tier success rates, then
    per-task diagnostics. Missing values are written as ``NA``."""
    diagnostics = diagnostics or {}
    cols = sorted({(c.task, c.tier) for c in cells}, key=lambda k: (k[0], _tier_order(k[1])))
    tasks = sorted({c.task for c in cells})
    rows = sorted({(c.source, c.regime, c.policy) for c in cells})
    index = {(c.source, c.regime, c.policy, c.task, c.tier): c for c in cells}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "regime", "policy"] + [f"{t}/{g}" for t, g in cols]
               + [f"{t}/n" for t in tasks] + [f"{t}/{d}" for t in tasks for d in DIAGNOSTICS])
    for src, reg, pol in rows:
        vals = []
        for t, g in cols:
            c = index.get((src, reg, pol, t, g))
            vals.append(_fmt(None if c is None else c.success_rate))
        ns = []
        for t in tasks:
            n = sorted({c.n for k, c in index.items() if k[:4] == (src, reg, pol, t)})
            ns.append("/".join(str(x) for x in n) if n else NULL)
        diag = []
        for t in tasks:
            d = diagnostics.get(diagnostic_key(t, reg, pol), {})
            diag += [_fmt(d.get(name)) for name in DIAGNOSTICS]
        w.writerow([src, reg, pol] + vals + ns + diag)
    return buf.getvalue()


def summary(cells, diagnostics=None) -> dict:
    diagnostics = diagnostics or {}
    out_cells = [{"task": c.task, "source": c.source, "regime": c.regime, "policy": c.policy,
                  "tier": c.tier, "n": c.n, "seed": c.seed, "success_rate": c.success_rate,
                  "mean_return": c.mean_return}
                 for c in sorted(cells, key=lambda c: (c.key[:4], _tier_order(c.tier)))]
    keys = sorted({diagnostic_key(c.task, c.regime, c.policy) for c in cells} | set(diagnostics))
    diag = {k: {name: diagnostics.get(k, {}).get(name) for name in DIAGNOSTICS} for k in keys}
    return {"cells": out_cells, "diagnostics": diag}


def plot_paths(group, path, title):
    """Overlay recorded paths, one colour per goal tier, goals marked with x."""
    fig, axes = new_figure(5.0, 4.0)
    ax = axes[0, 0]
    for i, cell in enumerate(sorted(group, key=lambda c: _tier_order(c.tier))):
        color = PALETTE[i % len(PALETTE)]
        first = True
        for ep in cell.episodes:
            if not ep.path:
                continue
            xy = list(zip(*ep.path))
            ax.plot(xy[0], xy[1], color=color, lw=1.0, alpha=0.8,
                    label=f"{cell.tier} ({cell.success_rate:.2f})" if first else None)
            if ep.goal:
                ax.plot([ep.goal[0]], [ep.goal[1]], "x", color=color, ms=7)
            first = False
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title(title, fontsize=9)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False, fontsize=7)
    save_svg(fig, path)


def write_report(cells, out_dir, diagnostics=None) -> dict:
    """Write ``matrix.csv``, ``summary.json`` and ``figures/*.svg``; returns the paths."""
    cells = list(cells)
    if not cells:
        raise ContractViolation("report needs at least one cell")
    out = Path(out_dir)
    fig_dir = out / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    paths = {"matrix": out / "matrix.csv", "summary": out / "summary.json", "figures": []}
    paths["matrix"].write_text(matrix_csv(cells, diagnostics))
    paths["summary"].write_text(json.dumps(summary(cells, diagnostics), sort_keys=True,
                                           indent=2) + "\n")
    groups: dict = {}
    for c in cells:
        groups.setdefault((c.task, c.source, c.regime, c.policy), []).append(c)
    for key in sorted(groups):
        task, source, regime, pol = key
        name = "_".join(k.replace("+", "plus") for k in key) + ".svg"
        p = fig_dir / name
        plot_paths(groups[key], p, f"{task} / {pol} trained {regime} / {source}")
        paths["figures"].append(p)
    return paths

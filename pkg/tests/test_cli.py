import json

import pytest

from rfibench.cli import EXIT_CONTRACT, EXIT_NUMERIC, main

TINY = ["--steps", "300", "--set", "warmup_steps=100", "--set", "batch_size=16",
        "--set", "hidden=[8]"]


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    assert main(["train", "--task", "reach", "--regime", "NR", "--seed", "1", "--out", str(out),
                 "--quiet"] + TINY) == 0
    ckpt = out / "reach_conservative_NR_s1.rfiw"
    assert ckpt.exists()
    assert (out / "reach_conservative_NR_s1_curve.csv").exists()
    return ckpt


def test_eval_and_report(checkpoint, tmp_path):
    cells = tmp_path / "in" / "cells.json"
    assert main(["eval", "--checkpoint", str(checkpoint), "--goals", "easy,random", "--n", "2",
                 "--out", str(cells)]) == 0
    data = json.loads(cells.read_text())
    assert [c["tier"] for c in data["cells"]] == ["easy", "random"]
    assert all(c["n"] == 2 for c in data["cells"])
    assert main(["report", "--in", str(cells.parent), "--out", str(tmp_path / "r1")]) == 0
    assert main(["report", "--in", str(cells.parent), "--out", str(tmp_path / "r2")]) == 0
    for name in ("matrix.csv", "summary.json"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
    assert list((tmp_path / "r1" / "figures").glob("*.svg"))


def test_ablate_wrong_family_exit_code(checkpoint, tmp_path):
    assert main(["ablate", "--mode", "up-noise", "--checkpoint", str(checkpoint), "--n", "2",
                 "--out", str(tmp_path / "a.json")]) == EXIT_CONTRACT


def test_eval_zero_episodes_exit_code(checkpoint, tmp_path):
    assert main(["eval", "--checkpoint", str(checkpoint), "--n", "0",
                 "--out", str(tmp_path / "c.json")]) == EXIT_CONTRACT


def test_train_requires_task(tmp_path):
    assert main(["train", "--out", str(tmp_path)]) == EXIT_CONTRACT


def test_bad_override_exit_code(tmp_path):
    assert main(["train", "--task", "reach", "--out", str(tmp_path), "--set", "oops"]) \
        == EXIT_CONTRACT


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_exit_code(tmp_path):
    args = ["train", "--task", "reach", "--out", str(tmp_path), "--quiet", "--steps", "200",
            "--set", "warmup_steps=20", "--set", "batch_size=16", "--set", "hidden=[8]",
            "--set", "lr_critic=1e305", "--set", "lr_actor=1e305"]
    assert main(args) == EXIT_NUMERIC


def test_calibrate_needs_inputs(tmp_path):
    assert main(["calibrate", "--task", "reach", "--out", str(tmp_path)]) == EXIT_CONTRACT


def test_calibrate_emit_target(tmp_path):
    assert main(["calibrate", "--task", "reach", "--emit-target", "--n", "2",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "target.csv").stat().st_size > 0


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["fly"])

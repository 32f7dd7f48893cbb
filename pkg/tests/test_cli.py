"""Command-line interface: exit codes, manifests, config plumbing, subcommands."""

import json
import os
import subprocess

import pytest

from carsoccer.cli import CONFIG_ENV_VAR, main
from carsoccer.trace import load_trace

TINY_TRAIN_TOML = """\
[ppo]
workers = 2
worker_steps = 16
epochs = 1
mini_batches = 2
total_steps = 32
checkpoint_every = 32
eval_every = 0
eval_shots = 4
eval_repeats = 1
"""


def write_config(tmp_path, text=TINY_TRAIN_TOML, name="config.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_usage_errors_exit_1():
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["--help"]) == 0


def test_config_errors_exit_2(tmp_path):
    out = str(tmp_path / "out")
    bad_toml = write_config(tmp_path, "gravity = [unclosed\n")
    assert main(["scenario", "jump_tap", "--config", bad_toml, "--out", out]) == 2
    typo = write_config(tmp_path, "graivty = 650.0\n", name="typo.toml")
    assert main(["scenario", "jump_tap", "--config", typo, "--out", out]) == 2
    missing = str(tmp_path / "nope.toml")
    assert main(["scenario", "jump_tap", "--config", missing, "--out", out]) == 2
    # override flags must come in pairs and carry valid values
    assert main(["scenario", "jump_tap", "--out", out, "--gravity"]) == 2
    assert main(["scenario", "jump_tap", "--out", out, "--gravity", "abc"]) == 2


def test_runtime_fault_exits_3_after_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["scenario", "barrel_roll", "--out", str(out)]) == 3
    # the manifest lands before any simulation work, even on failing runs
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "scenario"
    assert manifest["seed"] == 0
    assert manifest["out_dir"] == str(out)


def test_eval_missing_checkpoint_exits_3(tmp_path):
    out = str(tmp_path / "out")
    missing = str(tmp_path / "no_such.ckpt")
    assert main(["eval", "--checkpoint", missing, "--out", out]) == 3


def test_scenario_single(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["scenario", "jump_tap", "--out", str(out)]) == 0
    trace = load_trace(str(out / "jump_tap.csv"))
    assert len(trace) == 241
    assert "wrote 1 trace(s)" in capsys.readouterr().out


def test_scenario_all_and_reference_compare(tmp_path, capsys):
    ref = tmp_path / "ref"
    assert main(["scenario", "all", "--out", str(ref)]) == 0
    traces = [p for p in os.listdir(ref) if p.endswith(".csv")]
    assert len(traces) == 18
    capsys.readouterr()
    out = tmp_path / "out"
    code = main(["scenario", "jump_tap", "--out", str(out), "--reference", str(ref)])
    assert code == 0
    report = capsys.readouterr().out
    assert "jump_tap:" in report
    # identical deterministic runs compare with exactly zero error
    mean_row = next(l for l in report.splitlines() if l.strip().startswith("mean"))
    assert set(mean_row.split()) == {"mean", "0"}
    assert (out / "jump_tap.csv").read_bytes() == (ref / "jump_tap.csv").read_bytes()


def test_shots_subcommand(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["shots", "--kind", "goalie", "--seed", "3", "--n", "25", "--out", str(out)])
    assert code == 0
    assert (out / "shots_goalie_3.csv").exists()
    report = capsys.readouterr().out
    assert "25 goalie samples" in report
    assert "(25 goal-bound)" in report


def test_shots_bad_ranges_exit_2(tmp_path):
    out = str(tmp_path / "out")
    code = main([
        "shots", "--kind", "goalie", "--n", "5", "--out", out,
        "--shots.goalie_speed", "[1400, 1200]",
    ])
    assert code == 2


def test_env_var_supplies_config(tmp_path, monkeypatch):
    out = str(tmp_path / "out")
    typo = write_config(tmp_path, "graivty = 650.0\n", name="typo.toml")
    monkeypatch.setenv(CONFIG_ENV_VAR, typo)
    assert main(["scenario", "jump_tap", "--out", out]) == 2
    # an explicit --config beats the environment
    good = write_config(tmp_path, "gravity = 650.0\n", name="good.toml")
    assert main(["scenario", "jump_tap", "--config", good, "--out", out]) == 0


def test_train_eval_round_trip(tmp_path, capsys):
    config = write_config(tmp_path)
    run_dir = tmp_path / "run"
    argv = [
        "train", "--kind", "striker", "--seed", "11",
        "--config", config, "--out", str(run_dir), "--max-updates", "4",
    ]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert "trained to update 1, 32 env steps" in first  # total_steps caps the run
    assert (run_dir / "metrics.csv").read_text().count("\n") == 2  # header + one row
    ckpt = run_dir / "checkpoint_0000000032.ckpt"
    assert ckpt.exists()
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["config_path"] == os.path.abspath(config)

    # a second invocation resumes from the checkpoint instead of restarting
    assert main(argv) == 0
    assert "resuming from" in capsys.readouterr().out

    eval_dir = tmp_path / "eval"
    code = main([
        "eval", "--checkpoint", str(ckpt), "--config", config, "--out", str(eval_dir),
    ])
    assert code == 0
    report = capsys.readouterr().out
    assert "train: IQM" in report
    assert "novel: IQM" in report
    summary = (eval_dir / "summary.csv").read_text().splitlines()
    assert summary[0] == "category,episodes,iqm,ci_low,ci_high"
    assert len(summary) == 3
    episodes = (eval_dir / "episodes.csv").read_text().splitlines()
    assert len(episodes) == 1 + 4 * 2  # eval_shots * eval_repeats per category


def test_override_recorded_in_manifest(tmp_path):
    out = tmp_path / "out"
    code = main(["scenario", "jump_tap", "--out", str(out), "--gravity", "650.0"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["overrides"] == {"gravity": 650.0}


def test_console_script_entry_point(tmp_path):
    out = str(tmp_path / "out")
    proc = subprocess.run(
        ["carsoccer", "bench", "--frames", "200", "--worlds", "2", "--out", out],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert "steps/s" in proc.stdout
    assert os.path.exists(os.path.join(out, "manifest.json"))

"""Command-line front end: train, eval, scenario, shots, bench.

Configuration comes from a TOML file (``--config PATH``, defaulting to the
``ROCKETSIM_CONFIG`` environment variable when set). Physics keys live at the
file's top level; ``[ppo]`` and ``[shots]`` tables configure training and
shot sampling. Any long-form flag after the subcommand written as
``--dotted.key value`` overrides the corresponding file entry.

Every run writes a ``manifest.json`` into its output directory before any
work starts: the command, config path, resolved overrides, seed, build id,
output directory, and creation timestamp.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime fault.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from datetime import datetime, timezone

import toml

from .arena import PhysicsFault
from .config import ConfigError, PhysicsConfig, config_from_dict
from .maneuvers import builtin_scripts, run_script, script_by_name
from .net import PolicyValueNet, load_checkpoint
from .ppo import PpoConfig, UpdateFault, ppo_config_from_dict
from .shots import sample_shot_set, shot_ranges_from_dict, write_shot_set
from .sim import spawn_car, step
from .state import ControllerInput, make_world
from .stats import evaluate, iqm_ci
from .trace import error_stats, load_trace, write_trace
from .train import EVAL_SEED_OFFSET, NOVEL_SEED_OFFSET, Trainer, latest_checkpoint
from .vec import Vec3

CONFIG_ENV_VAR = "ROCKETSIM_CONFIG"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=os.path.dirname(os.path.abspath(__file__)),
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _write_manifest(out_dir: str, command: str, config_path: str | None,
                    overrides: dict, seed: int) -> None:
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "command": command,
        "config_path": os.path.abspath(config_path) if config_path else "",
        "overrides": overrides,
        "seed": seed,
        "build_id": _build_id(),
        "out_dir": os.path.abspath(out_dir),
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _parse_override_value(raw: str):
    try:
        return toml.loads(f"v = {raw}")["v"]
    except toml.TomlDecodeError:
        return raw


def _apply_overrides(data: dict, extras: list[str]) -> dict:
    """Fold --dotted.key value pairs into the config dict; returns the override map."""
    if len(extras) % 2 != 0:
        raise ConfigError(f"override flags must come in --key value pairs, got {extras!r}")
    applied: dict = {}
    for i in range(0, len(extras), 2):
        flag, raw = extras[i], extras[i + 1]
        if not flag.startswith("--") or len(flag) <= 2:
            raise ConfigError(f"expected a --key override flag, got {flag!r}")
        key = flag[2:]
        value = _parse_override_value(raw)
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-table entry")
        node[parts[-1]] = value
        applied[key] = value
    return applied


def _load_config_tables(path: str | None, extras: list[str]) -> tuple[PhysicsConfig, PpoConfig, dict, dict]:
    """(physics, ppo, shots table, overrides) from file + flag overrides."""
    data: dict = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = toml.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        except toml.TomlDecodeError as exc:
            raise ConfigError(f"malformed TOML in {path!r}: {exc}") from exc
    overrides = _apply_overrides(data, extras)
    ppo_table = data.pop("ppo", {})
    shots_table = data.pop("shots", {})
    if not isinstance(ppo_table, dict) or not isinstance(shots_table, dict):
        raise ConfigError("[ppo] and [shots] must be tables")
    physics = config_from_dict(data)
    ppo = ppo_config_from_dict(ppo_table)
    return physics, ppo, shots_table, overrides


# --- subcommands -----------------------------------------------------------------


def cmd_train(ns: argparse.Namespace, extras: list[str]) -> int:
    cfg, ppo, _, overrides = _load_config_tables(ns.config, extras)
    _write_manifest(ns.out, "train", ns.config, overrides, ns.seed)
    trainer = Trainer(cfg, ppo, ns.seed, kind=ns.kind, out_dir=ns.out, threaded=ns.threaded)
    resume_from = latest_checkpoint(ns.out)
    if resume_from is not None:
        trainer.load(resume_from)
        print(f"resuming from {resume_from} "
              f"(update {trainer.update_index}, {trainer.env_steps} env steps)")
    trainer.run(
        max_updates=ns.max_updates,
        metrics_path=os.path.join(ns.out, "metrics.csv"),
    )
    print(f"trained to update {trainer.update_index}, {trainer.env_steps} env steps")
    return EXIT_OK


def cmd_eval(ns: argparse.Namespace, extras: list[str]) -> int:
    cfg, ppo, _, overrides = _load_config_tables(ns.config, extras)
    tensors, meta = load_checkpoint(ns.checkpoint)
    kind = ns.kind or meta.get("kind", "goalie")
    seed = ns.seed if ns.seed is not None else int(meta.get("seed", 0))
    _write_manifest(ns.out, "eval", ns.config, overrides, seed)
    net = PolicyValueNet(0)
    net.load_state(tensors)
    train_shots = sample_shot_set(seed, kind, cfg)
    novel_shots = sample_shot_set(seed + NOVEL_SEED_OFFSET, kind, cfg)
    rewards = evaluate(
        net, cfg, kind, train_shots, novel_shots,
        seed + EVAL_SEED_OFFSET, ppo.eval_shots, ppo.eval_repeats,
    )
    episodes_path = os.path.join(ns.out, "episodes.csv")
    with open(episodes_path, "w", encoding="utf-8") as fh:
        fh.write("category,episode,reward\n")
        for category, vals in rewards.items():
            for i, r in enumerate(vals):
                fh.write(f"{category},{i},{r:.9g}\n")
    summary_path = os.path.join(ns.out, "summary.csv")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("category,episodes,iqm,ci_low,ci_high\n")
        for category, vals in rewards.items():
            score = iqm_ci(vals, seed=seed)
            fh.write(
                f"{category},{len(vals)},{score.iqm:.9g},{score.ci_low:.9g},{score.ci_high:.9g}\n"
            )
            print(
                f"{category}: IQM {score.iqm:.3f} "
                f"[{score.ci_low:.3f}, {score.ci_high:.3f}] over {len(vals)} episodes"
            )
    print(f"wrote {episodes_path} and {summary_path}")
    return EXIT_OK


def _print_error_stats(name: str, stats) -> None:
    cols = ["car.x", "car.y", "car.z", "car.dist", "ball.x", "ball.y", "ball.z", "ball.dist"]
    print(f"{name}:")
    print("  " + "stat".ljust(6) + "".join(c.rjust(12) for c in cols))
    for stat_name in ("mean", "std", "max"):
        row = []
        for channel in (stats.car, stats.ball):
            for axis in channel:
                row.append(f"{getattr(axis, stat_name):.6g}".rjust(12))
        print("  " + stat_name.ljust(6) + "".join(row))


def cmd_scenario(ns: argparse.Namespace, extras: list[str]) -> int:
    cfg, _, _, overrides = _load_config_tables(ns.config, extras)
    _write_manifest(ns.out, "scenario", ns.config, overrides, ns.seed)
    if ns.name == "all":
        scripts = builtin_scripts(cfg)
    else:
        scripts = (script_by_name(ns.name, cfg),)
    for script in scripts:
        trace = run_script(script, cfg)
        path = os.path.join(ns.out, f"{script.name}.csv")
        write_trace(path, trace)
        if trace.fault_frame is not None:
            print(f"warning: {script.name} faulted at frame {trace.fault_frame}; "
                  f"partial trace written", file=sys.stderr)
        if ns.reference:
            ref_path = os.path.join(ns.reference, f"{script.name}.csv")
            if not os.path.exists(ref_path):
                print(f"warning: no reference trace {ref_path}; wrote trace only",
                      file=sys.stderr)
                continue
            reference = load_trace(ref_path)
            # Compare the trace as written so identical runs report exact zeros.
            _print_error_stats(script.name, error_stats(reference, load_trace(path)))
    print(f"wrote {len(scripts)} trace(s) to {ns.out}")
    return EXIT_OK


def cmd_shots(ns: argparse.Namespace, extras: list[str]) -> int:
    cfg, _, shots_table, overrides = _load_config_tables(ns.config, extras)
    ranges = shot_ranges_from_dict(shots_table)
    _write_manifest(ns.out, "shots", ns.config, overrides, ns.seed)
    shot_set = sample_shot_set(ns.seed, ns.kind, cfg, ranges, ns.n)
    path = os.path.join(ns.out, f"shots_{ns.kind}_{ns.seed}.csv")
    write_shot_set(path, shot_set)
    bound = sum(shot_set.goal_bound)
    print(f"wrote {len(shot_set.samples)} {ns.kind} samples to {path} "
          f"({bound} goal-bound)")
    return EXIT_OK


def _bench_world(cfg: PhysicsConfig):
    world = make_world(cfg)
    world.car = spawn_car(cfg, (0.0, -2000.0), 0.0, 100.0)
    world.ball.position = Vec3(1000.0, 1000.0, cfg.ball_radius)
    return world

def _bench_inputs() -> tuple[ControllerInput, ...]:
    return (
        ControllerInput(throttle=1.0),
        ControllerInput(throttle=1.0, steer=0.5),
        ControllerInput(throttle=1.0, boost=True),
        ControllerInput(throttle=1.0, steer=-0.5, handbrake=True),
    )


def cmd_bench(ns: argparse.Namespace, extras: list[str]) -> int:
    cfg, _, _, overrides = _load_config_tables(ns.config, extras)
    _write_manifest(ns.out, "bench", ns.config, overrides, ns.seed)
    inputs = _bench_inputs()

    def run(n_worlds: int, frames: int) -> float:
        worlds = [_bench_world(cfg) for _ in range(n_worlds)]
        t0 = time.perf_counter()
        for f in range(frames):
            inp = inputs[(f // 300) % len(inputs)]
            for i in range(n_worlds):
                worlds[i] = step(worlds[i], inp, cfg)
        elapsed = time.perf_counter() - t0
        return n_worlds * frames / elapsed

    single = run(1, ns.frames)
    multi = run(ns.worlds, ns.frames)
    ratio = multi / single
    print(f"single world: {single:.0f} steps/s")
    print(f"{ns.worlds} worlds:     {multi:.0f} steps/s aggregate ({ratio:.2f}x of single-world rate)")
    return EXIT_OK


# --- parser and entry point ---------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, default_out: str) -> None:
    p.add_argument("--config", default=os.environ.get(CONFIG_ENV_VAR) or None,
                   help=f"TOML config path (default: ${CONFIG_ENV_VAR} if set)")
    p.add_argument("--out", default=default_out, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carsoccer",
        description="Deterministic car-soccer simulation: training, evaluation, and probes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a policy with clipped policy optimization")
    _add_common(p, "run_train")
    p.add_argument("--kind", choices=("goalie", "striker"), default="goalie")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-updates", type=int, default=None, dest="max_updates",
                   help="stop after this many updates (default: run the full step budget)")
    p.add_argument("--threaded", action="store_true", help="collect rollouts on worker threads")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on train and novel shots")
    _add_common(p, "run_eval")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kind", choices=("goalie", "striker"), default=None,
                   help="default: the checkpoint's kind")
    p.add_argument("--seed", type=int, default=None, help="default: the checkpoint's seed")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scenario", help="run scripted maneuvers and compare against references")
    _add_common(p, "run_scenario")
    p.add_argument("name", help="a maneuver name, or 'all'")
    p.add_argument("--reference", default=None, help="directory of reference traces")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("shots", help="sample a shot set and write it as CSV")
    _add_common(p, "run_shots")
    p.add_argument("--kind", choices=("goalie", "striker"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=1000)
    p.set_defaults(func=cmd_shots)

    p = sub.add_parser("bench", help="measure simulation throughput and world scaling")
    _add_common(p, "run_bench")
    p.add_argument("--frames", type=int, default=10000)
    p.add_argument("--worlds", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns, extras = parser.parse_known_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage problems; remap
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return ns.func(ns, extras)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhysicsFault, UpdateFault) as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

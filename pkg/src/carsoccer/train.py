"""Rollout collection and the training loop, deterministic end to end.

Each of the 16 workers owns an environment and an RNG stream seeded
`seed + worker_index`, consumed strictly in step order (8 categorical draws
per action, one integer draw per episode reset), so a threaded collection
produces bit-identical buffers to a sequential one; buffers merge in worker
index order. Episodes auto-reset with the next training shot drawn from the
worker's stream. Advantages are computed per worker trajectory with a value
bootstrap at the buffer boundary.

Checkpoints capture everything the run needs to continue bit-identically:
network and optimizer tensors in the blob, plus schedules, RNG states, and
per-worker environment snapshots in the manifest. Metrics are appended to a
CSV with no timestamps, so re-running a seed reproduces the file exactly.
"""

from __future__ import annotations

import os
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from .config import PhysicsConfig
from .env import OBSERVATION_SIZE, make_env
from .net import PolicyValueNet, load_checkpoint, save_checkpoint
from .ppo import (
    AdamW,
    LossBreakdown,
    PpoConfig,
    gae_advantages,
    ppo_update,
    sample_actions_logprob,
)
from .shots import ShotSet, sample_shot_set
from .state import BallState, CarState, JumpPhase, WheelState, WorldState, make_world
from .stats import evaluate, iqm_ci
from .vec import Quat, Vec3

# seed offset separating the novel evaluation shot set from the training set
NOVEL_SEED_OFFSET = 1_000_003
# seed offset for the minibatch-shuffle stream
UPDATE_SEED_OFFSET = 10_000
# seed offset for evaluation shot draws
EVAL_SEED_OFFSET = 20_000

METRICS_HEADER = (
    "update,env_steps,learning_rate,entropy_coef,total_loss,policy_objective,"
    "value_loss,entropy,clip_fraction,approx_kl,episode_reward_mean,episodes,"
    "eval_train_iqm,eval_train_lo,eval_train_hi,eval_novel_iqm,eval_novel_lo,eval_novel_hi"
)


class RolloutBatch(NamedTuple):
    obs: np.ndarray  # (N, 23) f32
    actions: np.ndarray  # (N, 8) i64
    logp: np.ndarray  # (N,) f64
    values: np.ndarray  # (N,) f64
    advantages: np.ndarray  # (N,) f64
    returns: np.ndarray  # (N,) f64
    episode_rewards: tuple[float, ...]  # episodes completed during collection


class Worker:
    """One environment plus its private RNG stream."""

    def __init__(self, index: int, kind: str, cfg: PhysicsConfig, shots: ShotSet, seed: int):
        self.index = index
        self.rng = np.random.default_rng(seed + index)
        self.env = make_env(kind, cfg)
        self.shots = shots
        self.obs: np.ndarray | None = None

    def _reset_next(self) -> None:
        idx = int(self.rng.integers(len(self.shots.samples)))
        self.obs = self.env.reset(self.shots.samples[idx])

    def rollout(self, net: PolicyValueNet, steps: int, gamma: float, lam: float) -> RolloutBatch:
        obs_buf = np.empty((steps, OBSERVATION_SIZE), dtype=np.float32)
        act_buf = np.empty((steps, 8), dtype=np.int64)
        logp_buf = np.empty(steps, dtype=np.float64)
        val_buf = np.empty(steps, dtype=np.float64)
        rew_buf = np.empty(steps, dtype=np.float64)
        done_buf = np.empty(steps, dtype=np.float64)
        episodes: list[float] = []
        if self.obs is None or self.env.terminated:
            self._reset_next()
        for t in range(steps):
            assert self.obs is not None
            logits, value, _ = net.forward(self.obs[None, :])
            actions, logp = sample_actions_logprob(self.rng, logits)
            action = actions[0]
            obs_buf[t] = self.obs
            act_buf[t] = action
            logp_buf[t] = logp[0]
            val_buf[t] = value[0]
            result = self.env.env_step(tuple(int(a) for a in action))
            rew_buf[t] = result.reward
            done_buf[t] = 1.0 if result.terminated else 0.0
            if result.terminated:
                episodes.append(float(result.reward))
                self._reset_next()
            else:
                self.obs = result.observation
        if done_buf[-1]:
            bootstrap = 0.0
        else:
            assert self.obs is not None
            bootstrap = float(net.forward(self.obs[None, :])[1][0])
        adv, ret = gae_advantages(rew_buf, val_buf, done_buf, bootstrap, gamma, lam)
        return RolloutBatch(obs_buf, act_buf, logp_buf, val_buf, adv, ret, tuple(episodes))


class Trainer:
    """Owns the net, optimizer, workers, schedules, and checkpointing."""

    def __init__(
        self,
        cfg: PhysicsConfig,
        ppo: PpoConfig,
        seed: int,
        kind: str = "goalie",
        out_dir: str | None = None,
        threaded: bool = False,
    ):
        self.cfg = cfg
        self.ppo = ppo
        self.seed = seed
        self.kind = kind
        self.out_dir = out_dir
        self.threaded = threaded
        self.net = PolicyValueNet(seed)
        self.optimizer = AdamW(
            self.net.params, ppo.adam_betas, ppo.adam_eps, ppo.weight_decay
        )
        self.update_rng = np.random.default_rng(seed + UPDATE_SEED_OFFSET)
        self.train_shots = sample_shot_set(seed, kind, cfg)
        self.novel_shots = sample_shot_set(seed + NOVEL_SEED_OFFSET, kind, cfg)
        self.workers = [
            Worker(i, kind, cfg, self.train_shots, seed) for i in range(ppo.workers)
        ]
        self.update_index = 0
        self.env_steps = 0
        self._next_checkpoint = ppo.checkpoint_every
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)

    # --- collection -----------------------------------------------------------

    def collect(self) -> RolloutBatch:
        run = lambda w: w.rollout(self.net, self.ppo.worker_steps, self.ppo.gamma, self.ppo.lam)
        if self.threaded:
            with ThreadPoolExecutor(max_workers=len(self.workers)) as pool:
                parts = list(pool.map(run, self.workers))
        else:
            parts = [run(w) for w in self.workers]
        episodes: list[float] = []
        for p in parts:
            episodes.extend(p.episode_rewards)
        return RolloutBatch(
            np.concatenate([p.obs for p in parts]),
            np.concatenate([p.actions for p in parts]),
            np.concatenate([p.logp for p in parts]),
            np.concatenate([p.values for p in parts]),
            np.concatenate([p.advantages for p in parts]),
            np.concatenate([p.returns for p in parts]),
            tuple(episodes),
        )

    # --- one optimization round ------------------------------------------------

    def train_update(self) -> tuple[LossBreakdown, RolloutBatch]:
        batch = self.collect()
        self.env_steps += self.ppo.batch_size
        lr = self.ppo.schedule(self.ppo.learning_rate, self.env_steps)
        c2 = self.ppo.schedule(self.ppo.entropy_coef, self.env_steps)
        breakdown = ppo_update(
            self.net,
            self.optimizer,
            self.ppo,
            self.update_rng,
            batch.obs,
            batch.actions,
            batch.logp,
            batch.values,
            batch.advantages,
            batch.returns,
            lr,
            c2,
        )
        self.update_index += 1
        return breakdown, batch

    def run(self, max_updates: int | None = None, metrics_path: str | None = None) -> None:
        """Train until the step budget (or `max_updates`), checkpointing as configured."""
        fh = None
        if metrics_path is not None:
            fresh = not os.path.exists(metrics_path) or os.path.getsize(metrics_path) == 0
            fh = open(metrics_path, "a", encoding="utf-8")
            if fresh:
                fh.write(METRICS_HEADER + "\n")
        try:
            done_updates = 0
            while self.env_steps < self.ppo.total_steps:
                if max_updates is not None and done_updates >= max_updates:
                    break
                breakdown, batch = self.train_update()
                done_updates += 1
                eval_cells = ["", "", "", "", "", ""]
                if self.ppo.eval_every and self.update_index % self.ppo.eval_every == 0:
                    scores = self.evaluate_now()
                    eval_cells = [
                        f"{scores['train'].iqm:.9g}",
                        f"{scores['train'].ci_low:.9g}",
                        f"{scores['train'].ci_high:.9g}",
                        f"{scores['novel'].iqm:.9g}",
                        f"{scores['novel'].ci_low:.9g}",
                        f"{scores['novel'].ci_high:.9g}",
                    ]
                if fh is not None:
                    ep = batch.episode_rewards
                    mean_r = f"{np.mean(ep):.9g}" if ep else ""
                    lr = self.ppo.schedule(self.ppo.learning_rate, self.env_steps)
                    c2 = self.ppo.schedule(self.ppo.entropy_coef, self.env_steps)
                    row = [
                        str(self.update_index),
                        str(self.env_steps),
                        f"{lr:.9g}",
                        f"{c2:.9g}",
                        f"{breakdown.total:.9g}",
                        f"{breakdown.policy_objective:.9g}",
                        f"{breakdown.value_loss:.9g}",
                        f"{breakdown.entropy:.9g}",
                        f"{breakdown.clip_fraction:.9g}",
                        f"{breakdown.approx_kl:.9g}",
                        mean_r,
                        str(len(ep)),
                    ] + eval_cells
                    fh.write(",".join(row) + "\n")
                    fh.flush()
                if self.out_dir is not None and self.env_steps >= self._next_checkpoint:
                    self.save(os.path.join(self.out_dir, self._checkpoint_name()))
                    self._next_checkpoint += self.ppo.checkpoint_every
            if self.out_dir is not None:
                self.save(os.path.join(self.out_dir, self._checkpoint_name()))
        finally:
            if fh is not None:
                fh.close()

    def _checkpoint_name(self) -> str:
        return f"checkpoint_{self.env_steps:010d}.ckpt"

    def evaluate_now(self) -> dict:
        rewards = evaluate(
            self.net,
            self.cfg,
            self.kind,
            self.train_shots,
            self.novel_shots,
            self.seed + EVAL_SEED_OFFSET + self.update_index,
            self.ppo.eval_shots,
            self.ppo.eval_repeats,
        )
        return {
            name: iqm_ci(vals, seed=self.seed + EVAL_SEED_OFFSET)
            for name, vals in rewards.items()
        }

    # --- checkpointing ----------------------------------------------------------

    def save(self, path: str) -> None:
        tensors: "OrderedDict[str, np.ndarray]" = OrderedDict()
        tensors.update(self.net.state_tensors())
        tensors.update(self.optimizer.state_tensors())
        meta = {
            "seed": self.seed,
            "kind": self.kind,
            "update_index": self.update_index,
            "env_steps": self.env_steps,
            "adam_step": self.optimizer.step_count,
            "next_checkpoint": self._next_checkpoint,
            "update_rng": _rng_state(self.update_rng),
            "workers": [_worker_snapshot(w) for w in self.workers],
        }
        save_checkpoint(path, tensors, meta)

    def load(self, path: str) -> None:
        tensors, meta = load_checkpoint(path)
        if meta.get("seed") != self.seed or meta.get("kind") != self.kind:
            raise ValueError(
                f"{path}: checkpoint is for seed={meta.get('seed')} kind={meta.get('kind')!r}, "
                f"trainer has seed={self.seed} kind={self.kind!r}"
            )
        self.net.load_state(tensors)
        self.optimizer.load_state(tensors, int(meta["adam_step"]))
        self.update_index = int(meta["update_index"])
        self.env_steps = int(meta["env_steps"])
        self._next_checkpoint = int(meta["next_checkpoint"])
        _set_rng_state(self.update_rng, meta["update_rng"])
        for worker, snap in zip(self.workers, meta["workers"]):
            _restore_worker(worker, snap)


def latest_checkpoint(out_dir: str) -> str | None:
    names = [
        n for n in os.listdir(out_dir)
        if n.startswith("checkpoint_") and n.endswith(".ckpt")
    ] if os.path.isdir(out_dir) else []
    return os.path.join(out_dir, max(names)) if names else None


# --- state snapshots for bit-identical resume ----------------------------------


def _rng_state(rng: np.random.Generator) -> dict:
    state = rng.bit_generator.state
    return {
        "bit_generator": state["bit_generator"],
        "state": str(state["state"]["state"]),  # ints exceed JSON float precision
        "inc": str(state["state"]["inc"]),
        "has_uint32": state["has_uint32"],
        "uinteger": state["uinteger"],
    }


def _set_rng_state(rng: np.random.Generator, snap: dict) -> None:
    rng.bit_generator.state = {
        "bit_generator": snap["bit_generator"],
        "state": {"state": int(snap["state"]), "inc": int(snap["inc"])},
        "has_uint32": snap["has_uint32"],
        "uinteger": snap["uinteger"],
    }


def _world_snapshot(world: WorldState) -> dict:
    car = world.car
    return {
        "frame": world.frame,
        "car": {
            "position": list(car.position),
            "rotation": list(car.rotation),
            "velocity": list(car.velocity),
            "angular_velocity": list(car.angular_velocity),
            "boost": car.boost,
            "wheels": [
                [int(w.in_contact), w.compression, w.compression_rate] for w in car.wheels
            ],
            "jump": {
                "phase": car.jump.phase.value,
                "jump_was_down": int(car.jump.jump_was_down),
                "hold_time": car.jump.hold_time,
                "hold_frames": car.jump.hold_frames,
                "hold_ended": int(car.jump.hold_ended),
                "window_time": car.jump.window_time,
                "dodge_time": car.jump.dodge_time,
                "dodge_axis": list(car.jump.dodge_axis),
            },
        },
        "ball": {
            "position": list(world.ball.position),
            "velocity": list(world.ball.velocity),
            "angular_velocity": list(world.ball.angular_velocity),
        },
        "car_ball_contact": int(world.car_ball_contact),
        "ball_in_goal_pos": int(world.ball_in_goal_pos),
        "ball_in_goal_neg": int(world.ball_in_goal_neg),
    }


def _world_restore(snap: dict, cfg: PhysicsConfig) -> WorldState:
    cs = snap["car"]
    js = cs["jump"]
    car = CarState(
        position=Vec3(*cs["position"]),
        rotation=Quat(*cs["rotation"]),
        velocity=Vec3(*cs["velocity"]),
        angular_velocity=Vec3(*cs["angular_velocity"]),
        boost=cs["boost"],
        wheels=tuple(
            WheelState(bool(w[0]), w[1], w[2]) for w in cs["wheels"]
        ),
    )
    car.jump.phase = JumpPhase(js["phase"])
    car.jump.jump_was_down = bool(js["jump_was_down"])
    car.jump.hold_time = js["hold_time"]
    car.jump.hold_frames = int(js["hold_frames"])
    car.jump.hold_ended = bool(js["hold_ended"])
    car.jump.window_time = js["window_time"]
    car.jump.dodge_time = js["dodge_time"]
    car.jump.dodge_axis = Vec3(*js["dodge_axis"])
    bs = snap["ball"]
    ball = BallState(
        position=Vec3(*bs["position"]),
        velocity=Vec3(*bs["velocity"]),
        angular_velocity=Vec3(*bs["angular_velocity"]),
    )
    world = make_world(cfg, car=car, ball=ball)
    world.frame = int(snap["frame"])
    world.car_ball_contact = bool(snap["car_ball_contact"])
    world.ball_in_goal_pos = bool(snap["ball_in_goal_pos"])
    world.ball_in_goal_neg = bool(snap["ball_in_goal_neg"])
    return world


def _worker_snapshot(worker: Worker) -> dict:
    env = worker.env
    snap = {
        "rng": _rng_state(worker.rng),
        "terminated": int(env.terminated),
    }
    if not env.terminated and env.world is not None:
        snap["world"] = _world_snapshot(env.world)
        snap["frames"] = env.frames
        snap["touched"] = int(env.touched)
        snap["goal_bound"] = int(env.goal_bound)
    return snap


def _restore_worker(worker: Worker, snap: dict) -> None:
    from .env import encode_observation  # local import to avoid a cycle at module load

    _set_rng_state(worker.rng, snap["rng"])
    env = worker.env
    if snap["terminated"]:
        env.terminated = True
        env.world = None
        worker.obs = None
        return
    env.world = _world_restore(snap["world"], env.cfg)
    env.frames = int(snap["frames"])
    env.terminated = False
    env.touched = bool(snap["touched"])
    env.goal_bound = bool(snap["goal_bound"])
    worker.obs = encode_observation(env.world, env.cfg)

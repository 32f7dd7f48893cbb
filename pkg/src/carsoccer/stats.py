"""Interquartile-mean scoring and greedy policy evaluation.

The IQM drops the lowest and highest floor(n/4) values and averages the rest
(so [0,0,0,0,1,1,1,1] scores 0.5). Confidence intervals come from a seeded
percentile bootstrap: resample the full set with replacement, take each
resample's IQM, and report the 2.5th and 97.5th percentiles.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .config import PhysicsConfig
from .env import make_env
from .net import PolicyValueNet
from .ppo import greedy_actions
from .shots import ShotSet

BOOTSTRAP_RESAMPLES = 1000
CI_LOW_PCT = 2.5
CI_HIGH_PCT = 97.5


class IqmCi(NamedTuple):
    iqm: float
    ci_low: float
    ci_high: float


def interquartile_mean(values: np.ndarray) -> float:
    n = len(values)
    drop = n // 4
    middle = np.sort(values)[drop : n - drop]
    return float(middle.mean())


def iqm_ci(values: Sequence[float], seed: int = 0, resamples: int = BOOTSTRAP_RESAMPLES) -> IqmCi:
    """IQM with a percentile-bootstrap CI; needs at least 4 values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or len(arr) < 4:
        raise ValueError(f"iqm_ci needs at least 4 scalar values, got {arr.shape}")
    rng = np.random.default_rng(seed)
    boot = np.empty(resamples, dtype=np.float64)
    n = len(arr)
    for b in range(resamples):
        boot[b] = interquartile_mean(arr[rng.integers(0, n, size=n)])
    lo, hi = np.percentile(boot, [CI_LOW_PCT, CI_HIGH_PCT])
    return IqmCi(interquartile_mean(arr), float(lo), float(hi))


def run_greedy_episode(net: PolicyValueNet, env, sample) -> float:
    """One episode with argmax actions; returns the terminal reward."""
    obs = env.reset(sample)
    while True:
        logits, _, _ = net.forward(obs[None, :])
        action = tuple(int(a) for a in greedy_actions(logits)[0])
        result = env.env_step(action)
        obs = result.observation
        if result.terminated:
            return float(result.reward)


def evaluate(
    net: PolicyValueNet,
    cfg: PhysicsConfig,
    kind: str,
    train_shots: ShotSet,
    novel_shots: ShotSet,
    seed: int,
    shots_per_repeat: int = 10,
    repeats: int = 3,
) -> dict[str, np.ndarray]:
    """Greedy rewards over seeded shot draws: repeats x shots per category.

    Returns {"train": rewards, "novel": rewards}, each of length
    repeats * shots_per_repeat, in draw order.
    """
    rng = np.random.default_rng(seed)
    env = make_env(kind, cfg)
    out: dict[str, np.ndarray] = {}
    for name, shot_set in (("train", train_shots), ("novel", novel_shots)):
        rewards = []
        for _ in range(repeats):
            idxs = rng.choice(len(shot_set.samples), size=shots_per_repeat, replace=False)
            for i in idxs:
                rewards.append(run_greedy_episode(net, env, shot_set.samples[int(i)]))
        out[name] = np.asarray(rewards, dtype=np.float64)
    return out

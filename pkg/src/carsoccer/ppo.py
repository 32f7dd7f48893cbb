"""Clipped-surrogate policy optimization for the multi-discrete action heads.

All math is plain numpy with hand-derived gradients (verified against finite
differences in float64). Definitions used throughout:

* Joint log-probability of an action tuple: the sum over the 8 heads of
  log softmax probability, with probabilities floored at 1e-10 before the
  log (a uniform policy gives -9.61581).
* Entropy: the mean of the 8 per-head entropies (uniform: 1.20198 nats).
* GAE: deltas d_t = r_t + g*V(s_{t+1})*(1-done_t) - V(s_t) accumulated
  backward with factor g*lambda*(1-done_t); returns are V + advantages.
* Policy objective per sample: min(q*A, clip(q, 1-eps, 1+eps)*A) with
  q = exp(logp_new - logp_old).
* Value loss per sample: max((V-G)^2, (Vc-G)^2) where
  Vc = V_old + clip(V - V_old, -eps, eps).
* Total loss: -(policy_objective - c1*value_loss + c2*entropy), minimized.

Advantages are normalized per minibatch (mean 0, std 1, eps 1e-8). Gradients
are clipped to a global norm of 0.5 and applied with decoupled-weight-decay
Adam. A non-finite loss aborts the update, reporting the minibatch index.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .env import ACTION_CARDINALITIES
from .net import PolicyValueNet

PROB_FLOOR = 1e-10
ADV_NORM_EPS = 1e-8
GRAD_NORM_EPS = 1e-6


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.99
    lam: float = 0.95
    workers: int = 16
    worker_steps: int = 512
    epochs: int = 3
    mini_batches: int = 8
    clip_range: float = 0.2
    value_coef: float = 0.25  # c1
    entropy_coef: tuple[float, float] = (5e-4, 1e-5)  # c2, linear start -> end
    learning_rate: tuple[float, float] = (3e-4, 3e-6)  # linear start -> end
    max_grad_norm: float = 0.5
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    weight_decay: float = 1e-4
    total_steps: int = 10_000_000
    checkpoint_every: int = 500_000
    eval_every: int = 50  # updates between greedy evaluations
    eval_shots: int = 10  # shots drawn per category per repeat
    eval_repeats: int = 3

    @property
    def batch_size(self) -> int:
        return self.workers * self.worker_steps

    def schedule(self, pair: tuple[float, float], env_steps: int) -> float:
        """Linear interpolation over the training budget, clamped at the end."""
        frac = min(1.0, env_steps / self.total_steps)
        start, end = pair
        return start + (end - start) * frac


_PPO_INT_FIELDS = {
    "workers", "worker_steps", "epochs", "mini_batches",
    "total_steps", "checkpoint_every", "eval_every", "eval_shots", "eval_repeats",
}
_PPO_FLOAT_FIELDS = {
    "gamma", "lam", "clip_range", "value_coef", "max_grad_norm", "adam_eps", "weight_decay",
}
_PPO_PAIR_FIELDS = {"entropy_coef", "learning_rate", "adam_betas"}


def ppo_config_from_dict(data: dict) -> PpoConfig:
    """Build a PpoConfig from a parsed TOML table laid over the defaults."""
    from .config import ConfigError  # local import: config does not depend on ppo

    known = _PPO_INT_FIELDS | _PPO_FLOAT_FIELDS | _PPO_PAIR_FIELDS
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown ppo config keys {sorted(unknown)}")
    kwargs: dict = {}
    for name, value in data.items():
        if name in _PPO_INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ConfigError(f"ppo.{name}: expected a nonnegative integer")
            kwargs[name] = value
        elif name in _PPO_FLOAT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"ppo.{name}: expected a number")
            kwargs[name] = float(value)
        else:
            if (
                not isinstance(value, (list, tuple))
                or len(value) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
            ):
                raise ConfigError(f"ppo.{name}: expected a two-number array")
            kwargs[name] = (float(value[0]), float(value[1]))
    cfg = PpoConfig(**kwargs)
    if cfg.batch_size % cfg.mini_batches != 0:
        raise ConfigError("ppo: workers * worker_steps must divide evenly into mini_batches")
    for field_name in ("gamma", "lam"):
        if not (0.0 <= getattr(cfg, field_name) <= 1.0):
            raise ConfigError(f"ppo.{field_name}: must be in [0, 1]")
    if not (cfg.workers > 0 and cfg.worker_steps > 0 and cfg.epochs > 0 and cfg.mini_batches > 0):
        raise ConfigError("ppo: workers, worker_steps, epochs, mini_batches must be positive")
    return cfg


class LossBreakdown(NamedTuple):
    total: float
    policy_objective: float
    value_loss: float
    entropy: float
    clip_fraction: float  # samples with |q - 1| > eps
    approx_kl: float  # mean(logp_old - logp_new)


# --- probability helpers ------------------------------------------------------


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def joint_logprob(logits: list[np.ndarray], actions: np.ndarray) -> np.ndarray:
    """Sum of per-head log-probabilities, probabilities floored at 1e-10.

    `actions` is (batch, 8) of head indices; returns (batch,).
    """
    batch = actions.shape[0]
    rows = np.arange(batch)
    total = np.zeros(batch, dtype=logits[0].dtype)
    for i in range(len(ACTION_CARDINALITIES)):
        p = softmax(logits[i])[rows, actions[:, i]]
        total += np.log(np.maximum(p, PROB_FLOOR))
    return total


def joint_entropy(logits: list[np.ndarray]) -> np.ndarray:
    """Mean of the 8 per-head entropies, per sample; returns (batch,)."""
    total = np.zeros(logits[0].shape[0], dtype=logits[0].dtype)
    for li in logits:
        p = softmax(li)
        total += -(p * np.log(np.maximum(p, PROB_FLOOR))).sum(axis=-1)
    return total / len(logits)


def sample_actions(rng: np.random.Generator, logits: list[np.ndarray]) -> np.ndarray:
    """Categorical draw per head via inverse CDF; (batch, 8) indices."""
    batch = logits[0].shape[0]
    out = np.empty((batch, len(logits)), dtype=np.int64)
    for i, li in enumerate(logits):
        cdf = np.cumsum(softmax(li), axis=-1)
        u = rng.random(batch)
        out[:, i] = np.minimum((u[:, None] > cdf).sum(axis=-1), li.shape[-1] - 1)
    return out


def sample_actions_logprob(
    rng: np.random.Generator, logits: list[np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Fused draw + joint log-probability (same RNG consumption as sample_actions)."""
    batch = logits[0].shape[0]
    rows = np.arange(batch)
    actions = np.empty((batch, len(logits)), dtype=np.int64)
    logp = np.zeros(batch, dtype=np.float64)
    for i, li in enumerate(logits):
        p = softmax(li)
        cdf = np.cumsum(p, axis=-1)
        u = rng.random(batch)
        a = np.minimum((u[:, None] > cdf).sum(axis=-1), li.shape[-1] - 1)
        actions[:, i] = a
        logp += np.log(np.maximum(p[rows, a], PROB_FLOOR))
    return actions, logp


def greedy_actions(logits: list[np.ndarray]) -> np.ndarray:
    return np.stack([li.argmax(axis=-1) for li in logits], axis=1)


# --- generalized advantage estimation -----------------------------------------


def gae_advantages(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap_value: float,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """(advantages, returns) over one trajectory of T steps.

    `values` are V(s_t) for the visited states; `bootstrap_value` stands in
    for V(s_T) when the final transition did not terminate.
    """
    steps = len(rewards)
    adv = np.zeros(steps, dtype=np.float64)
    next_value = bootstrap_value
    acc = 0.0
    for t in range(steps - 1, -1, -1):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        acc = delta + gamma * lam * not_done * acc
        adv[t] = acc
        next_value = values[t]
    returns = values + adv
    return adv, returns


# --- loss and exact gradient ---------------------------------------------------


def ppo_loss_and_grads(
    net: PolicyValueNet,
    obs: np.ndarray,
    actions: np.ndarray,
    logp_old: np.ndarray,
    values_old: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    clip_range: float,
    value_coef: float,
    entropy_coef: float,
) -> tuple[LossBreakdown, "OrderedDict[str, np.ndarray]"]:
    """Minibatch loss plus exact parameter gradients (advantages already normalized)."""
    batch = obs.shape[0]
    heads = len(ACTION_CARDINALITIES)
    rows = np.arange(batch)
    logits, values, cache = net.forward(obs)

    probs = [softmax(li) for li in logits]
    p_sel = [probs[i][rows, actions[:, i]] for i in range(heads)]
    logp_new = np.zeros(batch, dtype=np.float64)
    for i in range(heads):
        logp_new += np.log(np.maximum(p_sel[i], PROB_FLOOR))

    # policy surrogate: min of unclipped and clipped ratio branches
    q = np.exp(logp_new - logp_old)
    unclipped = q * advantages
    clipped = np.clip(q, 1.0 - clip_range, 1.0 + clip_range) * advantages
    policy_objective = float(np.minimum(unclipped, clipped).mean())
    # gradient flows only where the unclipped branch attains the min
    active = unclipped <= clipped
    dlogp = np.where(active, q * advantages, 0.0) / batch  # d objective / d logp_new

    # entropy bonus: mean over batch of per-sample mean head entropy
    per_head_entropy = [
        -(p * np.log(np.maximum(p, PROB_FLOOR))).sum(axis=-1) for p in probs
    ]
    entropy = float(np.mean(sum(per_head_entropy)) / heads)

    # clipped value loss
    v_clip = values_old + np.clip(values - values_old, -clip_range, clip_range)
    err = values - returns
    err_clip = v_clip - returns
    use_raw = err**2 >= err_clip**2
    value_loss = float(np.maximum(err**2, err_clip**2).mean())
    in_band = np.abs(values - values_old) <= clip_range
    dvalues_loss = np.where(use_raw, 2.0 * err, np.where(in_band, 2.0 * err_clip, 0.0)) / batch

    total = -(policy_objective - value_coef * value_loss + entropy_coef * entropy)

    # upstream gradients of the MINIMIZED total per logit / value
    dlogits: list[np.ndarray] = []
    for i in range(heads):
        p = probs[i]
        one_hot_minus_p = -p.copy()
        one_hot_minus_p[rows, actions[:, i]] += 1.0
        # logp term: d logp_sel / d z = onehot - p; zero where the floor engaged
        floored = p_sel[i] < PROB_FLOOR
        dz = one_hot_minus_p * np.where(floored, 0.0, dlogp)[:, None]
        # entropy term: d H_head / d z_j = -p_j (log p_j + H_head)
        logp_full = np.log(np.maximum(p, PROB_FLOOR))
        dz_entropy = -p * (logp_full + per_head_entropy[i][:, None]) / (heads * batch)
        dz = dz + entropy_coef * dz_entropy
        dlogits.append((-dz).astype(net.dtype))  # total is the negated objective
    dvalues = (value_coef * dvalues_loss).astype(net.dtype)

    grads = net.backward(cache, dlogits, dvalues)
    clip_fraction = float(np.mean(np.abs(q - 1.0) > clip_range))
    approx_kl = float(np.mean(logp_old - logp_new))
    breakdown = LossBreakdown(
        float(total), policy_objective, value_loss, entropy, clip_fraction, approx_kl
    )
    return breakdown, grads


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + ADV_NORM_EPS)


def clip_grad_norm(grads: "OrderedDict[str, np.ndarray]", max_norm: float) -> float:
    """Scale gradients in place to a global norm cap; returns the pre-clip norm."""
    total = float(np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values())))
    if total > max_norm:
        scale = max_norm / (total + GRAD_NORM_EPS)
        for g in grads.values():
            g *= scale
    return total


class AdamW:
    """Adam with decoupled weight decay, matching the usual torch semantics."""

    def __init__(
        self,
        params: "OrderedDict[str, np.ndarray]",
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 1e-4,
    ):
        self.params = params
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = OrderedDict((k, np.zeros_like(v)) for k, v in params.items())
        self.v = OrderedDict((k, np.zeros_like(v)) for k, v in params.items())

    def step(self, grads: "OrderedDict[str, np.ndarray]", lr: float) -> None:
        self.step_count += 1
        b1, b2 = self.betas
        bc1 = 1.0 - b1**self.step_count
        bc2 = 1.0 - b2**self.step_count
        for name, p in self.params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p *= 1.0 - lr * self.weight_decay
            p -= (lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)

    def state_tensors(self) -> "OrderedDict[str, np.ndarray]":
        out: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name, arr in self.m.items():
            out[f"adam.m.{name}"] = arr
        for name, arr in self.v.items():
            out[f"adam.v.{name}"] = arr
        return out

    def load_state(self, tensors: dict, step_count: int) -> None:
        self.step_count = step_count
        for name in self.params:
            self.m[name] = np.ascontiguousarray(tensors[f"adam.m.{name}"], dtype=self.params[name].dtype)
            self.v[name] = np.ascontiguousarray(tensors[f"adam.v.{name}"], dtype=self.params[name].dtype)


class UpdateFault(RuntimeError):
    """A non-finite loss or gradient aborted an optimization update."""


def ppo_update(
    net: PolicyValueNet,
    optimizer: AdamW,
    cfg: PpoConfig,
    rng: np.random.Generator,
    obs: np.ndarray,
    actions: np.ndarray,
    logp_old: np.ndarray,
    values_old: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    lr: float,
    entropy_coef: float,
) -> LossBreakdown:
    """Epochs x minibatches of clipped updates over one collected batch.

    Returns the loss breakdown averaged over all minibatches.
    """
    batch = obs.shape[0]
    if batch % cfg.mini_batches != 0:
        raise UpdateFault(f"batch {batch} not divisible into {cfg.mini_batches} minibatches")
    mb_size = batch // cfg.mini_batches
    sums = np.zeros(len(LossBreakdown._fields), dtype=np.float64)
    count = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(batch)
        for k in range(cfg.mini_batches):
            idx = order[k * mb_size : (k + 1) * mb_size]
            adv = normalize_advantages(advantages[idx])
            breakdown, grads = ppo_loss_and_grads(
                net,
                obs[idx],
                actions[idx],
                logp_old[idx],
                values_old[idx],
                adv,
                returns[idx],
                cfg.clip_range,
                cfg.value_coef,
                entropy_coef,
            )
            if not np.isfinite(breakdown.total):
                raise UpdateFault(f"non-finite loss in minibatch {count}")
            clip_grad_norm(grads, cfg.max_grad_norm)
            optimizer.step(grads, lr)
            sums += np.array(breakdown, dtype=np.float64)
            count += 1
    return LossBreakdown(*(sums / count))

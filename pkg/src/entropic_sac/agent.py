"""Soft actor-critic with a selectable soft Bellman backup.

All parameters live in one :class:`ParamTree`:

    actor/layer{i}/{weight,bias}      obs -> (mean, log_std)
    critic1/..., critic2/...          (obs, action) -> Q
    target1/..., target2/...          polyak copies of the critics
    temperature/log_alpha             shape (1,)

Loss functions take explicit standard-normal draws (``eps``) rather than an
rng so that each loss is a deterministic function of the parameters; that is
what makes them checkable by finite differences.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .diffcore import tensor as T
from .diffcore.nn import ParamTree, forward_mlp, init_mlp
from .diffcore.optim import OptimizerState, adam, optimizer_step, sgd
from .diffcore.tensor import Graph, backward
from .errors import ConfigError, ContractError, InfeasibleError, NumericError
from .envsim import ActionSpace

LOG_STD_MIN, LOG_STD_MAX = -20.0, 2.0
TANH_EPS = 1e-6
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
BACKUP_VARIANTS = ("corrected", "missing_target")
CRITICS = ("critic1", "critic2")
TARGETS = ("target1", "target2")
LOG_ALPHA = "temperature/log_alpha"


@dataclass
class Batch:
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    terminal: np.ndarray

    def __len__(self) -> int:
        return len(self.reward)


def check_target_entropy(target_entropy: float, space: ActionSpace, allow_infeasible: bool = False) -> None:
    """Policy entropy cannot exceed log|A|; a larger target can never be met."""
    bound = space.log_volume
    if target_entropy > bound:
        msg = (f"target entropy {target_entropy} exceeds log|A| = {bound:.4f}, "
               "the entropy of the uniform distribution over the action box")
        if not allow_infeasible:
            raise InfeasibleError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)


def init_params(obs_dim: int, act_dim: int, hidden, alpha0: float, rng: np.random.Generator) -> ParamTree:
    if alpha0 <= 0:
        raise ConfigError("alpha0 must be positive (log parametrization)")
    tree = ParamTree()
    init_mlp(tree, "actor", [obs_dim, *hidden, 2 * act_dim], rng)
    for c, tgt in zip(CRITICS, TARGETS):
        init_mlp(tree, c, [obs_dim + act_dim, *hidden, 1], rng)
        for path, v in tree.subtree(c + "/").items():
            tree[tgt + path[len(c):]] = v.copy()
    tree[LOG_ALPHA] = np.array([math.log(alpha0)])
    return tree


def alpha_of(params) -> float:
    return float(np.exp(np.asarray(params[LOG_ALPHA]).reshape(-1)[0]))


# --- actor -----------------------------------------------------------------

def actor_head(params, obs):
    out = forward_mlp(params, "actor", obs, "relu")
    k = out.shape[1] // 2
    return T.columns(out, 0, k), T.clip(T.columns(out, k, 2 * k), LOG_STD_MIN, LOG_STD_MAX)


def squashed_sample(params, obs, eps: np.ndarray, space: ActionSpace):
    """Reparameterized tanh-Gaussian sample scaled into the action box.

    Returns (action, log_prob) as Tensors; log_prob has shape (B,).
    """
    scale = (space.high - space.low) / 2.0
    shift = (space.high + space.low) / 2.0
    mean, log_std = actor_head(params, obs)
    u = T.add(mean, T.mul(T.exp(log_std), eps))
    squashed = T.tanh(u)
    action = T.add(T.mul(squashed, scale), shift)
    # Gaussian log-density of u; (u - mean) / std == eps exactly
    log_gauss = T.sub(T.mul(eps * eps, -0.5), T.add(log_std, HALF_LOG_2PI))
    log_jac = T.log(T.add(T.sub(1.0, T.square(squashed)), TANH_EPS))
    per_dim = T.sub(T.sub(log_gauss, log_jac), np.log(scale))
    return action, T.sum(per_dim, axis=1)


def sample_action(params: ParamTree, obs, rng: np.random.Generator | None, space: ActionSpace,
                  deterministic: bool = False) -> tuple[np.ndarray, float]:
    """One action for one observation. ``deterministic`` uses the Gaussian mean."""
    obs = np.asarray(obs, dtype=np.float64).reshape(1, -1)
    if not np.isfinite(obs).all():
        raise ContractError("observation must be finite")
    eps = np.zeros((1, space.dim)) if deterministic else rng.standard_normal((1, space.dim))
    a, lp = squashed_sample(params, obs, eps, space)
    if not (np.isfinite(a.data).all() and np.isfinite(lp.data).all()):
        raise NumericError("non-finite action sample")
    return a.data[0].copy(), float(lp.data[0])


def action_log_prob(params: ParamTree, obs, action, space: ActionSpace) -> np.ndarray:
    """log pi(action | obs) for actions strictly inside the box (inverse of the squash)."""
    obs = np.asarray(obs, dtype=np.float64).reshape(-1, len(params["actor/layer0/weight"]))
    action = np.asarray(action, dtype=np.float64).reshape(len(obs), -1)
    scale = (space.high - space.low) / 2.0
    shift = (space.high + space.low) / 2.0
    mean, log_std = actor_head(params, obs)
    y = (action - shift) / scale
    u = np.arctanh(y)
    eps = (u - mean.data) / np.exp(log_std.data)
    per_dim = (-0.5 * eps * eps - log_std.data - HALF_LOG_2PI
               - np.log(1.0 - y * y + TANH_EPS) - np.log(scale))
    return per_dim.sum(axis=1)


# --- critics ---------------------------------------------------------------

def q_value(params, prefix: str, obs, action):
    x = T.concat([obs, action], axis=1)
    out = forward_mlp(params, prefix, x, "relu")
    return T.reshape(out, (out.shape[0],))


def critic_targets(batch: Batch, params: ParamTree, next_eps: np.ndarray, space: ActionSpace,
                   target_entropy: float, variant: str, gamma: float) -> np.ndarray:
    """Soft Bellman targets; nothing here is recorded for gradients.

    corrected:      y = r + gamma (1 - terminal) (q' - alpha (log pi' + H0))
    missing_target: y = r + gamma (1 - terminal) (q' - alpha log pi')
    """
    if variant not in BACKUP_VARIANTS:
        raise ConfigError(f"unknown backup variant {variant!r}; expected one of {BACKUP_VARIANTS}")
    if len(batch) == 0:
        raise ContractError("empty batch")
    a_next, logp_next = squashed_sample(params, batch.next_obs, next_eps, space)
    q_next = np.minimum(q_value(params, TARGETS[0], batch.next_obs, a_next).data,
                        q_value(params, TARGETS[1], batch.next_obs, a_next).data)
    alpha = alpha_of(params)
    soft = q_next - alpha * logp_next.data
    if variant == "corrected":
        soft = soft - alpha * target_entropy
    return batch.reward + gamma * (1.0 - batch.terminal) * soft


def critic_loss(batch: Batch, params: ParamTree, y: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """mean (Q1 - y)^2 + mean (Q2 - y)^2 with gradients for the online critics only."""
    g = Graph()
    live = {**g.params_from(params, "critic1/"), **g.params_from(params, "critic2/")}
    total = None
    for c in CRITICS:
        err = T.sub(q_value(live, c, batch.obs, batch.action), y)
        term = T.mean(T.square(err))
        total = term if total is None else T.add(total, term)
    return total.item(), backward(g, total)


def actor_loss(batch: Batch, params: ParamTree, eps: np.ndarray, space: ActionSpace
               ) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """mean over states of alpha log pi(a|s) - min(Q1, Q2)(s, a), a reparameterized.

    Returns (loss, actor gradients, detached log-probs).
    """
    g = Graph()
    live = dict(params.items())
    live.update(g.params_from(params, "actor/"))
    action, logp = squashed_sample(live, batch.obs, eps, space)
    q = T.minimum(q_value(live, CRITICS[0], batch.obs, action),
                  q_value(live, CRITICS[1], batch.obs, action))
    loss = T.mean(T.sub(T.mul(logp, alpha_of(params)), q))
    return loss.item(), backward(g, loss), logp.data.copy()


def temperature_loss(log_probs: np.ndarray, params: ParamTree, target_entropy: float
                     ) -> tuple[float, dict[str, np.ndarray], float]:
    """alpha * h_hat with h_hat = mean(-log pi) - H0 (log-probs are constants).

    Returns (loss, gradient on log_alpha, h_hat).
    """
    h_hat = float(np.mean(-np.asarray(log_probs) - target_entropy))
    g = Graph()
    log_alpha = g.param(LOG_ALPHA, params[LOG_ALPHA])
    loss = T.sum(T.mul(T.exp(log_alpha), h_hat))
    return loss.item(), backward(g, loss), h_hat


def polyak_update(params: ParamTree, tau: float) -> ParamTree:
    """target <- (1 - tau) target + tau online, in place."""
    if not 0.0 < tau <= 1.0:
        raise ContractError(f"tau must lie in (0, 1], got {tau}")
    for c, tgt in zip(CRITICS, TARGETS):
        for path, online in params.subtree(c + "/").items():
            tpath = tgt + path[len(c):]
            target = params[tpath]
            if target.shape != online.shape:
                raise ContractError(f"shape mismatch between {path} and {tpath}")
            params[tpath] = (1.0 - tau) * target + tau * online
    return params


# --- agent -----------------------------------------------------------------

@dataclass
class AgentSettings:
    target_entropy: float
    alpha0: float
    variant: str
    gamma: float
    tau: float
    actor_lr: float
    critic_lr: float
    alpha_lr: float
    hidden_sizes: tuple[int, ...]
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8


class SacAgent:
    """Owns parameters and optimizer state; ``update`` runs one full SAC step."""

    def __init__(self, settings: AgentSettings, obs_dim: int, space: ActionSpace,
                 rng: np.random.Generator, params: ParamTree | None = None):
        if settings.variant not in BACKUP_VARIANTS:
            raise ConfigError(f"unknown backup variant {settings.variant!r}")
        self.settings = settings
        self.space = space
        self.params = params if params is not None else init_params(
            obs_dim, space.dim, settings.hidden_sizes, settings.alpha0, rng)
        s = settings
        self.actor_opt = adam(self.params, s.actor_lr, s.adam_betas, s.adam_eps, prefix="actor/")
        self.critic_opt = adam(self.params, s.critic_lr, s.adam_betas, s.adam_eps, prefix="critic")
        # temperature: plain SGD, weight decay fixed at zero
        self.alpha_opt: OptimizerState = sgd(s.alpha_lr, weight_decay=0.0)

    @property
    def alpha(self) -> float:
        return alpha_of(self.params)

    def act(self, obs, rng, deterministic: bool = False) -> np.ndarray:
        return sample_action(self.params, obs, rng, self.space, deterministic)[0]

    def update(self, batch: Batch, rng: np.random.Generator) -> dict[str, float]:
        s = self.settings
        dim = self.space.dim
        next_eps = rng.standard_normal((len(batch), dim))
        eps = rng.standard_normal((len(batch), dim))

        y = critic_targets(batch, self.params, next_eps, self.space, s.target_entropy, s.variant, s.gamma)
        c_loss, c_grads = critic_loss(batch, self.params, y)
        optimizer_step(self.critic_opt, self.params, c_grads)

        a_loss, a_grads, logp = actor_loss(batch, self.params, eps, self.space)
        optimizer_step(self.actor_opt, self.params, a_grads)

        t_loss, t_grads, h_hat = temperature_loss(logp, self.params, s.target_entropy)
        optimizer_step(self.alpha_opt, self.params, t_grads)

        polyak_update(self.params, s.tau)
        for name, v in (("critic_loss", c_loss), ("actor_loss", a_loss), ("temperature_loss", t_loss)):
            if not math.isfinite(v):
                raise NumericError(f"non-finite {name}: {v}")
        return {
            "critic_loss": c_loss,
            "actor_loss": a_loss,
            "temperature_loss": t_loss,
            "mean_batch_entropy": h_hat + s.target_entropy,
        }

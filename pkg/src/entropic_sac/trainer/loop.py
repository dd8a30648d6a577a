"""Training loop and evaluation."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..agent import LOG_ALPHA, AgentSettings, SacAgent, check_target_entropy, sample_action
from ..diffcore import checkpoint
from ..diffcore.nn import ParamTree
from ..envsim import make_env
from ..errors import NumericError
from .config import RunConfig, load_config_document, save_config, validate
from .metrics import MetricsRow, MetricsWriter, mean_or_none
from .replay import ReplayBuffer

log = logging.getLogger(__name__)

# independent PCG64 streams spawned from the run seed, in this order
STREAMS = ("init", "env", "warmup", "explore", "replay", "update", "eval")


def spawn_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.Generator(np.random.PCG64(ss)) for name, ss in zip(STREAMS, children)}


def eval_seed_for(seed: int) -> int:
    return int(np.random.SeedSequence(seed).spawn(len(STREAMS))[STREAMS.index("eval")].generate_state(1)[0])


def agent_settings(config: RunConfig) -> AgentSettings:
    return AgentSettings(
        target_entropy=config.target_entropy, alpha0=config.alpha0, variant=config.variant,
        gamma=config.gamma, tau=config.tau, actor_lr=config.actor_lr, critic_lr=config.critic_lr,
        alpha_lr=config.alpha_lr, hidden_sizes=tuple(config.hidden_sizes),
        adam_betas=tuple(config.adam_betas), adam_eps=config.adam_eps)


@dataclass
class EvalStats:
    mean: float
    std: float
    min: float
    max: float
    returns: list[float]

    def to_document(self) -> dict:
        return {"mean": self.mean, "std": self.std, "min": self.min, "max": self.max,
                "episodes": len(self.returns), "returns": self.returns}


def evaluate(params: ParamTree, env_id: str, episodes: int, seed: int) -> EvalStats:
    """Undiscounted returns of the deterministic (mean) policy."""
    if episodes < 1:
        raise ValueError("need at least one evaluation episode")
    env = make_env(env_id, np.random.Generator(np.random.PCG64(seed)))
    returns = []
    for _ in range(episodes):
        obs = env.reset()
        total, done = 0.0, False
        while not done:
            a, _ = sample_action(params, obs, None, env.action_space, deterministic=True)
            obs, r, terminal, truncated = env.step(a)
            total += r
            done = terminal or truncated
        returns.append(total)
    arr = np.array(returns)
    return EvalStats(float(arr.mean()), float(arr.std()), float(arr.min()), float(arr.max()), returns)


@dataclass
class TrainResult:
    params: ParamTree
    rows: list[MetricsRow]
    buffer: ReplayBuffer
    warmup_actions: np.ndarray


class _Accumulator:
    def __init__(self):
        self.stats: dict[str, list[float]] = {}

    def add(self, stats: dict[str, float]) -> None:
        for k, v in stats.items():
            self.stats.setdefault(k, []).append(v)

    def pop_means(self) -> dict[str, float | None]:
        out = {k: mean_or_none(v) for k, v in self.stats.items()}
        self.stats = {}
        return out


def train(config: RunConfig, run_dir: str | Path | None = None) -> TrainResult:
    """Run one seeded training job; writes artifacts when ``run_dir`` is given.

    Steps 1..warmup_steps use uniform random actions and no updates; every
    later step performs one update (critic, actor, temperature, polyak).
    A row is logged at every episode end and every ``log_interval`` steps.
    """
    streams = spawn_streams(config.seed)
    env = make_env(config.env_id, streams["env"])
    space = env.action_space
    check_target_entropy(config.target_entropy, space, config.allow_infeasible_target)
    agent = SacAgent(agent_settings(config), env.observation_dim, space, streams["init"])
    buffer = ReplayBuffer(config.buffer_capacity, env.observation_dim, space.dim)
    eval_seed = eval_seed_for(config.seed)

    out = Path(run_dir) if run_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        save_config(config, out / "config.json")
    writer = MetricsWriter(out / "metrics.csv" if out is not None else None)
    acc = _Accumulator()
    warmup_actions = []

    def save_ckpt(name: str) -> None:
        if out is not None:
            checkpoint.save(agent.params, out / name)

    try:
        obs = env.reset()
        ep_return = 0.0
        for step in range(1, config.total_steps + 1):
            if step <= config.warmup_steps:
                action = streams["warmup"].uniform(space.low, space.high)
                warmup_actions.append(action)
            else:
                action = agent.act(obs, streams["explore"])
            next_obs, reward, terminal, truncated = env.step(action)
            buffer.add(obs, action, reward, next_obs, terminal, truncated)
            ep_return += reward
            obs = next_obs

            if step > config.warmup_steps:
                batch = buffer.sample(config.batch_size, streams["replay"])
                try:
                    acc.add(agent.update(batch, streams["update"]))
                except NumericError as exc:
                    _abort(writer, agent, step, exc, out)
                    raise

            episode_done = terminal or truncated
            finished_return = ep_return if episode_done else None
            if episode_done:
                obs = env.reset()
                ep_return = 0.0

            do_eval = config.eval_interval > 0 and step % config.eval_interval == 0
            if episode_done or step % config.log_interval == 0 or do_eval:
                means = acc.pop_means()
                ev = evaluate(agent.params, config.env_id, config.eval_episodes, eval_seed) if do_eval else None
                writer.write(MetricsRow(
                    env_step=step, episode_return=finished_return, alpha=agent.alpha,
                    log_alpha=float(agent.params[LOG_ALPHA][0]),
                    mean_batch_entropy=means.get("mean_batch_entropy"),
                    critic_loss=means.get("critic_loss"), actor_loss=means.get("actor_loss"),
                    temperature_loss=means.get("temperature_loss"),
                    eval_return_mean=ev.mean if ev else None, eval_return_std=ev.std if ev else None))
                if ev is not None:
                    log.info("step %d eval %.1f +- %.1f alpha %.4f", step, ev.mean, ev.std, agent.alpha)
            if config.checkpoint_interval and step % config.checkpoint_interval == 0:
                save_ckpt(f"checkpoint_{step:07d}.json")
        save_ckpt("checkpoint_final.json")
    finally:
        writer.close()
    return TrainResult(agent.params, writer.rows, buffer,
                       np.array(warmup_actions).reshape(-1, space.dim))


def _abort(writer: MetricsWriter, agent: SacAgent, step: int, exc: Exception, out: Path | None) -> None:
    """Record a diagnostic row; periodic checkpoints written so far are kept."""
    nan = float("nan")
    writer.write(MetricsRow(step, None, agent.alpha, float(agent.params[LOG_ALPHA][0]), None, nan, nan, nan))
    if out is not None:
        (out / "diverged.json").write_text(json.dumps({"env_step": step, "error": str(exc)}, indent=2) + "\n")
    log.error("aborting at step %d: %s", step, exc)


def load_run(run_dir: str | Path) -> tuple[RunConfig, ParamTree]:
    run_dir = Path(run_dir)
    config = validate(load_config_document(run_dir / "config.json"))
    return config, checkpoint.load(run_dir / "checkpoint_final.json")


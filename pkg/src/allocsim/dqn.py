"""Double-Q training loop, replay memory, and policy evaluation.

The learner keeps two parameter sets: the online network picks the
bootstrap action for the next state, the periodically synchronized target
network scores it. Per step: epsilon-greedy action, engine step, replay
push, one gradient step on a sampled batch (once the memory holds a full
batch), and a hard target sync every ``target_sync_period`` global steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .baselines import fifo_action, spt_action
from .engine import Engine, EngineConfig
from .model import BusinessProcessSuite
from .neural import (
    CheckpointError,
    DivergenceError,
    NetworkParams,
    OptimizerState,
    copy_into,
    forward,
    init_params,
    save_params,
    train_step,
)

__all__ = [
    "Experience",
    "ReplayMemory",
    "DqnConfig",
    "TrainingRun",
    "HIDDEN_SIZES",
    "EVAL_POLICIES",
    "epsilon_at",
    "select_action",
    "compute_targets",
    "train",
    "evaluate",
]

HIDDEN_SIZES = (32, 32)

EVAL_POLICIES = ("checkpoint", "fifo", "spt", "random")


class Experience(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray


class ReplayMemory:
    """Bounded FIFO store; inserting beyond capacity evicts the oldest."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: list[Experience] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, item: Experience) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._cursor] = item
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Experience]:
        """Uniform sample without replacement within the batch."""
        if batch_size > len(self._items):
            raise ValueError(f"cannot sample {batch_size} of {len(self._items)} items")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]

    def items(self) -> tuple[Experience, ...]:
        """Current contents, oldest first."""
        return tuple(self._items[self._cursor:] + self._items[: self._cursor])


@dataclass(frozen=True)
class DqnConfig:
    episodes: int = 600
    steps_per_episode: int = 400
    batch_size: int = 32
    discount: float = 0.99
    target_sync_period: int = 10_000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if min(self.episodes, self.steps_per_episode, self.batch_size) < 1:
            raise ValueError("episodes, steps_per_episode and batch_size must be positive")
        if self.target_sync_period < 1:
            raise ValueError("target_sync_period must be positive")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError(f"discount {self.discount} not in [0, 1]")
        if self.epsilon_end > self.epsilon_start:
            raise ValueError("epsilon_end must not exceed epsilon_start")
        if self.anneal_steps < 1:
            raise ValueError("episodes * steps_per_episode too small (anneal horizon is 0)")

    @property
    def anneal_steps(self) -> int:
        """Exploration decays over the first tenth of all training steps."""
        return math.floor(self.episodes * self.steps_per_episode * 0.1)

    @property
    def replay_capacity(self) -> int:
        """Replay memory holds a tenth of all training steps."""
        return math.floor(self.episodes * self.steps_per_episode * 0.1)


@dataclass
class TrainingRun:
    """Everything a finished (or aborted) training run reports back."""

    episode_rewards: list[float]
    episode_mean_loss: list[float]
    episode_epsilon_end: list[float]
    best_path: Path | None
    last_path: Path | None
    best_reward: float | None
    seed: int
    config: DqnConfig
    engine_config: EngineConfig
    failed: bool = False
    error: str | None = None


def epsilon_at(step: int, config: DqnConfig) -> float:
    """Linear anneal from epsilon_start to epsilon_end, then flat."""
    if step < 0:
        raise ValueError(f"negative step {step}")
    anneal = config.anneal_steps
    if step >= anneal:
        return config.epsilon_end
    t = step / anneal
    return (1.0 - t) * config.epsilon_start + t * config.epsilon_end


def select_action(
    params: NetworkParams,
    state: np.ndarray,
    epsilon: float,
    rng: np.random.Generator | None = None,
) -> int:
    """Epsilon-greedy over the flat action indices; greedy ties go low."""
    if epsilon > 0.0:
        if rng is None:
            raise ValueError("epsilon > 0 requires an rng")
        if rng.random() < epsilon:
            return int(rng.integers(0, params.layer_sizes[-1]))
    q = forward(params, np.asarray(state, dtype=float)[None, :], train=False)
    return int(np.argmax(q[0]))


def compute_targets(
    rewards: np.ndarray,
    next_states: np.ndarray,
    online: NetworkParams,
    target: NetworkParams,
    discount: float,
) -> np.ndarray:
    """Bootstrap value per row: R + discount * Q_target(S', argmax Q_online(S')).

    Episode ends are plain truncations of a continuing process, so no
    terminal masking is applied.
    """
    q_online = forward(online, next_states, train=False)
    best = np.argmax(q_online, axis=1)
    q_target = forward(target, next_states, train=False)
    rows = np.arange(q_target.shape[0])
    return np.asarray(rewards, dtype=float) + discount * q_target[rows, best]


def _batch_arrays(batch: list[Experience]):
    states = np.stack([e.state for e in batch])
    actions = np.array([e.action for e in batch], dtype=np.intp)
    rewards = np.array([e.reward for e in batch], dtype=float)
    next_states = np.stack([e.next_state for e in batch])
    return states, actions, rewards, next_states


def train(
    suite: BusinessProcessSuite,
    engine_config: EngineConfig,
    config: DqnConfig,
    out_dir: str | Path,
) -> TrainingRun:
    """Run the full training loop, writing best/last checkpoints to out_dir.

    The best checkpoint is rewritten whenever an episode's cumulative
    reward strictly exceeds every previous episode's; the last checkpoint
    holds the online weights at termination (normal or aborted).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    best_path = out_dir / "best.ckpt"
    last_path = out_dir / "last.ckpt"

    engine = Engine(suite, engine_config)
    sizes = (engine.observation_width(), *HIDDEN_SIZES, engine.n_actions)

    root = np.random.SeedSequence(config.seed)
    online_ss, target_ss, agent_ss, episodes_ss = root.spawn(4)
    online = init_params(sizes, np.random.default_rng(online_ss))
    target = init_params(sizes, np.random.default_rng(target_ss))
    agent_rng = np.random.default_rng(agent_ss)
    episode_seeds = episodes_ss.spawn(config.episodes)

    optimizer = OptimizerState.for_params(online, config.learning_rate)
    memory = ReplayMemory(config.replay_capacity)

    run = TrainingRun(
        episode_rewards=[],
        episode_mean_loss=[],
        episode_epsilon_end=[],
        best_path=None,
        last_path=None,
        best_reward=None,
        seed=config.seed,
        config=config,
        engine_config=engine_config,
    )

    global_step = 0
    try:
        for episode in range(config.episodes):
            state = engine.reset(episode_seeds[episode])
            episode_reward = 0.0
            losses: list[float] = []
            epsilon = config.epsilon_start
            for _ in range(config.steps_per_episode):
                epsilon = epsilon_at(global_step, config)
                action_index = select_action(online, state, epsilon, agent_rng)
                next_state, reward = engine.step(engine.decode_action(action_index))
                episode_reward += reward
                memory.push(Experience(state, action_index, reward, next_state))
                if len(memory) >= config.batch_size:
                    batch = memory.sample(config.batch_size, agent_rng)
                    states, actions, rewards, next_states = _batch_arrays(batch)
                    targets = compute_targets(
                        rewards, next_states, online, target, config.discount
                    )
                    losses.append(train_step(online, optimizer, states, actions, targets))
                global_step += 1
                if global_step % config.target_sync_period == 0:
                    copy_into(online, target)
                state = next_state

            run.episode_rewards.append(episode_reward)
            run.episode_mean_loss.append(
                sum(losses) / len(losses) if losses else 0.0
            )
            run.episode_epsilon_end.append(epsilon)
            if run.best_reward is None or episode_reward > run.best_reward:
                run.best_reward = episode_reward
                save_params(online, best_path)
                run.best_path = best_path
    except DivergenceError as exc:
        run.failed = True
        run.error = str(exc)

    save_params(online, last_path)
    run.last_path = last_path
    return run


def evaluate(
    policy: str,
    suite: BusinessProcessSuite,
    engine_config: EngineConfig,
    episodes: int,
    steps: int,
    params: NetworkParams | None = None,
    base_seed: int = 0,
) -> list[float]:
    """Per-episode cumulative rewards for a fixed policy; no learning.

    Episode seeds derive only from ``base_seed``, so evaluating several
    policies with the same seed pits them against identical arrival
    randomness episode by episode. The checkpoint policy acts greedily
    (epsilon 0).
    """
    if policy not in EVAL_POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {EVAL_POLICIES}")
    engine = Engine(suite, engine_config)
    if policy == "checkpoint":
        if params is None:
            raise ValueError("checkpoint policy requires network parameters")
        expected = (engine.observation_width(), engine.n_actions)
        actual = (params.layer_sizes[0], params.layer_sizes[-1])
        if expected != actual:
            raise CheckpointError(
                f"checkpoint built for (input, output) = {actual}, "
                f"but suite/encoding needs {expected}"
            )

    root = np.random.SeedSequence(base_seed)
    episodes_ss, policy_ss = root.spawn(2)
    episode_seeds = episodes_ss.spawn(episodes)
    policy_rng = np.random.default_rng(policy_ss)

    rewards: list[float] = []
    for episode in range(episodes):
        state = engine.reset(episode_seeds[episode])
        total = 0.0
        for _ in range(steps):
            if policy == "checkpoint":
                action = engine.decode_action(select_action(params, state, 0.0))
            elif policy == "fifo":
                action = fifo_action(engine.observe_privileged())
            elif policy == "spt":
                action = spt_action(engine.observe_privileged())
            else:
                action = engine.decode_action(int(policy_rng.integers(0, engine.n_actions)))
            state, reward = engine.step(action)
            total += reward
        rewards.append(total)
    return rewards

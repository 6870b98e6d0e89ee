"""Independent Q-learners bidding in the day-ahead market.

Six agents each own a Q-network (MLP or hybrid backend), a frozen target
copy, and a replay buffer.  Every hour all agents read the same market state
(hour of day, demand), pick bid actions epsilon-greedily, the market clears,
and each agent stores its own transition and takes one gradient step on a
replayed minibatch.  Target networks are re-synced on an episode schedule.

Training stops at the market-equilibrium criterion: the total (all-agent)
daily reward changed by less than ``convergence_threshold`` over
``convergence_window`` consecutive episodes.  The returned report compares
the converged greedy policies against truthful marginal-cost bidding and
carries the per-agent visit-frequency tables accumulated over training.

Rewards are stored in raw USD.  For the gradient steps only, rewards are
rescaled by ``reward_scale`` (default: one over price cap times the largest
capacity) so TD targets are O(1); USD-scale targets would otherwise dwarf
what a freshly initialised network can express and stall Adam.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from . import hybridnet as hn
from . import market
from .hybridnet import TransitionBatch
from .market import DayAheadMarket, MarketDataset

BACKENDS = ("mlp", "hybrid")


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """Ring buffer of transitions with O(1) uniform sampling."""

    def __init__(self, capacity: int, state_dim: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._states = np.zeros((capacity, state_dim))
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._next_states = np.zeros((capacity, state_dim))
        self._dones = np.zeros(capacity, dtype=bool)
        self._size = 0
        self._cursor = 0

    def __len__(self) -> int:
        return self._size

    def push(self, transition: Transition) -> None:
        i = self._cursor
        self._states[i] = transition.state
        self._actions[i] = transition.action
        self._rewards[i] = transition.reward
        self._next_states[i] = transition.next_state
        self._dones[i] = transition.done
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng, reward_scale: float = 1.0) -> TransitionBatch:
        if self._size < batch_size:
            raise ValueError(f"buffer holds {self._size} transitions, need {batch_size}")
        idx = rng.integers(0, self._size, size=batch_size)
        return TransitionBatch(
            states=self._states[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx] * reward_scale,
            next_states=self._next_states[idx],
            dones=self._dones[idx],
        )


@dataclass
class TrainerConfig:
    backend: str = "mlp"
    seed: int = 0
    gamma: float = 0.9
    learning_rate: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay: float = 0.995
    replay_capacity: int = 10000
    batch_size: int = 32
    target_sync_period: int = 10  # episodes
    max_episodes: int = 5000
    convergence_window: int = 5
    convergence_threshold: float = 0.05
    hidden_size: int = 32
    vqc_depth: int = 2
    reward_scale: float | None = None  # None: 1 / (price_cap * max capacity)

    def validate(self) -> None:
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError(
                f"need 0 <= epsilon_end <= epsilon_start <= 1, got "
                f"{self.epsilon_end}, {self.epsilon_start}"
            )
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ValueError(f"epsilon_decay must be in (0, 1], got {self.epsilon_decay}")
        if self.convergence_window < 2:
            raise ValueError(f"convergence_window must be >= 2, got {self.convergence_window}")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ValueError("need batch_size >= 1 and replay_capacity >= batch_size")
        if self.target_sync_period < 1:
            raise ValueError(f"target_sync_period must be >= 1, got {self.target_sync_period}")
        if self.max_episodes < 1:
            raise ValueError(f"max_episodes must be >= 1, got {self.max_episodes}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.hidden_size < 1 or self.vqc_depth < 0:
            raise ValueError("need hidden_size >= 1 and vqc_depth >= 0")
        if self.reward_scale is not None and self.reward_scale <= 0:
            raise ValueError(f"reward_scale must be > 0, got {self.reward_scale}")

    def to_dict(self) -> dict:
        return asdict(self)


def epsilon_schedule(config: TrainerConfig, episode: int) -> float:
    """Exploration rate for a 0-based episode index."""
    return max(config.epsilon_end, config.epsilon_start * config.epsilon_decay**episode)


def select_action(q_values, epsilon: float, rng) -> int:
    """Epsilon-greedy pick; greedy ties resolve to the lowest action index."""
    q_values = np.asarray(q_values)
    if q_values.size == 0:
        raise ValueError("q_values must be non-empty")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(q_values.size))
    return int(np.argmax(q_values))


def check_convergence(history, window: int = 5, threshold: float = 0.05) -> bool:
    """True when the last ``window`` episode-over-episode changes are all small.

    Relative change uses a denominator floor of 1 to stay meaningful when
    rewards pass through zero.
    """
    history = list(history)
    if len(history) < window + 1:
        return False
    tail = history[-(window + 1):]
    for prev, curr in zip(tail, tail[1:]):
        if abs(curr - prev) / max(abs(prev), 1.0) >= threshold:
            return False
    return True


def action_entropy(frequencies) -> float:
    """Shannon entropy (nats) of an empirical count table."""
    counts = np.asarray(list(frequencies), dtype=np.float64)
    if counts.size == 0:
        raise ValueError("frequency table must be non-empty")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("frequency table must have positive total count")
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


# ---------------------------------------------------------------------------
# Agents and episodes
# ---------------------------------------------------------------------------


@dataclass
class Agent:
    net: object
    target: object
    buffer: ReplayBuffer
    opt: hn.AdamState


def _make_net(config: TrainerConfig, state_dim: int, n_actions: int, rng):
    if config.backend == "hybrid":
        return hn.HybridQNet.init(
            state_dim, n_actions, rng, hidden=config.hidden_size, depth=config.vqc_depth
        )
    return hn.MlpQNet.init(state_dim, n_actions, rng, hidden=config.hidden_size)


def make_agents(config: TrainerConfig, dataset: MarketDataset, rng) -> list[Agent]:
    state_dim = 2  # (hour of day, demand), both normalised
    agents = []
    for _ in range(dataset.n_gencos):
        net = _make_net(config, state_dim, dataset.n_actions, rng)
        agents.append(
            Agent(
                net=net,
                target=hn.sync_target(net),
                buffer=ReplayBuffer(config.replay_capacity, state_dim),
                opt=hn.AdamState.for_params(net.parameters(), learning_rate=config.learning_rate),
            )
        )
    return agents


def state_features(state: market.MarketState, peak_demand: float) -> np.ndarray:
    return np.array([state.hour / 23.0, state.demand / peak_demand])


def default_reward_scale(dataset: MarketDataset) -> float:
    return 1.0 / (dataset.price_cap * max(g.capacity for g in dataset.gencos))


class FrequencyRecorder:
    """Per-agent (hour, action) and (hour, reward) visit counts."""

    def __init__(self, n_agents: int):
        self.state_action = [{} for _ in range(n_agents)]
        self.state_reward = [{} for _ in range(n_agents)]

    def record(self, agent: int, hour: int, action: int, reward: float) -> None:
        sa = self.state_action[agent]
        key = (hour, action)
        sa[key] = sa.get(key, 0) + 1
        sr = self.state_reward[agent]
        key = (hour, reward)
        sr[key] = sr.get(key, 0) + 1

    def entropy(self, agent: int) -> float:
        by_action = {}
        for (_, action), count in self.state_action[agent].items():
            by_action[action] = by_action.get(action, 0) + count
        return action_entropy(by_action.values())

    def export(self):
        sa = [
            [
                {"hour": h, "action": a, "count": c}
                for (h, a), c in sorted(table.items())
            ]
            for table in self.state_action
        ]
        sr = [
            [
                {"hour": h, "reward": r, "count": c}
                for (h, r), c in sorted(table.items())
            ]
            for table in self.state_reward
        ]
        return sa, sr


def train_episode(env: DayAheadMarket, agents: list[Agent], config: TrainerConfig,
                  epsilon: float, rng, recorder: FrequencyRecorder | None = None,
                  reward_scale: float = 1.0) -> np.ndarray:
    """One 24-hour episode with learning; returns each agent's daily reward."""
    peak = env.dataset.profile.peak
    state = env.reset()
    totals = np.zeros(len(agents))
    actions = np.zeros(len(agents), dtype=np.int64)
    for _ in range(market.HOURS_PER_DAY):
        features = state_features(state, peak)
        for g, agent in enumerate(agents):
            q = hn.forward(agent.net, features)
            actions[g] = select_action(q, epsilon, rng)
        next_state, rewards, done, _ = env.step(state, actions)
        next_features = state_features(next_state, peak)
        for g, agent in enumerate(agents):
            agent.buffer.push(
                Transition(features, int(actions[g]), float(rewards[g]), next_features, done)
            )
            if recorder is not None:
                recorder.record(g, state.hour, int(actions[g]), float(rewards[g]))
        for agent in agents:
            if len(agent.buffer) >= config.batch_size:
                batch = agent.buffer.sample(config.batch_size, rng, reward_scale)
                grads = hn.gradients(batch, agent.net, agent.target, config.gamma)
                hn.adam_step(agent.net.parameters(), grads, agent.opt)
        totals += rewards
        state = next_state
    return totals


def greedy_episode(env: DayAheadMarket, agents: list[Agent]):
    """Evaluate the learned policies with no exploration and no learning."""
    peak = env.dataset.profile.peak
    state = env.reset()
    totals = np.zeros(len(agents))
    results = []
    for _ in range(market.HOURS_PER_DAY):
        features = state_features(state, peak)
        actions = [
            int(np.argmax(hn.forward(agent.net, features))) for agent in agents
        ]
        state, rewards, _, result = env.step(state, actions)
        totals += rewards
        results.append(result)
    return totals, results


# ---------------------------------------------------------------------------
# Experiments and reports
# ---------------------------------------------------------------------------


@dataclass
class EquilibriumReport:
    backend: str
    seed: int
    converged: bool
    episodes_to_converge: int
    mc_s_0600: float
    mc_s_1800: float
    r_s: float
    mc_a_0600: float
    mc_a_1800: float
    r_a: float
    action_entropy: list[float]
    state_action_freq: list
    state_reward_freq: list
    dataset: dict
    trainer: dict

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "EquilibriumReport":
        return cls(**raw)


def actual_cost_metrics(dataset: MarketDataset) -> tuple[float, float, float]:
    """(price at 06:00, price at 18:00, daily total profit) under truthful bids."""
    return market.daily_metrics(market.actual_cost_day(dataset))


def run_experiment_with_history(config: TrainerConfig, dataset: MarketDataset):
    """Train to convergence (or the episode cap) and report the equilibrium.

    Returns (EquilibriumReport, history) where history has one row per
    training episode: episode number, per-agent daily rewards, their total,
    and the exploration rate used.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    env = DayAheadMarket(dataset)
    agents = make_agents(config, dataset, rng)
    recorder = FrequencyRecorder(dataset.n_gencos)
    reward_scale = (
        config.reward_scale if config.reward_scale is not None else default_reward_scale(dataset)
    )

    totals_history: list[float] = []
    history_rows: list[dict] = []
    converged = False
    episodes = 0
    for episode in range(config.max_episodes):
        epsilon = epsilon_schedule(config, episode)
        rewards = train_episode(env, agents, config, epsilon, rng, recorder, reward_scale)
        total = float(rewards.sum())
        totals_history.append(total)
        history_rows.append(
            {
                "episode": episode + 1,
                "rewards": [float(r) for r in rewards],
                "total": total,
                "epsilon": epsilon,
            }
        )
        episodes = episode + 1
        if (episode + 1) % config.target_sync_period == 0:
            for agent in agents:
                agent.target = hn.sync_target(agent.net)
        if check_convergence(totals_history, config.convergence_window, config.convergence_threshold):
            converged = True
            break

    strategic_totals, strategic_results = greedy_episode(env, agents)
    mc_s_0600, mc_s_1800, r_s = market.daily_metrics(strategic_results)
    mc_a_0600, mc_a_1800, r_a = actual_cost_metrics(dataset)
    sa_freq, sr_freq = recorder.export()
    report = EquilibriumReport(
        backend=config.backend,
        seed=config.seed,
        converged=converged,
        episodes_to_converge=episodes,
        mc_s_0600=mc_s_0600,
        mc_s_1800=mc_s_1800,
        r_s=float(strategic_totals.sum()),
        mc_a_0600=mc_a_0600,
        mc_a_1800=mc_a_1800,
        r_a=r_a,
        action_entropy=[recorder.entropy(g) for g in range(dataset.n_gencos)],
        state_action_freq=sa_freq,
        state_reward_freq=sr_freq,
        dataset=dataset.to_dict(),
        trainer=config.to_dict(),
    )
    return report, history_rows


def run_experiment(config: TrainerConfig, dataset: MarketDataset) -> EquilibriumReport:
    report, _ = run_experiment_with_history(config, dataset)
    return report


def benchmark_forward(config: TrainerConfig, dataset: MarketDataset, calls: int = 200) -> dict:
    """Wall-clock time of single-state Q-network forward passes, in milliseconds."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    net = _make_net(config, 2, dataset.n_actions, rng)
    features = state_features(market.MarketState(hour=18, demand=dataset.profile[18]),
                              dataset.profile.peak)
    hn.forward(net, features)  # warm-up
    samples = []
    for _ in range(calls):
        start = time.perf_counter()
        hn.forward(net, features)
        samples.append((time.perf_counter() - start) * 1e3)
    samples.sort()
    return {
        "backend": config.backend,
        "calls": calls,
        "mean_ms": float(np.mean(samples)),
        "median_ms": float(samples[len(samples) // 2]),
        "p95_ms": float(samples[int(len(samples) * 0.95) - 1]),
    }

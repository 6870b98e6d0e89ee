"""Request/response models for the experiment service.

Every model forbids unknown fields so config typos surface as 422 errors
naming the offending key instead of being silently dropped.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..market import HOURS_PER_DAY


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GencoModel(StrictModel):
    id: int
    capacity: float
    marginal_cost: float
    fixed_cost: float


class DatasetModel(StrictModel):
    name: str = "unnamed"
    price_cap: float = 1000.0
    n_actions: int = 21
    gencos: list[GencoModel]
    hourly_demand: list[float]

    @field_validator("hourly_demand")
    @classmethod
    def _check_hours(cls, value):
        if len(value) != HOURS_PER_DAY:
            raise ValueError(f"hourly_demand must have {HOURS_PER_DAY} entries, got {len(value)}")
        return value


class TrainerModel(StrictModel):
    gamma: float = 0.9
    learning_rate: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay: float = 0.995
    replay_capacity: int = 10000
    batch_size: int = 32
    target_sync_period: int = 10
    max_episodes: int = 5000
    convergence_window: int = 5
    convergence_threshold: float = 0.05
    hidden_size: int = 32
    reward_scale: Optional[float] = None


class VqcModel(StrictModel):
    depth: int = 2


class MarketOverridesModel(StrictModel):
    n_actions: Optional[int] = None
    price_cap: Optional[float] = None


class RunRequest(StrictModel):
    dataset: DatasetModel
    trainer: TrainerModel = Field(default_factory=TrainerModel)
    vqc: VqcModel = Field(default_factory=VqcModel)
    backend: Literal["mlp", "hybrid"]
    seed: int


class StateActionEntry(StrictModel):
    hour: int
    action: int
    count: int


class StateRewardEntry(StrictModel):
    hour: int
    reward: float
    count: int


class ReportModel(StrictModel):
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
    state_action_freq: list[list[StateActionEntry]]
    state_reward_freq: list[list[StateRewardEntry]]
    dataset: DatasetModel
    trainer: dict


class HistoryRow(StrictModel):
    episode: int
    rewards: list[float]
    total: float
    epsilon: float


class RunResponse(StrictModel):
    report: ReportModel
    history: list[HistoryRow]


class CompareRequest(StrictModel):
    reports: list[ReportModel]


class CompareResponse(StrictModel):
    table_csv: str
    table_markdown: str


class PlotRequest(StrictModel):
    report: ReportModel
    agent: int
    hour: int


class PlotResponse(StrictModel):
    state_action_svg: str
    state_reward_svg: str


class BenchRequest(StrictModel):
    backend: Literal["mlp", "hybrid"]
    dataset: Optional[DatasetModel] = None
    calls: int = 200
    hidden_size: int = 32
    vqc_depth: int = 2


class BenchResponse(StrictModel):
    backend: str
    calls: int
    mean_ms: float
    median_ms: float
    p95_ms: float


class HealthResponse(StrictModel):
    status: str
    version: str

"""Day-ahead electricity market: supply bids, uniform-price clearing, rewards.

The market is a single bus cleared by merit order.  Every generator offers
its full capacity at one price per hour; bids are sorted by price and
dispatched until the hourly demand is met.  All dispatched energy is paid
the price of the marginal (last dispatched) bid.  Equal-price bids share the
residual demand pro rata.  If demand exceeds the total offered quantity,
everything is dispatched and the price settles at the cap.

Hourly profit of generator g:

    profit_g = (clearing_price - marginal_cost_g) * dispatch_g - fixed_cost_g

The fixed cost accrues every hour whether or not the unit runs, which is why
bidding at true marginal cost can lose money over a day.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

HOURS_PER_DAY = 24
DEFAULT_PRICE_CAP = 1000.0


@dataclass(frozen=True)
class GencoSpec:
    id: int
    capacity: float  # MW
    marginal_cost: float  # USD/MWh
    fixed_cost: float  # USD per hour, incurred regardless of dispatch

    def validate(self, price_cap: float, where: str = "genco") -> None:
        if self.capacity <= 0:
            raise ValueError(f"{where}.capacity must be > 0, got {self.capacity}")
        if not 0 <= self.marginal_cost <= price_cap:
            raise ValueError(
                f"{where}.marginal_cost must be in [0, {price_cap}], got {self.marginal_cost}"
            )
        if self.fixed_cost < 0:
            raise ValueError(f"{where}.fixed_cost must be >= 0, got {self.fixed_cost}")


@dataclass(frozen=True)
class Bid:
    genco: int
    price: float  # USD/MWh
    quantity: float  # MW


@dataclass(frozen=True)
class MarketState:
    hour: int  # 0..23
    demand: float  # MW


@dataclass
class ClearingResult:
    clearing_price: float  # USD/MWh
    dispatch: np.ndarray  # MW per genco
    profit: np.ndarray  # USD per genco


@dataclass
class LoadProfile:
    hourly_demand: list[float]

    def __post_init__(self):
        if len(self.hourly_demand) != HOURS_PER_DAY:
            raise ValueError(
                f"hourly_demand must have {HOURS_PER_DAY} entries, got {len(self.hourly_demand)}"
            )
        for hour, demand in enumerate(self.hourly_demand):
            if demand <= 0:
                raise ValueError(f"hourly_demand[{hour}] must be > 0, got {demand}")

    def __getitem__(self, hour: int) -> float:
        return self.hourly_demand[hour]

    @property
    def peak(self) -> float:
        return max(self.hourly_demand)


@dataclass
class MarketDataset:
    gencos: list[GencoSpec]
    profile: LoadProfile
    price_cap: float = DEFAULT_PRICE_CAP
    n_actions: int = 21
    name: str = "unnamed"

    def __post_init__(self):
        if self.price_cap <= 0:
            raise ValueError(f"price_cap must be > 0, got {self.price_cap}")
        if self.n_actions < 2:
            raise ValueError(f"n_actions must be >= 2, got {self.n_actions}")
        for i, spec in enumerate(self.gencos):
            if spec.id != i:
                raise ValueError(f"gencos[{i}].id must equal its position, got {spec.id}")
            spec.validate(self.price_cap, where=f"gencos[{i}]")

    @property
    def n_gencos(self) -> int:
        return len(self.gencos)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "price_cap": self.price_cap,
            "n_actions": self.n_actions,
            "gencos": [
                {
                    "id": g.id,
                    "capacity": g.capacity,
                    "marginal_cost": g.marginal_cost,
                    "fixed_cost": g.fixed_cost,
                }
                for g in self.gencos
            ],
            "hourly_demand": list(self.profile.hourly_demand),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "MarketDataset":
        known = {"name", "price_cap", "n_actions", "gencos", "hourly_demand"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown dataset key: {sorted(unknown)[0]}")
        for key in ("gencos", "hourly_demand"):
            if key not in raw:
                raise ValueError(f"dataset is missing required key: {key}")
        gencos = []
        for i, entry in enumerate(raw["gencos"]):
            extra = set(entry) - {"id", "capacity", "marginal_cost", "fixed_cost"}
            if extra:
                raise ValueError(f"gencos[{i}]: unknown key {sorted(extra)[0]}")
            try:
                gencos.append(
                    GencoSpec(
                        id=int(entry["id"]),
                        capacity=float(entry["capacity"]),
                        marginal_cost=float(entry["marginal_cost"]),
                        fixed_cost=float(entry["fixed_cost"]),
                    )
                )
            except KeyError as exc:
                raise ValueError(f"gencos[{i}] is missing key: {exc.args[0]}") from None
        return cls(
            gencos=gencos,
            profile=LoadProfile([float(d) for d in raw["hourly_demand"]]),
            price_cap=float(raw.get("price_cap", DEFAULT_PRICE_CAP)),
            n_actions=int(raw.get("n_actions", 21)),
            name=str(raw.get("name", "unnamed")),
        )


def load_dataset(path) -> MarketDataset:
    """Parse and validate a market dataset JSON file."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"dataset file {path} is not valid JSON: {exc}") from None
    return MarketDataset.from_dict(raw)


def default_dataset() -> MarketDataset:
    """The bundled 6-generator dataset (illustrative stand-in numbers)."""
    text = resources.files("qbidsim").joinpath("data/default_market.json").read_text()
    return MarketDataset.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Bidding and clearing
# ---------------------------------------------------------------------------


def action_to_bid(spec: GencoSpec, action: int, n_actions: int, price_cap: float = DEFAULT_PRICE_CAP) -> Bid:
    """Grid point ``action`` on the price axis from marginal cost up to the cap.

    Action 0 is a truthful bid at marginal cost; the last action bids the
    cap.  Quantity is always the full capacity (price-only bidding).
    """
    if n_actions < 2:
        raise ValueError(f"n_actions must be >= 2, got {n_actions}")
    if not 0 <= action < n_actions:
        raise ValueError(f"action {action} out of range [0, {n_actions})")
    price = spec.marginal_cost + (action / (n_actions - 1)) * (price_cap - spec.marginal_cost)
    return Bid(genco=spec.id, price=price, quantity=spec.capacity)


def _validate_bids(bids, specs, price_cap):
    if not bids:
        raise ValueError("bids must be non-empty")
    by_id = {spec.id: spec for spec in specs}
    for bid in bids:
        if bid.genco not in by_id:
            raise ValueError(f"bid references unknown genco {bid.genco}")
        if not 0 <= bid.price <= price_cap:
            raise ValueError(f"bid price {bid.price} outside [0, {price_cap}]")
        if not 0 < bid.quantity <= by_id[bid.genco].capacity + 1e-9:
            raise ValueError(
                f"bid quantity {bid.quantity} outside (0, {by_id[bid.genco].capacity}]"
            )


def clear_uniform_price(bids, demand: float, specs, price_cap: float = DEFAULT_PRICE_CAP) -> ClearingResult:
    """Merit-order clearing with pro-rata ties and scarcity pricing at the cap."""
    _validate_bids(bids, specs, price_cap)
    if demand < 0:
        raise ValueError(f"demand must be >= 0, got {demand}")
    n = len(specs)
    dispatch = np.zeros(n)
    if demand == 0:
        price = 0.0
    elif demand > sum(b.quantity for b in bids):
        for bid in bids:
            dispatch[bid.genco] += bid.quantity
        price = price_cap
    else:
        remaining = float(demand)
        price = 0.0
        by_price: dict[float, list[Bid]] = {}
        for bid in bids:
            by_price.setdefault(bid.price, []).append(bid)
        for level in sorted(by_price):
            group = by_price[level]
            group_quantity = sum(b.quantity for b in group)
            if group_quantity <= remaining:
                for bid in group:
                    dispatch[bid.genco] += bid.quantity
                remaining -= group_quantity
            else:
                share = remaining / group_quantity
                for bid in group:
                    dispatch[bid.genco] += bid.quantity * share
                remaining = 0.0
            price = level
            if remaining <= 0.0:
                break
    marginal_costs = np.array([s.marginal_cost for s in specs])
    fixed_costs = np.array([s.fixed_cost for s in specs])
    profit = (price - marginal_costs) * dispatch - fixed_costs
    return ClearingResult(clearing_price=price, dispatch=dispatch, profit=profit)


def actual_cost_bids(specs) -> list[Bid]:
    """Truthful offers: every generator bids its marginal cost, full capacity."""
    return [Bid(genco=s.id, price=s.marginal_cost, quantity=s.capacity) for s in specs]


def env_step(state: MarketState, joint_actions, specs, profile: LoadProfile,
             n_actions: int = 21, price_cap: float = DEFAULT_PRICE_CAP):
    """Advance the 24-hour episode by one hour.

    Returns (next_state, rewards, done); rewards are per-generator profits
    for the hour just cleared.
    """
    next_state, rewards, done, _ = _env_step_with_result(
        state, joint_actions, specs, profile, n_actions, price_cap
    )
    return next_state, rewards, done


def _env_step_with_result(state, joint_actions, specs, profile, n_actions, price_cap):
    if not 0 <= state.hour < HOURS_PER_DAY:
        raise ValueError(f"hour {state.hour} out of range")
    if len(joint_actions) != len(specs):
        raise ValueError(f"expected {len(specs)} actions, got {len(joint_actions)}")
    bids = [
        action_to_bid(spec, int(action), n_actions, price_cap)
        for spec, action in zip(specs, joint_actions)
    ]
    result = clear_uniform_price(bids, state.demand, specs, price_cap)
    next_hour = state.hour + 1
    done = next_hour == HOURS_PER_DAY
    next_state = MarketState(
        hour=next_hour if not done else 0,
        demand=profile[next_hour if not done else 0],
    )
    return next_state, result.profit.copy(), done, result


class DayAheadMarket:
    """Stateless convenience wrapper binding a dataset to the episode functions."""

    def __init__(self, dataset: MarketDataset):
        self.dataset = dataset

    def reset(self) -> MarketState:
        return MarketState(hour=0, demand=self.dataset.profile[0])

    def step(self, state: MarketState, joint_actions):
        return _env_step_with_result(
            state,
            joint_actions,
            self.dataset.gencos,
            self.dataset.profile,
            self.dataset.n_actions,
            self.dataset.price_cap,
        )


def daily_metrics(results) -> tuple[float, float, float]:
    """(clearing price at 06:00, at 18:00, summed profit of all units all day)."""
    results = list(results)
    if len(results) != HOURS_PER_DAY:
        raise ValueError(f"expected {HOURS_PER_DAY} clearing results, got {len(results)}")
    total = float(sum(r.profit.sum() for r in results))
    return results[6].clearing_price, results[18].clearing_price, total


def actual_cost_day(dataset: MarketDataset) -> list[ClearingResult]:
    """Clear every hour of the day under truthful marginal-cost bids."""
    bids = actual_cost_bids(dataset.gencos)
    return [
        clear_uniform_price(bids, dataset.profile[h], dataset.gencos, dataset.price_cap)
        for h in range(HOURS_PER_DAY)
    ]

"""Cross-run comparison tables and figure data extracted from reports."""

from __future__ import annotations

import math

METRICS = [
    ("mc_s_0600", "MC_S@06"),
    ("mc_s_1800", "MC_S@18"),
    ("r_s", "R_S"),
    ("mc_a_0600", "MC_A@06"),
    ("mc_a_1800", "MC_A@18"),
    ("r_a", "R_A"),
    ("episodes", "episodes"),
    ("entropy", "entropy"),
]


def _metric_values(report: dict) -> dict:
    entropies = report["action_entropy"]
    return {
        "mc_s_0600": report["mc_s_0600"],
        "mc_s_1800": report["mc_s_1800"],
        "r_s": report["r_s"],
        "mc_a_0600": report["mc_a_0600"],
        "mc_a_1800": report["mc_a_1800"],
        "r_a": report["r_a"],
        "episodes": float(report["episodes_to_converge"]),
        "entropy": sum(entropies) / len(entropies),
    }


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def comparison_table(reports: list[dict]) -> tuple[str, str]:
    """Aggregate reports into (csv, markdown): one row per backend, mean +- std.

    All reports must come from the same dataset; mixing is refused because
    the scenario columns would not be comparable.
    """
    if not reports:
        raise ValueError("no reports to compare")
    first_dataset = reports[0]["dataset"]
    for report in reports[1:]:
        if report["dataset"] != first_dataset:
            raise ValueError("reports mix different datasets")

    backends = sorted({r["backend"] for r in reports}, key=lambda b: ("mlp", "hybrid").index(b)
                      if b in ("mlp", "hybrid") else 2)
    rows = []
    for backend in backends:
        group = [_metric_values(r) for r in reports if r["backend"] == backend]
        stats = {key: _mean_std([g[key] for g in group]) for key, _ in METRICS}
        rows.append((backend, len(group), stats))

    csv_lines = [
        "backend,runs,"
        + ",".join(f"{key}_mean,{key}_std" for key, _ in METRICS)
    ]
    for backend, count, stats in rows:
        cells = [backend, str(count)]
        for key, _ in METRICS:
            mean, std = stats[key]
            cells.append(f"{mean:.17g}")
            cells.append(f"{std:.17g}")
        csv_lines.append(",".join(cells))
    csv_text = "\n".join(csv_lines) + "\n"

    md_lines = [
        "| backend | runs | " + " | ".join(label for _, label in METRICS) + " |",
        "|" + "---|" * (len(METRICS) + 2),
    ]
    for backend, count, stats in rows:
        cells = [backend, str(count)]
        for key, _ in METRICS:
            mean, std = stats[key]
            cells.append(f"{mean:.6g} ± {std:.3g}")
        md_lines.append("| " + " | ".join(cells) + " |")
    md_text = "\n".join(md_lines) + "\n"
    return csv_text, md_text


def action_price(dataset: dict, genco: int, action: int) -> float:
    """Bid price of an action index on a generator's price grid."""
    spec = dataset["gencos"][genco]
    span = dataset["price_cap"] - spec["marginal_cost"]
    return spec["marginal_cost"] + (action / (dataset["n_actions"] - 1)) * span


def plot_points(report: dict, agent: int, hour: int):
    """(state-action points, state-reward points) for one agent and hour.

    Points are (x, y, count) with x the hourly demand in MW and y either the
    bid price in USD/MWh or the realized hourly profit in USD.
    """
    sa_tables = report["state_action_freq"]
    sr_tables = report["state_reward_freq"]
    if not 0 <= agent < len(sa_tables):
        raise ValueError(f"agent {agent} out of range [0, {len(sa_tables)})")
    if not 0 <= hour < 24:
        raise ValueError(f"hour {hour} out of range [0, 24)")
    dataset = report["dataset"]
    demand = dataset["hourly_demand"][hour]
    sa_points = [
        (demand, action_price(dataset, agent, entry["action"]), entry["count"])
        for entry in sa_tables[agent]
        if entry["hour"] == hour
    ]
    sr_points = [
        (demand, entry["reward"], entry["count"])
        for entry in sr_tables[agent]
        if entry["hour"] == hour
    ]
    if not sa_points or not sr_points:
        raise ValueError(f"no recorded visits for agent {agent} at hour {hour}")
    return sa_points, sr_points

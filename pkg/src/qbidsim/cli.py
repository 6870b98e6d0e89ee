"""Command-line front end: a thin client of the experiment service.

By default requests are served by an in-process application instance, so no
server needs to be running; pass ``--server URL`` to talk to a remote
``qbidsim serve`` instead.  All computation happens service-side; the CLI
validates inputs, ships requests, and writes the returned artifacts to disk.

Subcommands: run, compare, plot, bench, serve.  Exit code 2 flags invalid
configuration with a message naming the offending key or path.

The environment variable ``QBIDSIM_MAX_PARALLEL`` caps how many (backend,
seed) runs are in flight at once (default 1, i.e. sequential).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from pydantic import ValidationError

CONFIG_SECTIONS = ("market", "trainer", "vqc", "run")
RUN_KEYS = ("seeds", "backends", "out_dir")


class ConfigError(Exception):
    """Invalid manifest input; maps to exit code 2."""


def _make_client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import create_app

    return TestClient(create_app())


def _load_json(path, what: str) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{what}: path '{path}' does not exist")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what}: '{path}' is not valid JSON: {exc}") from None


def _validation_error_message(prefix: str, exc: ValidationError) -> str:
    first = exc.errors()[0]
    loc = ".".join(str(part) for part in first["loc"])
    where = f"{prefix}.{loc}" if loc else prefix
    return f"{where}: {first['msg']}"


def _parse_config(raw: dict):
    from .service import schemas

    unknown = set(raw) - set(CONFIG_SECTIONS)
    if unknown:
        raise ConfigError(f"config: unknown section '{sorted(unknown)[0]}'")
    run_section = raw.get("run", {})
    if not isinstance(run_section, dict):
        raise ConfigError("config: run section must be an object")
    unknown = set(run_section) - set(RUN_KEYS)
    if unknown:
        raise ConfigError(f"config: run.{sorted(unknown)[0]} is not a recognized key")
    sections = {}
    for name, model in (
        ("market", schemas.MarketOverridesModel),
        ("trainer", schemas.TrainerModel),
        ("vqc", schemas.VqcModel),
    ):
        try:
            sections[name] = model(**raw.get(name, {}))
        except ValidationError as exc:
            raise ConfigError(
                "config error: " + _validation_error_message(f"config.{name}", exc)
            ) from None
    return sections["market"], sections["trainer"], sections["vqc"], run_section


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"config: seeds '{text}' must be a comma-separated integer list") from None


def _resolve_backends(choice) -> list[str]:
    if choice in (None, "both"):
        return ["mlp", "hybrid"]
    if choice in ("mlp", "hybrid"):
        return [choice]
    raise ConfigError(f"config: backend '{choice}' must be mlp, hybrid, or both")


def _fetch_dataset(args, client) -> dict:
    if args.dataset:
        return _load_json(args.dataset, "dataset")
    return client.get("/dataset/default").json()


def _canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _history_csv(history: list[dict]) -> str:
    if not history:
        return "episode,total,epsilon\n"
    n_agents = len(history[0]["rewards"])
    header = "episode," + ",".join(f"reward_g{g}" for g in range(n_agents)) + ",total,epsilon"
    lines = [header]
    for row in history:
        cells = [str(row["episode"])]
        cells += [f"{value:.17g}" for value in row["rewards"]]
        cells.append(f"{row['total']:.17g}")
        cells.append(f"{row['epsilon']:.17g}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _post(client, route: str, payload: dict) -> dict:
    response = client.post(route, json=payload)
    if response.status_code == 422:
        detail = response.json().get("detail")
        if isinstance(detail, list) and detail:
            loc = ".".join(str(p) for p in detail[0].get("loc", []) if p != "body")
            raise ConfigError(f"config error: {loc}: {detail[0].get('msg')}")
        raise ConfigError(f"config error: {detail}")
    if response.status_code >= 400:
        detail = response.json().get("detail", response.text)
        raise ConfigError(str(detail))
    return response.json()


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    raw_config = _load_json(args.config, "config") if args.config else {}
    market_overrides, trainer, vqc, run_section = _parse_config(raw_config)

    client = _make_client(args.server)
    dataset = _fetch_dataset(args, client)
    if market_overrides.n_actions is not None:
        dataset["n_actions"] = market_overrides.n_actions
    if market_overrides.price_cap is not None:
        dataset["price_cap"] = market_overrides.price_cap

    if args.seeds:
        seeds = _parse_seeds(args.seeds)
    else:
        seeds = [int(s) for s in run_section.get("seeds", [0])]
    if not seeds:
        raise ConfigError("config: run.seeds must be non-empty")
    if args.backend:
        backends = _resolve_backends(args.backend)
    elif run_section.get("backends"):
        backends = []
        for entry in run_section["backends"]:
            for backend in _resolve_backends(entry):
                if backend not in backends:
                    backends.append(backend)
    else:
        backends = ["mlp", "hybrid"]

    out_dir = Path(args.out or run_section.get("out_dir", "runs"))
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(backend, seed) for backend in backends for seed in seeds]
    payload_base = {
        "dataset": dataset,
        "trainer": trainer.model_dump(),
        "vqc": vqc.model_dump(),
    }

    def execute(job):
        backend, seed = job
        job_client = _make_client(args.server)
        payload = dict(payload_base, backend=backend, seed=seed)
        body = _post(job_client, "/experiments", payload)
        return job, body

    max_parallel = max(1, int(os.environ.get("QBIDSIM_MAX_PARALLEL", "1")))
    if max_parallel > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=max_parallel) as pool:
            outcomes = list(pool.map(execute, jobs))
    else:
        outcomes = [execute(job) for job in jobs]

    for (backend, seed), body in outcomes:
        stem = f"{backend}_seed{seed}"
        (out_dir / f"{stem}_report.json").write_text(_canonical_json(body["report"]))
        (out_dir / f"{stem}_history.csv").write_text(_history_csv(body["history"]))
        report = body["report"]
        status = "converged" if report["converged"] else "did NOT converge"
        print(
            f"{stem}: {status} after {report['episodes_to_converge']} episodes; "
            f"R_S={report['r_s']:.0f} R_A={report['r_a']:.0f} "
            f"MC_S@18={report['mc_s_1800']:.1f} MC_A@18={report['mc_a_1800']:.1f}"
        )
    print(f"wrote {2 * len(jobs)} files to {out_dir}")
    return 0


def cmd_compare(args) -> int:
    reports = [_load_json(path, "report") for path in args.reports]
    client = _make_client(args.server)
    body = _post(client, "/compare", {"reports": reports})
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "comparison.csv").write_text(body["table_csv"])
    (out_dir / "comparison.md").write_text(body["table_markdown"])
    print(body["table_markdown"], end="")
    print(f"wrote comparison.csv and comparison.md to {out_dir}")
    return 0


def cmd_plot(args) -> int:
    report = _load_json(args.report, "report")
    client = _make_client(args.server)
    body = _post(client, "/plots", {"report": report, "agent": args.agent, "hour": args.hour})
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"agent{args.agent}_hour{args.hour:02d}"
    sa_path = out_dir / f"{stem}_state_action.svg"
    sr_path = out_dir / f"{stem}_state_reward.svg"
    sa_path.write_text(body["state_action_svg"])
    sr_path.write_text(body["state_reward_svg"])
    print(f"wrote {sa_path} and {sr_path}")
    return 0


def cmd_bench(args) -> int:
    client = _make_client(args.server)
    payload = {"backend": args.backend, "calls": args.calls}
    if args.dataset:
        payload["dataset"] = _load_json(args.dataset, "dataset")
    body = _post(client, "/bench", payload)
    print(json.dumps(body, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbidsim",
        description="Day-ahead market bidding simulator with Q-learning generator agents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train agents and write reports + histories")
    run.add_argument("--config", help="JSON config (sections: market, trainer, vqc, run)")
    run.add_argument("--dataset", help="market dataset JSON (default: bundled dataset)")
    run.add_argument("--seeds", help="comma-separated seeds, e.g. 0,1,2")
    run.add_argument("--backend", choices=["mlp", "hybrid", "both"])
    run.add_argument("--out", help="output directory (default: runs)")
    run.add_argument("--server", help="remote service URL (default: in-process)")
    run.set_defaults(func=cmd_run)

    compare = sub.add_parser("compare", help="aggregate reports into a comparison table")
    compare.add_argument("reports", nargs="+", help="report JSON files")
    compare.add_argument("--out", default=".", help="output directory")
    compare.add_argument("--server", help="remote service URL")
    compare.set_defaults(func=cmd_compare)

    plot = sub.add_parser("plot", help="render state-action / state-reward SVG scatters")
    plot.add_argument("report", help="report JSON file")
    plot.add_argument("--agent", type=int, required=True)
    plot.add_argument("--hour", type=int, required=True)
    plot.add_argument("--out", default=".", help="output directory")
    plot.add_argument("--server", help="remote service URL")
    plot.set_defaults(func=cmd_plot)

    bench = sub.add_parser("bench", help="time single-state Q-network forward passes")
    bench.add_argument("--backend", choices=["mlp", "hybrid"], default="hybrid")
    bench.add_argument("--calls", type=int, default=200)
    bench.add_argument("--dataset", help="market dataset JSON")
    bench.add_argument("--server", help="remote service URL")
    bench.set_defaults(func=cmd_bench)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        message = str(exc)
        if not message.startswith("config error"):
            message = f"config error: {message}"
        print(message, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

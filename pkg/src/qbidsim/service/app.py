"""FastAPI application exposing experiment runs, comparisons, and figures."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, marl, market, reporting, svgplot
from . import schemas


def _dataset_from_model(model: schemas.DatasetModel) -> market.MarketDataset:
    try:
        return market.MarketDataset.from_dict(model.model_dump())
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=f"dataset: {exc}") from None


def _trainer_config(req: schemas.RunRequest) -> marl.TrainerConfig:
    config = marl.TrainerConfig(
        backend=req.backend,
        seed=req.seed,
        vqc_depth=req.vqc.depth,
        **req.trainer.model_dump(),
    )
    try:
        config.validate()
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=f"trainer: {exc}") from None
    return config


def create_app() -> FastAPI:
    app = FastAPI(
        title="qbidsim",
        description="Day-ahead electricity market bidding simulator with "
        "classical and quantum-circuit Q-learning agents.",
        version=__version__,
    )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/dataset/default", response_model=schemas.DatasetModel)
    def dataset_default():
        return schemas.DatasetModel(**market.default_dataset().to_dict())

    @app.post("/experiments", response_model=schemas.RunResponse)
    def run_experiment(req: schemas.RunRequest):
        dataset = _dataset_from_model(req.dataset)
        config = _trainer_config(req)
        report, history = marl.run_experiment_with_history(config, dataset)
        return schemas.RunResponse(
            report=schemas.ReportModel(**report.to_dict()),
            history=[schemas.HistoryRow(**row) for row in history],
        )

    @app.post("/compare", response_model=schemas.CompareResponse)
    def compare(req: schemas.CompareRequest):
        try:
            csv_text, md_text = reporting.comparison_table(
                [r.model_dump() for r in req.reports]
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return schemas.CompareResponse(table_csv=csv_text, table_markdown=md_text)

    @app.post("/plots", response_model=schemas.PlotResponse)
    def plots(req: schemas.PlotRequest):
        report = req.report.model_dump()
        try:
            sa_points, sr_points = reporting.plot_points(report, req.agent, req.hour)
            backend = report["backend"]
            sa_svg = svgplot.frequency_scatter_svg(
                sa_points,
                x_label="demand (MW)",
                y_label="bid price (USD/MWh)",
                title=f"{backend} agent {req.agent}: bids at hour {req.hour:02d}:00",
            )
            sr_svg = svgplot.frequency_scatter_svg(
                sr_points,
                x_label="demand (MW)",
                y_label="hourly profit (USD)",
                title=f"{backend} agent {req.agent}: rewards at hour {req.hour:02d}:00",
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return schemas.PlotResponse(state_action_svg=sa_svg, state_reward_svg=sr_svg)

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench(req: schemas.BenchRequest):
        dataset = (
            _dataset_from_model(req.dataset) if req.dataset is not None else market.default_dataset()
        )
        config = marl.TrainerConfig(
            backend=req.backend, hidden_size=req.hidden_size, vqc_depth=req.vqc_depth
        )
        out = marl.benchmark_forward(config, dataset, calls=req.calls)
        return schemas.BenchResponse(**out)

    return app

"""End-to-end orchestration: ingest, split, train, disturb, score.

Scenario evaluation may fan out to a thread pool; results are reduced
in fixed catalog order so the report is identical for any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .adapter import AdapterClient, ExternalForecaster
from .config import RunConfig
from .disturb import all_kinds, make_context
from .errors import ConfigError, FileNotFound, StresscastError
from .forecast import TRAINABLE_KINDS, TrainableForecaster, build_forecaster, save_model, train
from .ingest import RawDataset, classify_sensors, drop_missing, load_table
from .pipeline import (
    annotate_train_stats,
    apply_standardizer,
    fit_standardizer,
    sample_windows,
    split_time,
)
from .score import (
    RobustnessReport,
    baseline_losses,
    build_report,
    evaluate_scenario,
)


@contextmanager
def _stage(name: str):
    """Tag any engine error with the pipeline stage it came from."""
    try:
        yield
    except StresscastError as err:
        if getattr(err, "stage", None) is None:
            err.stage = name
        raise


def _load_dataset(config: RunConfig) -> RawDataset:
    ds = config.dataset
    if ds.path is None:
        raise ConfigError("dataset.path is required")
    path = Path(ds.path)
    if not path.exists():
        raise FileNotFound(f"dataset file does not exist: {path}")
    return load_table(
        path,
        delimiter=ds.delimiter,
        timestamp_column=ds.timestamp_column,
        fmt=ds.format,
        name=ds.name,
    )


def run(config: RunConfig, dataset: RawDataset | None = None) -> RobustnessReport:
    """Execute one dataset/model robustness evaluation.

    A pre-loaded dataset may be passed directly (tests, in-memory data);
    otherwise it is read from config.dataset.path.
    """
    timing: dict[str, float] = {}
    t_total = time.perf_counter()

    with _stage("ingest"):
        t0 = time.perf_counter()
        if dataset is None:
            dataset = _load_dataset(config)
        if config.dataset.drop_missing:
            dataset = drop_missing(dataset)
        metas = classify_sensors(dataset, config.dataset.max_discrete_cardinality)
        timing["ingest_seconds"] = time.perf_counter() - t0

    with _stage("split"):
        span = config.window.t + config.window.horizon
        train_seg, val_seg, test_seg = split_time(
            dataset.rows, config.split, min_segment_rows=span
        )

    with _stage("standardize"):
        std = fit_standardizer(dataset.values, train_seg)
        table = apply_standardizer(std, dataset.values)
        annotate_train_stats(metas, std)

    with _stage("windows"):
        t_axis = config.window.t
        horizon = config.window.horizon
        train_windows = sample_windows(
            table, train_seg, t_axis, horizon, config.sampling.train_windows, config.seed
        )
        val_windows = sample_windows(
            table, val_seg, t_axis, horizon, config.sampling.val_windows, config.seed
        )
        test_windows = sample_windows(
            table, test_seg, t_axis, horizon, config.sampling.test_windows, config.seed
        )

    client = None
    try:
        with _stage("model"):
            t0 = time.perf_counter()
            if config.model.kind == "External":
                client = AdapterClient(
                    config.model.adapter_cmd,
                    t_axis,
                    horizon,
                    dataset.n_sensors,
                    model_config=dict(config.model.hyperparams),
                    timeout=config.model.adapter_timeout,
                )
                model = ExternalForecaster(client)
                model_name = f"External({client.name})"
            else:
                model = build_forecaster(
                    config.model.kind,
                    t_axis,
                    horizon,
                    dataset.n_sensors,
                    hyperparams=config.model.hyperparams,
                    seed=config.seed,
                )
                model_name = config.model.kind
            if isinstance(model, TrainableForecaster):
                train(model, train_windows, val_windows, config.train)
            timing["model_seconds"] = time.perf_counter() - t0

        with _stage("baseline"):
            val_losses = baseline_losses(model, val_windows)
            test_losses = baseline_losses(model, test_windows)
            baseline_val_mse = float(val_losses.mean())
            baseline_test_mse = float(test_losses.mean())

        with _stage("scenarios"):
            t0 = time.perf_counter()
            grid = config.grid
            contexts = [
                make_context(metas, std, kind, config.seed, config.disturbances)
                for kind in all_kinds()
            ]

            def evaluate(ctx):
                return evaluate_scenario(
                    model,
                    ctx,
                    test_windows,
                    grid,
                    config.metric,
                    loss_original=test_losses,
                    keep_losses=config.keep_per_sample_losses,
                )

            if config.workers > 1:
                with ThreadPoolExecutor(max_workers=config.workers) as pool:
                    scenarios = list(pool.map(evaluate, contexts))
            else:
                scenarios = [evaluate(ctx) for ctx in contexts]
            timing["scenarios_seconds"] = time.perf_counter() - t0
    finally:
        if client is not None:
            client.shutdown()

    with _stage("report"):
        timing["total_seconds"] = time.perf_counter() - t_total
        timing["created_unix"] = time.time()
        report = build_report(
            dataset=dataset.name,
            model=model_name,
            seed=config.seed,
            config=config.to_dict(),
            baseline_val_mse=baseline_val_mse,
            baseline_test_mse=baseline_test_mse,
            scenarios=scenarios,
            timing=timing,
        )
        if config.output.model_file and isinstance(model, TrainableForecaster):
            save_model(model, config.output.model_file)
    return report

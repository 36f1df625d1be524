"""Relative-performance scoring and robustness aggregation.

Per scenario, the engine sweeps a severity grid, computes the ratio of
original to disturbed loss per window (epsilon-regularized, unclamped),
averages over windows, and integrates over severity with a right-Riemann
sum. The overall score multiplies the per-scenario scores so a complete
failure in any one scenario drives the product toward zero.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .disturb import DisturbanceContext, DisturbanceKind, apply_disturbance
from .errors import (
    ConfigError,
    NoApplicableScenario,
    NonFiniteInput,
    NonFiniteLoss,
    SchemaMismatch,
    ShapeMismatch,
)
from .pipeline import WindowSample

REPORT_SCHEMA_VERSION = 1

METRIC_KINDS = ("MSE",)


@dataclass(frozen=True)
class MetricSpec:
    kind: str = "MSE"
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ConfigError(f"unknown metric kind {self.kind!r}; available: {METRIC_KINDS}")
        if not (0.0 < self.epsilon < 1e-2):
            raise ConfigError(f"epsilon must lie in (0, 1e-2), got {self.epsilon}")


@dataclass(frozen=True)
class SeverityGrid:
    """Ascending severities {step, 2*step, ..., 1.0}; zero is omitted.

    At severity zero the disturbed window equals the original bit for bit,
    so the relative performance there is identically 1 and adds nothing.
    """

    step: float = 0.01

    def __post_init__(self):
        if not (0.0 < self.step <= 1.0):
            raise ConfigError(f"severity step must lie in (0, 1], got {self.step}")
        m = round(1.0 / self.step)
        if m < 1 or abs(m * self.step - 1.0) > 1e-9:
            raise ConfigError(f"1/step must be an integer, got step={self.step}")

    @property
    def m(self) -> int:
        return round(1.0 / self.step)

    @property
    def points(self) -> np.ndarray:
        m = self.m
        return np.arange(1, m + 1, dtype=np.float64) / m


def mse(Y: np.ndarray, Yhat: np.ndarray) -> float:
    """Mean of squared elementwise differences."""
    Y = np.asarray(Y, dtype=np.float64)
    Yhat = np.asarray(Yhat, dtype=np.float64)
    if Y.shape != Yhat.shape:
        raise ShapeMismatch(f"target shape {Y.shape} != prediction shape {Yhat.shape}")
    diff = Y - Yhat
    return float(np.mean(diff * diff))


def per_window_mse(YB: np.ndarray, PB: np.ndarray) -> np.ndarray:
    """MSE per window for stacked targets and predictions [B, t', n]."""
    if YB.shape != PB.shape:
        raise ShapeMismatch(f"target shape {YB.shape} != prediction shape {PB.shape}")
    diff = YB - PB
    return np.mean(diff * diff, axis=(1, 2))


def relative_performance(loss_orig, loss_dist, eps: float = 1e-6):
    """(loss_orig + eps) / (loss_dist + eps); above 1 means the disturbance helped."""
    loss_orig = np.asarray(loss_orig, dtype=np.float64)
    loss_dist = np.asarray(loss_dist, dtype=np.float64)
    if not (np.isfinite(loss_orig).all() and np.isfinite(loss_dist).all()):
        raise NonFiniteLoss("losses must be finite to form a relative performance")
    if (loss_orig < 0).any() or (loss_dist < 0).any():
        raise NonFiniteLoss("losses must be non-negative")
    out = (loss_orig + eps) / (loss_dist + eps)
    if out.ndim == 0:
        return float(out)
    return out


def score_from_mu_rel(mu_rel: np.ndarray, grid: SeverityGrid) -> float:
    """Right-Riemann severity integral of mean relative performance.

    Accepts a per-severity curve [S] or a per-severity, per-window matrix
    [S, N] (averaged over windows first). S must equal the grid size.
    """
    mu = np.asarray(mu_rel, dtype=np.float64)
    curve = mu.mean(axis=1) if mu.ndim == 2 else mu
    if curve.ndim != 1 or curve.shape[0] != grid.m:
        raise ShapeMismatch(f"expected {grid.m} severity entries, got shape {mu.shape}")
    return float(curve.sum() * grid.step)


@dataclass
class ScenarioResult:
    kind: str
    applicable: bool
    affected_sensors: tuple[int, ...]
    severities: tuple[float, ...] = ()
    mean_relative_performance: tuple[float, ...] | None = None
    robustness: float | None = None
    loss_original: np.ndarray | None = None
    loss_disturbed: np.ndarray | None = None

    def to_dict(self, keep_losses: bool = False) -> dict:
        out = {
            "kind": self.kind,
            "applicable": self.applicable,
            "affected_sensors": list(self.affected_sensors),
            "severities": [float(s) for s in self.severities],
            "mean_relative_performance": (
                None
                if self.mean_relative_performance is None
                else [float(v) for v in self.mean_relative_performance]
            ),
            "robustness": None if self.robustness is None else float(self.robustness),
        }
        if keep_losses and self.loss_original is not None:
            out["loss_original"] = [float(v) for v in self.loss_original]
            out["loss_disturbed"] = [[float(v) for v in row] for row in self.loss_disturbed]
        return out


def baseline_losses(model, windows: list[WindowSample]) -> np.ndarray:
    """Per-window loss of the model on undisturbed inputs."""
    XB = np.stack([w.X for w in windows])
    YB = np.stack([w.Y for w in windows])
    return per_window_mse(YB, model.predict_batch(XB))


def _diagnose_nonfinite(xs: list[np.ndarray], kind: str, severity: float) -> None:
    for index, X_d in enumerate(xs):
        if not np.isfinite(X_d).all():
            raise NonFiniteInput(
                f"scenario {kind} produced non-finite inputs for sample {index} "
                f"at severity {severity:g}"
            )


def evaluate_scenario(
    model,
    ctx: DisturbanceContext,
    windows: list[WindowSample],
    grid: SeverityGrid,
    metric: MetricSpec = MetricSpec(),
    loss_original: np.ndarray | None = None,
    keep_losses: bool = False,
) -> ScenarioResult:
    """Severity sweep for one scenario; per-window frozen draws are bound once.

    Original-input losses are computed once (or passed in when shared
    across scenarios). Every severity gets fresh predictions on the
    disturbed inputs, scored against the possibly shifted targets.
    """
    kind_label = ctx.kind.value
    severities = tuple(float(s) for s in grid.points)
    if not ctx.applicable:
        return ScenarioResult(kind=kind_label, applicable=False, affected_sensors=(), severities=severities)
    if not windows:
        raise ConfigError("scenario evaluation needs at least one window")

    bound = [ctx.bind(w) for w in windows]
    if loss_original is None:
        loss_original = baseline_losses(model, windows)
    loss_original = np.asarray(loss_original, dtype=np.float64)

    n_windows = len(windows)
    mu = np.empty((grid.m, n_windows))
    loss_matrix = np.empty((grid.m, n_windows)) if keep_losses else None

    for row, severity in enumerate(grid.points):
        xs = []
        ys = []
        for bctx, window in zip(bound, windows):
            disturbed = apply_disturbance(bctx, float(severity), window.X, window.Y)
            xs.append(disturbed.X_d)
            ys.append(disturbed.Y_d)
        try:
            preds = model.predict_batch(np.stack(xs))
        except NonFiniteInput:
            _diagnose_nonfinite(xs, kind_label, float(severity))
            raise
        loss_dist = per_window_mse(np.stack(ys), preds)
        mu[row] = relative_performance(loss_original, loss_dist, metric.epsilon)
        if keep_losses:
            loss_matrix[row] = loss_dist

    curve = mu.mean(axis=1)
    robustness = float(curve.sum() * grid.step)
    return ScenarioResult(
        kind=kind_label,
        applicable=True,
        affected_sensors=ctx.affected,
        severities=severities,
        mean_relative_performance=tuple(float(v) for v in curve),
        robustness=robustness,
        loss_original=loss_original if keep_losses else None,
        loss_disturbed=loss_matrix,
    )


def overall_robustness(scores) -> float:
    """Product of per-scenario robustness over applicable scenarios.

    Accepts a mapping kind -> score or an iterable of ScenarioResult;
    the fold order is the iteration order, kept fixed by callers.
    """
    if isinstance(scores, Mapping):
        values = [float(v) for v in scores.values()]
    else:
        values = [float(r.robustness) for r in scores if r.applicable]
    if not values:
        raise NoApplicableScenario("no applicable disturbance scenario for this dataset")
    product = 1.0
    for value in values:
        product *= value
    return product


@dataclass
class RobustnessReport:
    dataset: str
    model: str
    seed: int
    config: dict
    baseline_val_mse: float
    baseline_test_mse: float
    scenarios: list[ScenarioResult]
    overall: float
    timing: dict = field(default_factory=dict)
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self, keep_losses: bool = False) -> dict:
        return {
            "schema_version": self.schema_version,
            "dataset": self.dataset,
            "model": self.model,
            "seed": self.seed,
            "config": self.config,
            "baseline_val_mse": float(self.baseline_val_mse),
            "baseline_test_mse": float(self.baseline_test_mse),
            "scenarios": [s.to_dict(keep_losses=keep_losses) for s in self.scenarios],
            "overall_robustness": float(self.overall),
            "timing": dict(self.timing),
        }

    def to_json(self, keep_losses: bool = False) -> str:
        return json.dumps(self.to_dict(keep_losses=keep_losses), indent=2, sort_keys=True)


def build_report(
    dataset: str,
    model: str,
    seed: int,
    config: dict,
    baseline_val_mse: float,
    baseline_test_mse: float,
    scenarios: list[ScenarioResult],
    timing: dict | None = None,
) -> RobustnessReport:
    overall = overall_robustness(scenarios)
    check = 1.0
    for result in scenarios:
        if result.applicable:
            check *= result.robustness
    if abs(overall - check) >= 1e-12:
        raise ShapeMismatch("overall robustness does not match the product of scenario scores")
    return RobustnessReport(
        dataset=dataset,
        model=model,
        seed=seed,
        config=config,
        baseline_val_mse=float(baseline_val_mse),
        baseline_test_mse=float(baseline_test_mse),
        scenarios=scenarios,
        overall=overall,
        timing=dict(timing or {}),
    )


def validate_report_dict(payload: dict) -> dict:
    """Check the schema marker on a loaded report; returns the payload."""
    if not isinstance(payload, dict) or "schema_version" not in payload:
        raise SchemaMismatch("not a robustness report: missing schema_version")
    if payload["schema_version"] != REPORT_SCHEMA_VERSION:
        raise SchemaMismatch(
            f"report schema version {payload['schema_version']} unsupported "
            f"(expected {REPORT_SCHEMA_VERSION})"
        )
    return payload


def curves_rows(report: dict) -> list[tuple[str, float, float]]:
    """Flatten a report's severity curves for CSV export."""
    rows = []
    for scenario in report["scenarios"]:
        if not scenario["applicable"]:
            continue
        for severity, value in zip(scenario["severities"], scenario["mean_relative_performance"]):
            rows.append((scenario["kind"], float(severity), float(value)))
    return rows


def write_curves_csv(report: dict, path) -> None:
    import csv

    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scenario", "severity", "mean_relative_performance"])
        for kind, severity, value in curves_rows(report):
            writer.writerow([kind, repr(severity), repr(value)])


def aggregate_reports(payloads: list[dict]) -> list[dict]:
    """Per-model mean and population std of R and baseline losses across reports."""
    if not payloads:
        raise SchemaMismatch("aggregate needs at least one report")
    groups: dict[str, list[dict]] = {}
    for payload in payloads:
        validate_report_dict(payload)
        groups.setdefault(payload["model"], []).append(payload)
    rows = []
    for model in sorted(groups):
        reports = groups[model]
        r_values = np.array([p["overall_robustness"] for p in reports], dtype=np.float64)
        val_values = np.array([p["baseline_val_mse"] for p in reports], dtype=np.float64)
        test_values = np.array([p["baseline_test_mse"] for p in reports], dtype=np.float64)
        rows.append(
            {
                "model": model,
                "runs": len(reports),
                "mean_robustness": float(r_values.mean()),
                "std_robustness": float(r_values.std()),
                "mean_val_mse": float(val_values.mean()),
                "std_val_mse": float(val_values.std()),
                "mean_test_mse": float(test_values.mean()),
                "std_test_mse": float(test_values.std()),
            }
        )
    return rows

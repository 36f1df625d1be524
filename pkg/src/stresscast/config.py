"""Run configuration: one JSON document, defaults materialized on load.

Every field has a default so a minimal config only names the dataset;
the fully materialized snapshot is embedded in the report so a report
is sufficient to replay its run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .disturb import DisturbanceParams
from .errors import ConfigError
from .forecast import BUILTIN_KINDS, TrainConfig
from .mathutil import round_half_away
from .pipeline import DEFAULT_HORIZON, DEFAULT_T, SplitSpec
from .score import MetricSpec, SeverityGrid

MODEL_KINDS = BUILTIN_KINDS + ("External",)
DATASET_FORMATS = ("auto", "csv", "parquet")


def _section(raw: dict, name: str, allowed: tuple[str, ...]) -> dict:
    body = raw.get(name, {})
    if body is None:
        body = {}
    if not isinstance(body, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    unknown = set(body) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
    return body


def _count(value, label: str) -> int:
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{label} must be an integer, got {value!r}") from None
    if out != value or out < 1:
        raise ConfigError(f"{label} must be a positive integer, got {value!r}")
    return out


@dataclass(frozen=True)
class DatasetConfig:
    path: str | None = None
    name: str | None = None
    format: str = "auto"
    delimiter: str = ","
    timestamp_column: str | None = None
    max_discrete_cardinality: int = 12
    drop_missing: bool = True

    def __post_init__(self):
        if self.format not in DATASET_FORMATS:
            raise ConfigError(f"dataset.format must be one of {DATASET_FORMATS}, got {self.format!r}")
        if self.max_discrete_cardinality < 2:
            raise ConfigError("dataset.max_discrete_cardinality must be at least 2")


@dataclass(frozen=True)
class WindowConfig:
    t: int = DEFAULT_T
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        if self.t < 1 or self.horizon < 1:
            raise ConfigError("window.t and window.horizon must be positive")


@dataclass(frozen=True)
class SamplingConfig:
    train_windows: int = 2048
    val_windows: int = 512
    test_windows: int = 512


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "DLinear"
    hyperparams: dict = field(default_factory=dict)
    adapter_cmd: str | None = None
    adapter_timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.kind == "External" and not self.adapter_cmd:
            raise ConfigError("model.kind External requires model.adapter_cmd")
        if self.kind != "External" and self.adapter_cmd:
            raise ConfigError("model.adapter_cmd is only valid with model.kind External")
        if self.adapter_timeout <= 0:
            raise ConfigError("model.adapter_timeout must be positive")


@dataclass(frozen=True)
class OutputConfig:
    report: str = "report.json"
    curves_csv: str | None = None
    model_file: str | None = None


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    window: WindowConfig = field(default_factory=WindowConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    severity_step: float = 0.01
    disturbances: DisturbanceParams = field(default_factory=DisturbanceParams)
    metric: MetricSpec = field(default_factory=MetricSpec)
    seed: int = 0
    workers: int = 1
    keep_per_sample_losses: bool = False
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        SeverityGrid(self.severity_step)
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        k_max = round_half_away(self.disturbances.missing_frac_max * self.window.horizon)
        if k_max >= self.window.t:
            raise ConfigError(
                "missing_frac_max * horizon must round below t "
                f"(got {k_max} shifted rows for t={self.window.t})"
            )

    @property
    def grid(self) -> SeverityGrid:
        return SeverityGrid(self.severity_step)

    def to_dict(self) -> dict:
        return {
            "dataset": {
                "path": self.dataset.path,
                "name": self.dataset.name,
                "format": self.dataset.format,
                "delimiter": self.dataset.delimiter,
                "timestamp_column": self.dataset.timestamp_column,
                "max_discrete_cardinality": self.dataset.max_discrete_cardinality,
                "drop_missing": self.dataset.drop_missing,
            },
            "split": {
                "train_frac": self.split.train_frac,
                "val_frac": self.split.val_frac,
                "test_frac": self.split.test_frac,
                "purge_frac": self.split.purge_frac,
            },
            "window": {"t": self.window.t, "horizon": self.window.horizon},
            "sampling": {
                "train_windows": self.sampling.train_windows,
                "val_windows": self.sampling.val_windows,
                "test_windows": self.sampling.test_windows,
            },
            "model": {
                "kind": self.model.kind,
                "hyperparams": dict(self.model.hyperparams),
                "adapter_cmd": self.model.adapter_cmd,
                "adapter_timeout": self.model.adapter_timeout,
            },
            "train": {
                "batch_size": self.train.batch_size,
                "patience": self.train.patience,
                "max_epochs": self.train.max_epochs,
                "learning_rate": self.train.learning_rate,
                "adam_betas": list(self.train.adam_betas),
                "adam_eps": self.train.adam_eps,
            },
            "severity_step": self.severity_step,
            "disturbances": self.disturbances.to_dict(),
            "metric": {"kind": self.metric.kind, "epsilon": self.metric.epsilon},
            "seed": self.seed,
            "workers": self.workers,
            "keep_per_sample_losses": self.keep_per_sample_losses,
            "output": {
                "report": self.output.report,
                "curves_csv": self.output.curves_csv,
                "model_file": self.output.model_file,
            },
        }


_TOP_KEYS = (
    "dataset",
    "split",
    "window",
    "sampling",
    "model",
    "train",
    "severity_step",
    "disturbances",
    "metric",
    "seed",
    "workers",
    "keep_per_sample_losses",
    "output",
)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(_TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")

    ds = _section(raw, "dataset", ("path", "name", "format", "delimiter", "timestamp_column", "max_discrete_cardinality", "drop_missing"))
    sp = _section(raw, "split", ("train_frac", "val_frac", "test_frac", "purge_frac"))
    wi = _section(raw, "window", ("t", "horizon"))
    sa = _section(raw, "sampling", ("train_windows", "val_windows", "test_windows"))
    mo = _section(raw, "model", ("kind", "hyperparams", "adapter_cmd", "adapter_timeout"))
    tr = _section(raw, "train", ("batch_size", "patience", "max_epochs", "learning_rate", "adam_betas", "adam_eps"))
    di = _section(raw, "disturbances", ("offset_max", "noise_scale_max", "spike_magnitude", "hold_frac_max", "sampling_frac_max", "missing_frac_max", "affected_frac"))
    me = _section(raw, "metric", ("kind", "epsilon"))
    ou = _section(raw, "output", ("report", "curves_csv", "model_file"))

    seed = int(raw.get("seed", 0))
    try:
        dataset = DatasetConfig(
            path=ds.get("path"),
            name=ds.get("name"),
            format=ds.get("format", "auto"),
            delimiter=ds.get("delimiter", ","),
            timestamp_column=ds.get("timestamp_column"),
            max_discrete_cardinality=int(ds.get("max_discrete_cardinality", 12)),
            drop_missing=bool(ds.get("drop_missing", True)),
        )
        split = SplitSpec(
            train_frac=float(sp.get("train_frac", 0.70)),
            val_frac=float(sp.get("val_frac", 0.15)),
            test_frac=float(sp.get("test_frac", 0.15)),
            purge_frac=float(sp.get("purge_frac", 0.01)),
        )
        window = WindowConfig(
            t=_count(wi.get("t", DEFAULT_T), "window.t"),
            horizon=_count(wi.get("horizon", DEFAULT_HORIZON), "window.horizon"),
        )
        sampling = SamplingConfig(
            train_windows=_count(sa.get("train_windows", 2048), "sampling.train_windows"),
            val_windows=_count(sa.get("val_windows", 512), "sampling.val_windows"),
            test_windows=_count(sa.get("test_windows", 512), "sampling.test_windows"),
        )
        hyperparams = mo.get("hyperparams", {})
        if not isinstance(hyperparams, dict):
            raise ConfigError("model.hyperparams must be an object")
        model = ModelConfig(
            kind=mo.get("kind", "DLinear"),
            hyperparams=dict(hyperparams),
            adapter_cmd=mo.get("adapter_cmd"),
            adapter_timeout=float(mo.get("adapter_timeout", 60.0)),
        )
        betas = tr.get("adam_betas", (0.9, 0.999))
        if len(betas) != 2:
            raise ConfigError("train.adam_betas must have exactly two entries")
        train = TrainConfig(
            batch_size=_count(tr.get("batch_size", 64), "train.batch_size"),
            patience=_count(tr.get("patience", 5), "train.patience"),
            max_epochs=_count(tr.get("max_epochs", 100), "train.max_epochs"),
            learning_rate=float(tr.get("learning_rate", 1e-3)),
            seed=seed,
            adam_betas=(float(betas[0]), float(betas[1])),
            adam_eps=float(tr.get("adam_eps", 1e-8)),
        )
        disturbances = DisturbanceParams(
            offset_max=float(di.get("offset_max", 1.0)),
            noise_scale_max=float(di.get("noise_scale_max", 1.0)),
            spike_magnitude=float(di.get("spike_magnitude", 8.0)),
            hold_frac_max=float(di.get("hold_frac_max", 1.0)),
            sampling_frac_max=float(di.get("sampling_frac_max", 0.5)),
            missing_frac_max=float(di.get("missing_frac_max", 1.0)),
            affected_frac=float(di.get("affected_frac", 0.10)),
        )
        metric = MetricSpec(kind=me.get("kind", "MSE"), epsilon=float(me.get("epsilon", 1e-6)))
        output = OutputConfig(
            report=ou.get("report", "report.json"),
            curves_csv=ou.get("curves_csv"),
            model_file=ou.get("model_file"),
        )
        return RunConfig(
            dataset=dataset,
            split=split,
            window=window,
            sampling=sampling,
            model=model,
            train=train,
            severity_step=float(raw.get("severity_step", 0.01)),
            disturbances=disturbances,
            metric=metric,
            seed=seed,
            workers=_count(raw.get("workers", 1), "workers"),
            keep_per_sample_losses=bool(raw.get("keep_per_sample_losses", False)),
            output=output,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid config value: {err}") from err


def load_config(path) -> RunConfig:
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    return config_from_dict(raw)

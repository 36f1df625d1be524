"""Robustness benchmarking for multivariate time-series forecasters.

Inject severity-graded sensor disturbances into held-out forecasting
windows, measure the loss ratio against the undisturbed baseline, and
integrate over severity into per-scenario and overall robustness scores.
"""

from .config import RunConfig, config_from_dict, load_config
from .disturb import (
    DisturbanceContext,
    DisturbanceKind,
    DisturbanceParams,
    all_kinds,
    apply_disturbance,
    disturb_sample,
    make_context,
    select_affected,
)
from .errors import (
    AdapterCrashed,
    AdapterError,
    ConfigError,
    DataError,
    DivergenceDetected,
    HandshakeTimeout,
    NoApplicableScenario,
    ProtocolViolation,
    StresscastError,
)
from .forecast import (
    TrainConfig,
    build_forecaster,
    decompose_moving_average,
    load_model,
    save_model,
    train,
)
from .ingest import RawDataset, SensorKind, SensorMeta, classify_sensors, load_table, save_table
from .pipeline import (
    SegmentRole,
    SplitSpec,
    Standardizer,
    WindowSample,
    apply_standardizer,
    fit_standardizer,
    sample_windows,
    split_time,
)
from .runner import run
from .score import (
    MetricSpec,
    RobustnessReport,
    ScenarioResult,
    SeverityGrid,
    evaluate_scenario,
    mse,
    overall_robustness,
    relative_performance,
    score_from_mu_rel,
)
from .synth import make_synthetic

__version__ = "0.1.0"

"""The ten sensor-fault scenarios as severity-parameterized window transforms.

Each scenario maps (severity, X, Y) to a disturbed (X_d, Y_d). All
transforms act on standardized values, touch only the selected sensor
subset (MissingData shifts every sensor along the time axis instead),
keep the target untouched except for MissingData, and are the exact
identity at severity zero. Interval lengths follow L(s) = round(s * cap)
with per-scenario caps, rounded half away from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ConfigError, StresscastError
from .ingest import SensorKind, SensorMeta
from .mathutil import round_half_away
from .pipeline import Standardizer, WindowSample
from .rng import rng_for


class DisturbanceKind(str, Enum):
    DRIFT = "Drift"
    DYING_SIGNAL = "DyingSignal"
    NOISE = "Noise"
    FLAT_SENSOR = "FlatSensor"
    MISSING_DATA = "MissingData"
    FASTER_SAMPLING = "FasterSampling"
    SLOWER_SAMPLING = "SlowerSampling"
    OUTLIER = "Outlier"
    WRONG_DISCRETE_VALUE = "WrongDiscreteValue"
    OSCILLATING_SENSOR = "OscillatingSensor"


#: Scenarios acting on continuous sensors only.
CONTINUOUS_KINDS = frozenset(
    {
        DisturbanceKind.DRIFT,
        DisturbanceKind.DYING_SIGNAL,
        DisturbanceKind.NOISE,
        DisturbanceKind.FLAT_SENSOR,
        DisturbanceKind.FASTER_SAMPLING,
        DisturbanceKind.SLOWER_SAMPLING,
        DisturbanceKind.OUTLIER,
    }
)

#: Scenarios acting on discrete (actuator-like) sensors only.
DISCRETE_KINDS = frozenset(
    {DisturbanceKind.WRONG_DISCRETE_VALUE, DisturbanceKind.OSCILLATING_SENSOR}
)


def all_kinds() -> tuple[DisturbanceKind, ...]:
    """Catalog order used for reports and the overall score product."""
    return tuple(DisturbanceKind)


@dataclass(frozen=True)
class DisturbanceParams:
    """Severity-one intensities and interval caps, all config-overridable.

    Magnitudes are in standardized units; caps are fractions of the input
    length t (sampling scenarios realign inside the window, hence the 0.5
    default) or of the horizon t' for MissingData.
    """

    offset_max: float = 1.0
    noise_scale_max: float = 1.0
    spike_magnitude: float = 8.0
    hold_frac_max: float = 1.0
    sampling_frac_max: float = 0.5
    missing_frac_max: float = 1.0
    affected_frac: float = 0.10

    def __post_init__(self):
        if not 0.0 < self.affected_frac <= 1.0:
            raise ConfigError(f"affected_frac must be in (0, 1], got {self.affected_frac}")
        for label, frac in (
            ("hold_frac_max", self.hold_frac_max),
            ("sampling_frac_max", self.sampling_frac_max),
            ("missing_frac_max", self.missing_frac_max),
        ):
            if not 0.0 < frac <= 1.0:
                raise ConfigError(f"{label} must be in (0, 1], got {frac}")

    def to_dict(self) -> dict:
        return {
            "offset_max": self.offset_max,
            "noise_scale_max": self.noise_scale_max,
            "spike_magnitude": self.spike_magnitude,
            "hold_frac_max": self.hold_frac_max,
            "sampling_frac_max": self.sampling_frac_max,
            "missing_frac_max": self.missing_frac_max,
            "affected_frac": self.affected_frac,
        }


def eligible_sensors(metas: list[SensorMeta], kind: DisturbanceKind) -> list[int]:
    """Sensor indices a scenario may legally target."""
    if kind is DisturbanceKind.MISSING_DATA:
        return [m.index for m in metas]
    if kind in CONTINUOUS_KINDS:
        return [m.index for m in metas if m.kind is SensorKind.CONTINUOUS]
    if kind is DisturbanceKind.WRONG_DISCRETE_VALUE:
        return [m.index for m in metas if m.kind is SensorKind.DISCRETE and m.observed_states]
    # OscillatingSensor needs two valid states to alternate between.
    return [
        m.index
        for m in metas
        if m.kind is SensorKind.DISCRETE and m.observed_states and len(m.observed_states) >= 2
    ]


def select_affected(
    metas: list[SensorMeta],
    kind: DisturbanceKind,
    seed: int,
    affected_frac: float = 0.10,
) -> tuple[int, ...]:
    """Pick the disturbed sensor subset for one scenario, deterministically.

    Chooses ceil(affected_frac * eligible) indices keyed by (seed, kind);
    MissingData targets every sensor (it deletes whole rows). An empty
    result marks the scenario inapplicable for this dataset.
    """
    eligible = eligible_sensors(metas, kind)
    if not eligible:
        return ()
    if kind is DisturbanceKind.MISSING_DATA:
        return tuple(eligible)
    count = math.ceil(affected_frac * len(eligible) - 1e-9)
    count = max(1, min(count, len(eligible)))
    rng = rng_for(seed, "affected", kind.value)
    picked = rng.choice(len(eligible), size=count, replace=False)
    return tuple(sorted(eligible[i] for i in picked))


@dataclass(frozen=True)
class DisturbanceContext:
    """Everything needed to apply one scenario to any window of a run.

    `invalid_values` (WrongDiscreteValue) and `osc_states`
    (OscillatingSensor) are standardized per-sensor constants;
    `frozen_noise` is drawn once per sample via `bind` and reused across
    the whole severity sweep.
    """

    kind: DisturbanceKind
    affected: tuple[int, ...]
    seed: int
    params: DisturbanceParams
    invalid_values: np.ndarray | None = None
    osc_states: np.ndarray | None = None
    frozen_noise: np.ndarray | None = None

    @property
    def applicable(self) -> bool:
        return len(self.affected) > 0

    def bind(self, sample: WindowSample) -> "DisturbanceContext":
        """Attach per-sample state (the frozen noise draw) to this context."""
        if self.kind is not DisturbanceKind.NOISE or not self.applicable:
            return self
        rng = rng_for(self.seed, "frozen_noise", sample.origin)
        noise = rng.standard_normal((sample.t, len(self.affected)))
        return replace(self, frozen_noise=noise)


def make_context(
    metas: list[SensorMeta],
    standardizer: Standardizer,
    kind: DisturbanceKind,
    seed: int,
    params: DisturbanceParams | None = None,
) -> DisturbanceContext:
    """Build the scenario context: affected subset plus discrete-state constants."""
    params = params or DisturbanceParams()
    affected = select_affected(metas, kind, seed, params.affected_frac)
    invalid_values = None
    osc_states = None
    if affected and kind is DisturbanceKind.WRONG_DISCRETE_VALUE:
        invalid_values = np.array(
            [_invalid_state(metas[j], standardizer) for j in affected], dtype=np.float64
        )
    if affected and kind is DisturbanceKind.OSCILLATING_SENSOR:
        osc_states = np.array(
            [_oscillation_states(metas[j], standardizer) for j in affected], dtype=np.float64
        )
    return DisturbanceContext(
        kind=kind,
        affected=affected,
        seed=seed,
        params=params,
        invalid_values=invalid_values,
        osc_states=osc_states,
    )


def _invalid_state(meta: SensorMeta, std: Standardizer) -> float:
    """Standardized out-of-range state: max observed plus the median state gap."""
    states = np.asarray(meta.observed_states, dtype=np.float64)
    gap = float(np.median(np.diff(states))) if states.size > 1 else 1.0
    raw = float(states.max()) + gap
    return (raw - float(std.means[meta.index])) / float(std.stds[meta.index])


def _oscillation_states(meta: SensorMeta, std: Standardizer) -> tuple[float, float]:
    """The two most frequent states (ties by ascending value), standardized."""
    order = sorted(
        range(len(meta.observed_states)),
        key=lambda i: (-meta.state_counts[i], meta.observed_states[i]),
    )
    first, second = order[0], order[1]
    mean = float(std.means[meta.index])
    scale = float(std.stds[meta.index])
    return (
        (meta.observed_states[first] - mean) / scale,
        (meta.observed_states[second] - mean) / scale,
    )


@dataclass(frozen=True)
class DisturbedSample:
    X_d: np.ndarray
    Y_d: np.ndarray
    severity: float


def apply_disturbance(
    ctx: DisturbanceContext, s: float, X: np.ndarray, Y: np.ndarray
) -> DisturbedSample:
    """Apply the scenario at severity s in [0, 1].

    Severity zero returns the sample bit-exactly unchanged; non-affected
    sensors are never modified (MissingData excepted, which shifts all
    sensors uniformly along time).
    """
    if not 0.0 <= s <= 1.0:
        raise ConfigError(f"severity must be in [0, 1], got {s}")
    if s == 0.0 or not ctx.applicable:
        return DisturbedSample(X.copy(), Y.copy(), float(s))

    handler = _HANDLERS[ctx.kind]
    X_d, Y_d = handler(ctx, float(s), X, Y)
    return DisturbedSample(X_d, Y_d, float(s))


def disturb_sample(ctx: DisturbanceContext, s: float, sample: WindowSample) -> DisturbedSample:
    """Convenience wrapper binding per-sample state before applying."""
    return apply_disturbance(ctx.bind(sample), s, sample.X, sample.Y)


def _columns(ctx) -> list[int]:
    return list(ctx.affected)


def _drift(ctx, s, X, Y):
    X_d = X.copy()
    X_d[:, _columns(ctx)] += s * ctx.params.offset_max
    return X_d, Y.copy()


def _dying_signal(ctx, s, X, Y):
    X_d = X.copy()
    X_d[:, _columns(ctx)] *= 1.0 - s
    return X_d, Y.copy()


def _noise(ctx, s, X, Y):
    if ctx.frozen_noise is None:
        raise StresscastError("noise context must be bound to a sample before applying")
    X_d = X.copy()
    X_d[:, _columns(ctx)] += s * ctx.params.noise_scale_max * ctx.frozen_noise
    return X_d, Y.copy()


def _flat_sensor(ctx, s, X, Y):
    t = X.shape[0]
    L = min(round_half_away(s * ctx.params.hold_frac_max * t), t)
    X_d = X.copy()
    if L >= 1:
        cols = _columns(ctx)
        X_d[t - L :, cols] = X[t - L, cols]
    return X_d, Y.copy()


def _missing_data(ctx, s, X, Y):
    t, horizon = X.shape[0], Y.shape[0]
    k = min(round_half_away(s * ctx.params.missing_frac_max * horizon), horizon)
    if k == 0:
        return X.copy(), Y.copy()
    if k >= t:
        raise StresscastError(f"missing-data span {k} must be shorter than the input window {t}")
    # Delete the k most recent input rows; the target shifts to the steps
    # right after the last observed row, padding X at the front to keep shape.
    X_d = np.vstack([np.repeat(X[:1], k, axis=0), X[: t - k]])
    Y_d = np.vstack([X[t - k :], Y[: horizon - k]])
    return X_d, Y_d


def _faster_sampling(ctx, s, X, Y):
    t = X.shape[0]
    L = 2 * round_half_away(s * ctx.params.sampling_frac_max * t / 2.0)
    while L > 0 and 3 * L // 2 > t:
        L -= 2
    X_d = X.copy()
    if L >= 2:
        a = t - 3 * L // 2
        steps = np.arange(t, dtype=np.float64)
        playback_times = a + np.arange(L, dtype=np.float64) / 2.0
        for j in _columns(ctx):
            original = X[:, j]
            X_d[a : a + L, j] = np.interp(playback_times, steps, original)
            X_d[a + L : a + 3 * L // 2, j] = original[a + L // 2]
    return X_d, Y.copy()


def _slower_sampling(ctx, s, X, Y):
    t = X.shape[0]
    L = min(round_half_away(s * ctx.params.sampling_frac_max * t), t)
    X_d = X.copy()
    if L >= 1:
        a = t - L
        idx = np.minimum(a + 2 * (np.arange(L) // 2), t - 1)
        cols = _columns(ctx)
        X_d[a:, cols] = X[np.ix_(idx, cols)]
    return X_d, Y.copy()


def _outlier(ctx, s, X, Y):
    t = X.shape[0]
    p = (3 * t) // 4
    X_d = X.copy()
    X_d[p, _columns(ctx)] += s * ctx.params.spike_magnitude
    return X_d, Y.copy()


def _wrong_discrete_value(ctx, s, X, Y):
    t = X.shape[0]
    L = min(round_half_away(s * ctx.params.hold_frac_max * t), t)
    X_d = X.copy()
    if L >= 1:
        X_d[t - L :, _columns(ctx)] = ctx.invalid_values
    return X_d, Y.copy()


def _oscillating_sensor(ctx, s, X, Y):
    t = X.shape[0]
    L = min(round_half_away(s * ctx.params.hold_frac_max * t), t)
    X_d = X.copy()
    if L >= 1:
        even = (np.arange(L) % 2 == 0)[:, None]
        pattern = np.where(even, ctx.osc_states[:, 0], ctx.osc_states[:, 1])
        X_d[t - L :, _columns(ctx)] = pattern
    return X_d, Y.copy()


_HANDLERS = {
    DisturbanceKind.DRIFT: _drift,
    DisturbanceKind.DYING_SIGNAL: _dying_signal,
    DisturbanceKind.NOISE: _noise,
    DisturbanceKind.FLAT_SENSOR: _flat_sensor,
    DisturbanceKind.MISSING_DATA: _missing_data,
    DisturbanceKind.FASTER_SAMPLING: _faster_sampling,
    DisturbanceKind.SLOWER_SAMPLING: _slower_sampling,
    DisturbanceKind.OUTLIER: _outlier,
    DisturbanceKind.WRONG_DISCRETE_VALUE: _wrong_discrete_value,
    DisturbanceKind.OSCILLATING_SENSOR: _oscillating_sensor,
}

"""Forecaster contract and built-in baselines with gradient training.

A forecaster maps the last t standardized sensor readings to the next t'
readings. Built-ins are numpy-only: Persistence and GlobalMean need no
training; Linear, DLinear, and MLP train with hand-derived gradients,
Adam updates, early stopping, and best-checkpoint retention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DivergenceDetected, NonFiniteInput, ShapeMismatch
from .pipeline import WindowSample
from .rng import rng_for

TRAINABLE_KINDS = ("Linear", "DLinear", "MLP")
BUILTIN_KINDS = ("Persistence", "GlobalMean") + TRAINABLE_KINDS

MODEL_FILE_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    patience: int = 5
    max_epochs: int = 100
    learning_rate: float = 1e-3
    seed: int = 0
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8

    def __post_init__(self):
        for label, value in (
            ("batch_size", self.batch_size),
            ("patience", self.patience),
            ("max_epochs", self.max_epochs),
            ("learning_rate", self.learning_rate),
            ("adam_eps", self.adam_eps),
        ):
            if value <= 0:
                raise ConfigError(f"{label} must be positive, got {value}")
        if self.patience >= self.max_epochs:
            raise ConfigError("patience must be smaller than max_epochs")


class Forecaster:
    """Base contract: predict t' future rows from t input rows, purely."""

    kind = "?"

    def __init__(self, t: int, horizon: int, n_sensors: int):
        self.t = t
        self.horizon = horizon
        self.n_sensors = n_sensors

    def hyperparams(self) -> dict:
        return {}

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_batch(np.asarray(X, dtype=np.float64)[None])[0]

    def predict_batch(self, XB: np.ndarray) -> np.ndarray:
        XB = np.asarray(XB, dtype=np.float64)
        if XB.ndim != 3 or XB.shape[1:] != (self.t, self.n_sensors):
            raise ShapeMismatch(
                f"expected inputs [B, {self.t}, {self.n_sensors}], got {XB.shape}"
            )
        if not np.isfinite(XB).all():
            raise NonFiniteInput("forecaster inputs contain non-finite values")
        out = self._forward(XB)
        return out

    def _forward(self, XB: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class PersistenceForecaster(Forecaster):
    """Repeat the last observed row over the whole horizon."""

    kind = "Persistence"

    def _forward(self, XB):
        return np.repeat(XB[:, -1:, :], self.horizon, axis=1)


class GlobalMeanForecaster(Forecaster):
    """Predict the per-sensor training mean, which is zero in standardized space."""

    kind = "GlobalMean"

    def _forward(self, XB):
        return np.zeros((XB.shape[0], self.horizon, self.n_sensors))


class TrainableForecaster(Forecaster):
    """Adds parameter tensors and hand-derived backward passes."""

    def __init__(self, t, horizon, n_sensors, seed: int = 0):
        super().__init__(t, horizon, n_sensors)
        self.seed = seed
        self.params: dict[str, np.ndarray] = {}
        self._init_params(rng_for(seed, "init", self.kind))

    def _init_params(self, rng):
        raise NotImplementedError

    def _forward_cache(self, XB) -> dict:
        raise NotImplementedError

    def _forward(self, XB):
        return self._forward_cache(XB)["out"]

    def _backward(self, cache: dict, dOut: np.ndarray) -> dict:
        raise NotImplementedError

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load_snapshot(self, snap: dict[str, np.ndarray]) -> None:
        for k in self.params:
            self.params[k] = snap[k].copy()


def _uniform_init(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class LinearForecaster(TrainableForecaster):
    """Single affine map from the flattened input window to the flattened forecast."""

    kind = "Linear"

    def _init_params(self, rng):
        d_in = self.t * self.n_sensors
        d_out = self.horizon * self.n_sensors
        self.params = {
            "W": _uniform_init(rng, (d_in, d_out), d_in),
            "b": _uniform_init(rng, (d_out,), d_in),
        }

    def _forward_cache(self, XB):
        B = XB.shape[0]
        Xf = XB.reshape(B, -1)
        out = (Xf @ self.params["W"] + self.params["b"]).reshape(B, self.horizon, self.n_sensors)
        return {"Xf": Xf, "out": out}

    def _backward(self, cache, dOut):
        B = dOut.shape[0]
        dflat = dOut.reshape(B, -1)
        return {"W": cache["Xf"].T @ dflat, "b": dflat.sum(axis=0)}


def decompose_moving_average(X: np.ndarray, kernel: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a window into a moving-average trend and the remainder.

    Centered mean of width `kernel` (odd) along the time axis with edge
    replication padding; trend + remainder reconstructs X exactly.
    Accepts [t, n] or batched [B, t, n].
    """
    if kernel < 1 or kernel % 2 == 0:
        raise ConfigError(f"moving-average kernel must be odd and >= 1, got {kernel}")
    X = np.asarray(X, dtype=np.float64)
    if kernel == 1:
        return X.copy(), np.zeros_like(X)
    half = (kernel - 1) // 2
    pad = [(0, 0)] * X.ndim
    pad[-2] = (half, half)
    padded = np.pad(X, pad, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, kernel, axis=-2)
    trend = windows.mean(axis=-1)
    return trend, X - trend


class DLinearForecaster(TrainableForecaster):
    """Trend/remainder decomposition with one time-axis affine map per branch.

    Each branch maps t input steps to t' output steps with weights shared
    across sensors; the branch outputs are summed.
    """

    kind = "DLinear"

    def __init__(self, t, horizon, n_sensors, seed: int = 0, moving_average_kernel: int = 25):
        if moving_average_kernel % 2 == 0 or moving_average_kernel < 1:
            raise ConfigError("moving_average_kernel must be odd and >= 1")
        self.moving_average_kernel = moving_average_kernel
        super().__init__(t, horizon, n_sensors, seed)

    def hyperparams(self):
        return {"moving_average_kernel": self.moving_average_kernel}

    def _init_params(self, rng):
        self.params = {
            "W_trend": _uniform_init(rng, (self.t, self.horizon), self.t),
            "b_trend": _uniform_init(rng, (self.horizon,), self.t),
            "W_seasonal": _uniform_init(rng, (self.t, self.horizon), self.t),
            "b_seasonal": _uniform_init(rng, (self.horizon,), self.t),
        }

    def _forward_cache(self, XB):
        trend, remainder = decompose_moving_average(XB, self.moving_average_kernel)
        out = (
            np.einsum("bij,ih->bhj", trend, self.params["W_trend"])
            + self.params["b_trend"][None, :, None]
            + np.einsum("bij,ih->bhj", remainder, self.params["W_seasonal"])
            + self.params["b_seasonal"][None, :, None]
        )
        return {"trend": trend, "remainder": remainder, "out": out}

    def _backward(self, cache, dOut):
        return {
            "W_trend": np.einsum("bij,bhj->ih", cache["trend"], dOut),
            "b_trend": dOut.sum(axis=(0, 2)),
            "W_seasonal": np.einsum("bij,bhj->ih", cache["remainder"], dOut),
            "b_seasonal": dOut.sum(axis=(0, 2)),
        }


class MLPForecaster(TrainableForecaster):
    """Flattened input, one ReLU hidden layer, affine output."""

    kind = "MLP"

    def __init__(self, t, horizon, n_sensors, seed: int = 0, hidden_width: int = 256):
        if hidden_width < 1:
            raise ConfigError("hidden_width must be positive")
        self.hidden_width = hidden_width
        super().__init__(t, horizon, n_sensors, seed)

    def hyperparams(self):
        return {"hidden_width": self.hidden_width}

    def _init_params(self, rng):
        d_in = self.t * self.n_sensors
        d_out = self.horizon * self.n_sensors
        h = self.hidden_width
        self.params = {
            "W1": _uniform_init(rng, (d_in, h), d_in),
            "b1": _uniform_init(rng, (h,), d_in),
            "W2": _uniform_init(rng, (h, d_out), h),
            "b2": _uniform_init(rng, (d_out,), h),
        }

    def _forward_cache(self, XB):
        B = XB.shape[0]
        Xf = XB.reshape(B, -1)
        pre = Xf @ self.params["W1"] + self.params["b1"]
        hidden = np.maximum(pre, 0.0)
        out = (hidden @ self.params["W2"] + self.params["b2"]).reshape(
            B, self.horizon, self.n_sensors
        )
        return {"Xf": Xf, "pre": pre, "hidden": hidden, "out": out}

    def _backward(self, cache, dOut):
        B = dOut.shape[0]
        dflat = dOut.reshape(B, -1)
        dHidden = dflat @ self.params["W2"].T
        dPre = dHidden * (cache["pre"] > 0.0)
        return {
            "W2": cache["hidden"].T @ dflat,
            "b2": dflat.sum(axis=0),
            "W1": cache["Xf"].T @ dPre,
            "b1": dPre.sum(axis=0),
        }


def build_forecaster(
    kind: str,
    t: int,
    horizon: int,
    n_sensors: int,
    hyperparams: dict | None = None,
    seed: int = 0,
) -> Forecaster:
    hyperparams = dict(hyperparams or {})
    if kind == "Persistence":
        return PersistenceForecaster(t, horizon, n_sensors)
    if kind == "GlobalMean":
        return GlobalMeanForecaster(t, horizon, n_sensors)
    if kind == "Linear":
        return LinearForecaster(t, horizon, n_sensors, seed=seed)
    if kind == "DLinear":
        return DLinearForecaster(
            t, horizon, n_sensors, seed=seed,
            moving_average_kernel=int(hyperparams.get("moving_average_kernel", 25)),
        )
    if kind == "MLP":
        return MLPForecaster(
            t, horizon, n_sensors, seed=seed,
            hidden_width=int(hyperparams.get("hidden_width", 256)),
        )
    raise ConfigError(f"unknown forecaster kind {kind!r}; built-ins are {BUILTIN_KINDS}")


def stack_windows(windows: list[WindowSample]) -> tuple[np.ndarray, np.ndarray]:
    XB = np.stack([w.X for w in windows])
    YB = np.stack([w.Y for w in windows])
    return XB, YB


def loss_and_grads(model: TrainableForecaster, XB, YB) -> tuple[float, dict]:
    """Mean-squared-error loss over a batch plus parameter gradients.

    Overflow is allowed to produce inf rather than warn; the training
    loop turns non-finite losses into DivergenceDetected.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        cache = model._forward_cache(XB)
        diff = cache["out"] - YB
        loss = float(np.mean(diff * diff))
        dOut = (2.0 / diff.size) * diff
        return loss, model._backward(cache, dOut)


class Adam:
    """Adam update rule with bias correction; state per parameter tensor."""

    def __init__(self, params: dict, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.steps = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict) -> None:
        self.steps += 1
        correction1 = 1.0 - self.beta1**self.steps
        correction2 = 1.0 - self.beta2**self.steps
        for key, grad in grads.items():
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            params[key] -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


class EarlyStopper:
    """Track the best validation loss and stop after `patience` stale epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = -1
        self.stale = 0

    def update(self, epoch: int, value: float) -> bool:
        """Record one epoch's validation loss; True if it improved the best."""
        if value < self.best:
            self.best = value
            self.best_epoch = epoch
            self.stale = 0
            return True
        self.stale += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.stale >= self.patience


@dataclass
class TrainResult:
    model: TrainableForecaster
    best_epoch: int
    best_val_mse: float
    epochs_run: int
    history: list[dict] = field(default_factory=list)


def train(
    model: TrainableForecaster,
    train_windows: list[WindowSample],
    val_windows: list[WindowSample],
    cfg: TrainConfig,
) -> TrainResult:
    """Mini-batch Adam training with early stopping on validation MSE.

    Batch order is shuffled each epoch from a stream keyed by cfg.seed;
    the returned model carries the lowest-validation-MSE checkpoint.
    Raises DivergenceDetected (with epoch and batch) on non-finite loss.
    """
    if not isinstance(model, TrainableForecaster):
        raise ConfigError(f"forecaster kind {model.kind!r} is not trainable")
    XB, YB = stack_windows(train_windows)
    XV, YV = stack_windows(val_windows)
    n_train = XB.shape[0]

    optimizer = Adam(model.params, cfg.learning_rate, cfg.adam_betas, cfg.adam_eps)
    shuffle_rng = rng_for(cfg.seed, "shuffle", model.kind)
    stopper = EarlyStopper(cfg.patience)
    best_params = model.snapshot()
    history = []
    epochs_run = 0

    for epoch in range(cfg.max_epochs):
        order = shuffle_rng.permutation(n_train)
        epoch_losses = []
        for batch_index, start in enumerate(range(0, n_train, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            loss, grads = loss_and_grads(model, XB[idx], YB[idx])
            if not np.isfinite(loss):
                raise DivergenceDetected(epoch, batch_index)
            optimizer.step(model.params, grads)
            epoch_losses.append(loss)

        val_pred = model._forward(XV)
        val_mse = float(np.mean((val_pred - YV) ** 2))
        if not np.isfinite(val_mse):
            raise DivergenceDetected(epoch, -1, f"non-finite validation loss at epoch {epoch}")
        epochs_run = epoch + 1
        history.append({"epoch": epoch, "train_loss": float(np.mean(epoch_losses)), "val_mse": val_mse})
        if stopper.update(epoch, val_mse):
            best_params = model.snapshot()
        if stopper.should_stop:
            break

    model.load_snapshot(best_params)
    return TrainResult(
        model=model,
        best_epoch=stopper.best_epoch,
        best_val_mse=float(stopper.best),
        epochs_run=epochs_run,
        history=history,
    )


def save_model(model: Forecaster, path) -> None:
    """Persist kind, hyperparams, dimensions, and parameter tensors."""
    meta = {
        "version": MODEL_FILE_VERSION,
        "kind": model.kind,
        "hyperparams": model.hyperparams(),
        "t": model.t,
        "horizon": model.horizon,
        "n_sensors": model.n_sensors,
        "seed": getattr(model, "seed", 0),
    }
    tensors = getattr(model, "params", {})
    np.savez(path, __meta__=np.array(json.dumps(meta)), **tensors)


def load_model(path, expect_dims: tuple[int, int, int] | None = None) -> Forecaster:
    """Load a persisted model, validating the dimension header."""
    with np.load(path) as payload:
        meta = json.loads(str(payload["__meta__"]))
        if meta.get("version") != MODEL_FILE_VERSION:
            raise ConfigError(f"unsupported model file version {meta.get('version')}")
        dims = (int(meta["t"]), int(meta["horizon"]), int(meta["n_sensors"]))
        if expect_dims is not None and dims != tuple(expect_dims):
            raise ShapeMismatch(f"model file dimensions {dims} do not match expected {tuple(expect_dims)}")
        model = build_forecaster(
            meta["kind"], *dims, hyperparams=meta.get("hyperparams"), seed=int(meta.get("seed", 0))
        )
        if isinstance(model, TrainableForecaster):
            for key in model.params:
                if key not in payload:
                    raise ShapeMismatch(f"model file missing parameter tensor {key!r}")
                tensor = payload[key]
                if tensor.shape != model.params[key].shape:
                    raise ShapeMismatch(
                        f"parameter {key!r} has shape {tensor.shape}, expected {model.params[key].shape}"
                    )
                model.params[key] = tensor.astype(np.float64)
    return model

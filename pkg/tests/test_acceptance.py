"""Acceptance gate: one verdict line per release criterion.

Each test prints `[acceptance] <criterion>: PASS|FAIL` outside pytest's
capture so a full run always shows the checklist, then asserts.
"""

import json
import math
import os
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from stresscast.config import config_from_dict
from stresscast.disturb import (
    DisturbanceKind,
    all_kinds,
    disturb_sample,
    make_context,
)
from stresscast.forecast import (
    DLinearForecaster,
    GlobalMeanForecaster,
    LinearForecaster,
    MLPForecaster,
    PersistenceForecaster,
    TrainConfig,
    train,
)
from stresscast.ingest import classify_sensors
from stresscast.mathutil import round_half_away
from stresscast.pipeline import (
    SplitSpec,
    Standardizer,
    apply_standardizer,
    fit_standardizer,
    sample_windows,
    split_time,
)
from stresscast.runner import run
from stresscast.score import (
    MetricSpec,
    SeverityGrid,
    evaluate_scenario,
    overall_robustness,
    per_window_mse,
    score_from_mu_rel,
)
from stresscast.synth import make_synthetic

from conftest import random_window
from test_forecast import _grad_check, _linear_system, _windows

Y_PRESERVING = tuple(k for k in all_kinds() if k is not DisturbanceKind.MISSING_DATA)


def _verdict(capsys, name, ok, detail=""):
    with capsys.disabled():
        line = f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        print(line, flush=True)
    assert ok, f"{name}: {detail}"


def _prepare(rows, seed, t, horizon, n_windows, n_continuous=2, n_discrete=1):
    ds = make_synthetic(rows=rows, n_continuous=n_continuous, n_discrete=n_discrete, seed=seed)
    metas = classify_sensors(ds)
    segs = split_time(ds.rows, SplitSpec(), min_segment_rows=t + horizon)
    std = fit_standardizer(ds.values, segs[0])
    table = apply_standardizer(std, ds.values)
    windows = sample_windows(table, segs[2], t, horizon, n_windows, seed)
    return metas, std, windows


def test_zero_severity_identity(capsys):
    metas, std, windows = _prepare(rows=1200, seed=21, t=12, horizon=4, n_windows=100)
    started = time.perf_counter()
    clean = True
    for kind in all_kinds():
        ctx = make_context(metas, std, kind, seed=21)
        for w in windows:
            d = disturb_sample(ctx, 0.0, w)
            same = (
                d.X_d.dtype == w.X.dtype
                and d.Y_d.dtype == w.Y.dtype
                and d.X_d.tobytes() == w.X.tobytes()
                and d.Y_d.tobytes() == w.Y.tobytes()
            )
            clean = clean and same and d.X_d is not w.X
    elapsed = time.perf_counter() - started
    _verdict(
        capsys,
        "zero-severity identity",
        clean and elapsed < 10.0,
        f"10 scenarios x 100 windows bit-exact in {elapsed:.2f}s",
    )


def test_constant_forecaster_unity(capsys):
    metas, std, windows = _prepare(rows=400, seed=3, t=12, horizon=4, n_windows=16)
    model = GlobalMeanForecaster(t=12, horizon=4, n_sensors=len(metas))
    grid = SeverityGrid(0.01)
    results = [
        evaluate_scenario(model, make_context(metas, std, kind, seed=3), windows, grid)
        for kind in all_kinds()
    ]
    by_kind = {DisturbanceKind(r.kind): r for r in results}
    worst = max(abs(by_kind[k].robustness - 1.0) for k in Y_PRESERVING)
    overall = overall_robustness(results)
    product = 1.0
    for r in results:
        if r.applicable:
            product *= r.robustness
    drift = abs(overall - product)
    _verdict(
        capsys,
        "constant-forecaster unity",
        worst <= 1e-9 and drift < 1e-12,
        f"max |R_d - 1| = {worst:.2e} over {len(Y_PRESERVING)} scenarios, |R - prod| = {drift:.2e}",
    )


def test_riemann_oracle(capsys):
    grid = SeverityGrid(0.01)
    score = score_from_mu_rel(1.0 - grid.points, grid)
    err = abs(score - 0.495)
    _verdict(capsys, "Riemann oracle", err <= 1e-12, f"R_d = {score!r}, |err| = {err:.2e}")


def _brute_force_score(loss_original, loss_disturbed, step, epsilon):
    total = 0.0
    for severity_row in loss_disturbed:
        ratios = [(lo + epsilon) / (ld + epsilon) for lo, ld in zip(loss_original, severity_row)]
        total += (sum(ratios) / len(ratios)) * step
    return total


def test_brute_force_equivalence(capsys, tmp_path):
    ds = make_synthetic(rows=200, n_continuous=2, n_discrete=1, seed=17)
    config = config_from_dict(
        {
            "window": {"t": 12, "horizon": 4},
            "sampling": {"train_windows": 16, "val_windows": 16, "test_windows": 16},
            "model": {"kind": "Persistence"},
            "seed": 17,
            "keep_per_sample_losses": True,
            "output": {"report": str(tmp_path / "brute.json")},
        }
    )
    report = run(config, dataset=ds)
    path = tmp_path / "brute.json"
    path.write_text(json.dumps(report.to_dict(keep_losses=True)))
    payload = json.loads(path.read_text())

    step = payload["config"]["severity_step"]
    epsilon = payload["config"]["metric"]["epsilon"]
    worst = 0.0
    checked = 0
    for scenario in payload["scenarios"]:
        if not scenario["applicable"]:
            continue
        naive = _brute_force_score(
            scenario["loss_original"], scenario["loss_disturbed"], step, epsilon
        )
        worst = max(worst, abs(naive - scenario["robustness"]))
        checked += 1
    _verdict(
        capsys,
        "brute-force equivalence",
        checked == len(all_kinds()) and worst <= 1e-12,
        f"{checked} scenarios, max |naive - engine| = {worst:.2e}",
    )


def test_determinism_across_worker_counts(capsys):
    ds = make_synthetic(rows=300, n_continuous=2, n_discrete=1, seed=7)
    payloads = []
    for workers in (1, 3):
        config = config_from_dict(
            {
                "window": {"t": 12, "horizon": 4},
                "sampling": {"train_windows": 8, "val_windows": 8, "test_windows": 8},
                "model": {"kind": "Persistence"},
                "severity_step": 0.05,
                "seed": 7,
                "workers": workers,
            }
        )
        payload = run(config, dataset=ds).to_dict()
        payload.pop("timing")
        payload["config"].pop("workers")
        payloads.append(json.dumps(payload, sort_keys=True))
    _verdict(
        capsys,
        "determinism across worker counts",
        payloads[0] == payloads[1],
        "workers 1 vs 3, identical numeric payloads",
    )


def test_pipeline_statistics(capsys):
    rows = 977
    ds = make_synthetic(rows=rows, n_continuous=3, n_discrete=1, seed=5)
    train_seg, val_seg, test_seg = split_time(rows, SplitSpec(), min_segment_rows=1)
    std = fit_standardizer(ds.values, train_seg)
    table = apply_standardizer(std, ds.values)
    block = table[train_seg.start : train_seg.stop]

    mean_err = float(np.abs(block.mean(axis=0)).max())
    std_err = float(np.abs(block.std(axis=0) - 1.0).max())
    required_gap = max(1, round_half_away(0.01 * rows))
    gap_ok = (
        val_seg.start - train_seg.stop >= required_gap
        and test_seg.start - val_seg.stop >= required_gap
    )
    _verdict(
        capsys,
        "pipeline statistics",
        mean_err < 1e-9 and std_err < 1e-6 and not std.guarded_columns and gap_ok,
        f"|mean| <= {mean_err:.1e}, |std-1| <= {std_err:.1e}, purge gap >= {required_gap}",
    )


def test_gradient_checks(capsys):
    rng = np.random.default_rng(2024)
    factories = {
        "Linear": lambda t, h, n, s: LinearForecaster(t, h, n, seed=s),
        "DLinear": lambda t, h, n, s: DLinearForecaster(
            t, h, n, seed=s, moving_average_kernel=int(rng.choice([3, 5]))
        ),
        "MLP": lambda t, h, n, s: MLPForecaster(t, h, n, seed=s, hidden_width=int(rng.integers(4, 10))),
    }
    worst = {}
    for label, factory in factories.items():
        errs = []
        for i in range(10):
            t = int(rng.integers(3, 8))
            horizon = int(rng.integers(1, 4))
            n = int(rng.integers(1, 4))
            model = factory(t, horizon, n, 1000 + i)
            errs.append(_grad_check(model, seed=rng.integers(0, 2**31), batch=int(rng.integers(2, 6))))
        worst[label] = max(errs)
    ok = all(v < 1e-5 for v in worst.values())
    detail = ", ".join(f"{k} max rel err {v:.1e}" for k, v in worst.items())
    _verdict(capsys, "gradient checks", ok, detail + "; 10 instances each")


def test_learning_sanity(capsys):
    started = time.perf_counter()

    XB, YB = _linear_system(0, n_windows=224)
    linear = LinearForecaster(t=6, horizon=2, n_sensors=2, seed=0)
    cfg = TrainConfig(batch_size=16, patience=40, max_epochs=200, learning_rate=0.02, seed=0)
    train(linear, _windows(XB[:128], YB[:128]), _windows(XB[128:160], YB[128:160]), cfg)
    linear_test_mse = float(np.mean((linear._forward(XB[160:]) - YB[160:]) ** 2))

    t, horizon = 48, 12
    ds = make_synthetic(rows=1600, n_continuous=3, n_discrete=1, seed=12)
    segs = split_time(ds.rows, SplitSpec(), min_segment_rows=t + horizon)
    std = fit_standardizer(ds.values, segs[0])
    table = apply_standardizer(std, ds.values)
    train_w = sample_windows(table, segs[0], t, horizon, 256, seed=12)
    val_w = sample_windows(table, segs[1], t, horizon, 64, seed=12)
    test_w = sample_windows(table, segs[2], t, horizon, 64, seed=12)

    dlinear = DLinearForecaster(t, horizon, ds.n_sensors, seed=12)
    cfg = TrainConfig(batch_size=64, patience=8, max_epochs=60, learning_rate=5e-3, seed=12)
    train(dlinear, train_w, val_w, cfg)

    X_test = np.stack([w.X for w in test_w])
    Y_test = np.stack([w.Y for w in test_w])
    dlinear_mse = float(per_window_mse(dlinear.predict_batch(X_test), Y_test).mean())
    persistence = PersistenceForecaster(t, horizon, ds.n_sensors)
    persistence_mse = float(per_window_mse(persistence.predict_batch(X_test), Y_test).mean())

    elapsed = time.perf_counter() - started
    _verdict(
        capsys,
        "learning sanity",
        linear_test_mse < 1e-3 and dlinear_mse < persistence_mse and elapsed < 120.0,
        f"Linear test MSE {linear_test_mse:.2e}; DLinear {dlinear_mse:.4f} vs "
        f"Persistence {persistence_mse:.4f}; {elapsed:.1f}s",
    )


def test_missing_data_construction(capsys):
    t, horizon, n = 90, 30, 4
    ds = make_synthetic(rows=300, n_continuous=3, n_discrete=1, seed=9)
    metas = classify_sensors(ds)
    std = Standardizer(means=np.zeros(n), stds=np.ones(n))
    ctx = make_context(metas, std, DisturbanceKind.MISSING_DATA, seed=9)
    rng = np.random.default_rng(9)
    ok = True
    for _ in range(5):
        w = random_window(rng, t=t, horizon=horizon, n=n)
        for k in range(1, horizon + 1):
            s = k / horizon
            assert round_half_away(s * horizon) == k
            d = disturb_sample(ctx, s, w)
            expected = np.vstack([w.X[t - k :], w.Y[: horizon - k]])
            ok = ok and np.array_equal(d.Y_d, expected) and d.X_d.shape == w.X.shape
    _verdict(capsys, "MissingData construction", ok, "k in 1..30 on 5 random windows")


def _etth1_path():
    env = os.environ.get("STRESSCAST_ETTH1")
    if env:
        return Path(env)
    return Path(__file__).resolve().parent.parent / "data" / "ETTh1.csv"


def test_qualitative_etth1_anchor(capsys, tmp_path):
    path = _etth1_path()
    if not path.exists():
        with capsys.disabled():
            print(
                "[acceptance] qualitative ETTh1 anchor: SKIP  "
                f"(place the dataset at {path} or set STRESSCAST_ETTH1)",
                flush=True,
            )
        pytest.skip("ETTh1 dataset not provided")

    started = time.perf_counter()
    config = config_from_dict(
        {
            "dataset": {"path": str(path), "name": "ETTh1"},
            "model": {"kind": "DLinear"},
            "seed": 0,
            "workers": 4,
            "output": {"report": str(tmp_path / "etth1.json")},
        }
    )
    report = run(config)
    elapsed = time.perf_counter() - started

    notes = []
    if elapsed >= 15 * 60:
        notes.append(f"runtime {elapsed:.0f}s exceeds 15 min")
    if not (math.isfinite(report.overall) and 0.0 < report.overall <= 1.5):
        notes.append(f"overall R = {report.overall!r} outside (0, 1.5]")
    ranked = sorted(
        (r for r in report.scenarios if r.applicable), key=lambda r: r.robustness
    )
    rank = [r.kind for r in ranked].index("MissingData")
    if rank > 1:
        notes.append(f"MissingData ranked {rank + 1} lowest, expected top two")
    for note in notes:
        warnings.warn(f"ETTh1 anchor (expected-flaky): {note}", stacklevel=1)
    _verdict(
        capsys,
        "qualitative ETTh1 anchor",
        True,
        f"R = {report.overall:.4f}, MissingData rank {rank + 1}, {elapsed:.0f}s"
        + ("; WARNINGS: " + "; ".join(notes) if notes else ""),
    )

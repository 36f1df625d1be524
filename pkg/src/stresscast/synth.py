"""Seeded synthetic plant-like dataset for demos and tests.

Continuous channels are sums of sinusoids plus a linear trend and mild
noise; discrete channels are binary square waves mimicking actuator
state. Not derived from any measured system.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .ingest import RawDataset
from .rng import rng_for


def make_synthetic(
    rows: int = 2000,
    n_continuous: int = 3,
    n_discrete: int = 1,
    seed: int = 0,
    noise_scale: float = 0.05,
    name: str = "synthetic",
) -> RawDataset:
    if rows < 2:
        raise ConfigError(f"rows must be at least 2, got {rows}")
    if n_continuous < 0 or n_discrete < 0 or n_continuous + n_discrete < 1:
        raise ConfigError("need at least one channel")
    phase_axis = np.arange(rows, dtype=np.float64) / rows
    columns = []
    names = []
    for c in range(n_continuous):
        rng = rng_for(seed, "synth", "continuous", c)
        signal = np.zeros(rows)
        for freq, amp, phase in zip(
            rng.uniform(3.0, 20.0, size=2),
            rng.uniform(0.5, 1.5, size=2),
            rng.uniform(0.0, 2.0 * np.pi, size=2),
        ):
            signal += amp * np.sin(2.0 * np.pi * freq * phase_axis + phase)
        signal += rng.uniform(-2.0, 2.0) * phase_axis
        signal += rng.uniform(-1.0, 1.0)
        if noise_scale > 0:
            signal += rng.normal(0.0, noise_scale, size=rows)
        columns.append(signal)
        names.append(f"sig_{c}")
    for d in range(n_discrete):
        rng = rng_for(seed, "synth", "discrete", d)
        period = int(rng.integers(8, 40))
        wave = ((np.arange(rows) // period) % 2).astype(np.float64)
        columns.append(wave)
        names.append(f"act_{d}")
    values = np.column_stack(columns)
    return RawDataset(
        name=name,
        values=values,
        column_names=names,
        timestamps=None,
        timestamp_name=None,
        provenance=[
            f"synthetic generator: rows={rows} continuous={n_continuous} "
            f"discrete={n_discrete} seed={seed} noise_scale={noise_scale}"
        ],
    )

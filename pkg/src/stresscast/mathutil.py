"""Small numeric helpers shared across modules."""

from __future__ import annotations

import math


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero.

    Used everywhere a real-valued length (severity * cap) becomes a step
    count, so that all modules share one rounding convention.
    """
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))

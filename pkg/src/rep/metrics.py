"""Convergence and variability metrics over per-round series (rounds are 1-based)."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np


def _window(series: Sequence[float], window: Sequence[int]) -> np.ndarray:
    first, last = int(window[0]), int(window[1])
    if first < 1 or last < first:
        raise ValueError(f"bad round window {window}")
    return np.asarray(series[first - 1 : last], dtype=float)


def window_variance(series: Sequence[float], window: Sequence[int]) -> float | None:
    values = _window(series, window)
    return float(np.var(values)) if values.size else None


def bullwhip_ratio(orders: Sequence[float], demand: Sequence[float], window: Sequence[int]) -> float | None:
    """Variance of upstream orders over variance of customer demand.

    ``None`` when the window is empty or demand does not vary in it.
    """
    o, d = _window(orders, window), _window(demand, window)
    if o.size == 0 or o.size != d.size:
        return None
    dv = float(np.var(d))
    if dv == 0.0:
        return None
    return float(np.var(o)) / dv


def rounds_to_convergence(fractions: Sequence[float], threshold: float = 0.70, sustain: int = 2) -> int | None:
    """First 1-based round opening a run of ``sustain`` rounds at or above threshold."""
    run = 0
    for t, f in enumerate(fractions, start=1):
        run = run + 1 if f >= threshold else 0
        if run == sustain:
            return t - sustain + 1
    return None

"""Scalar summaries of ensemble time series used for the coupling-sweep comparisons."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LATE_WINDOW = (15.0, 25.0)


@dataclass(frozen=True)
class WindowMetrics:
    sigma_z_envelope: float  # half the peak-to-peak of sigma_z over the window
    sigma_x_peak_to_peak: float


def window_mask(times: np.ndarray, window=LATE_WINDOW) -> np.ndarray:
    lo, hi = window
    return (times >= lo - 1e-9) & (times <= hi + 1e-9)


def late_window_metrics(series, window=LATE_WINDOW) -> WindowMetrics:
    mask = window_mask(series.times, window)
    if not mask.any():
        raise ValueError(f"no output times inside {window}")
    z, x = series.sigma_z[mask], series.sigma_x[mask]
    return WindowMetrics(0.5 * float(z.max() - z.min()), float(x.max() - x.min()))

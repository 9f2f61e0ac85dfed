"""Exponential-rate extraction from simulated decay curves.

The exponential regime is fit by linear least squares on ln(channel) vs t:
the model is exactly linear in log space and the values span decades.
Weighting is uniform in log space, which overweights the late (smallest)
values relative to their absolute error; for the clean single-exponential
windows selected here the effect is negligible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagator import DecayTimeSeries

NOISE_FLOOR = 1e-13
DEEP_DECAY = 1e-6


class WindowCollapse(RuntimeError):
    """No usable fit window inside the series (decay too slow for t_end)."""


@dataclass
class FitResult:
    """Fitted exponential rate of one channel over one window."""

    gamma_obs: float
    window: tuple[float, float]
    residual: float            # rms of log residuals
    channel: str
    intercept: float           # estimates ln channel(0+) of the exponential regime
    n_samples: int


def fit_exponential(series: DecayTimeSeries, channel: str,
                    window: tuple[float, float]) -> FitResult:
    """Slope of ln(channel) over the window; returns rate, intercept, residual."""
    t = series.times
    c = series.channel(channel)
    lo, hi = window
    m = (t >= lo) & (t <= hi)
    count = int(np.count_nonzero(m))
    if count < 10:
        raise ValueError(f"exponential fit needs >= 10 samples in [{lo}, {hi}], found {count}")
    if np.any(c[m] <= 0):
        raise ValueError("channel has non-positive values inside the fit window")
    design = np.vstack([t[m], np.ones(count)]).T
    sol, *_ = np.linalg.lstsq(design, np.log(c[m]), rcond=None)
    resid = float(np.sqrt(np.mean((np.log(c[m]) - design @ sol) ** 2)))
    return FitResult(
        gamma_obs=float(-sol[0]),
        window=(float(lo), float(hi)),
        residual=resid,
        channel=channel,
        intercept=float(sol[1]),
        n_samples=count,
    )


def auto_window(series: DecayTimeSeries, channel: str, t_q: float,
                noise_floor: float = NOISE_FLOOR) -> tuple[float, float]:
    """Fit window [t_lo, t_hi] bracketing the exponential regime.

    t_lo skips the Zeno head (2 t_q) and waits for 10% decay; t_hi stays
    three decades above the channel floor.  The floor is the numerical noise
    level, promoted to the observed minimum when the series has decayed deep
    enough for its own tail to define it.

    Raises:
        WindowCollapse: when the series is too short for any window,
            suggesting a longer t_end.
    """
    t = series.times
    c = series.channel(channel)
    below = np.nonzero(c < 0.9 * c[0])[0]
    if len(below) == 0:
        raise WindowCollapse(
            "channel never decayed below 90% of its initial value; increase t_end"
        )
    t_lo = max(2.0 * t_q, float(t[below[0]]))
    floor = noise_floor
    c_min = float(np.min(c))
    if c_min > 0 and c_min < DEEP_DECAY:
        floor = max(floor, c_min)
    above = np.nonzero(c > 1e3 * floor)[0]
    if len(above) == 0:
        raise WindowCollapse("entire series sits below the usable floor")
    t_hi = float(t[above[-1]])
    m = (t >= t_lo) & (t <= t_hi)
    if np.count_nonzero(m) < 10:
        raise WindowCollapse(
            f"fit window [{t_lo:.4g}, {t_hi:.4g}] holds fewer than 10 samples; "
            "increase t_end"
        )
    return t_lo, t_hi

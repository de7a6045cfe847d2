"""Baseline extreme value index estimators: Hill, moment, and Hill-plot series.

The canonical Hill implementation is the ratio-of-means form: the mean of
threshold log-excesses divided by the mean of exceedance indicators. For
tie-free samples this coincides with the textbook average of the top-k
log-spacings; sharing the ratio form with the transferred estimators keeps
their degenerate fallbacks bit-for-bit identical to the baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    EstimationError,
    EviEstimate,
    Method,
    log_excess_indicators,
    threshold_at,
)

__all__ = [
    "HillPlotSeries",
    "hill",
    "moment",
    "hill_plot",
    "moment_from_log_moments",
]


def _ratio_of_means(excess: np.ndarray, indicator: np.ndarray) -> tuple[float, int]:
    """Mean excess over mean indicator, with the realized exceedance count."""
    denom = indicator.mean()
    if denom == 0.0:
        raise EstimationError("no exceedances")
    return float(excess.mean() / denom), int(round(indicator.sum()))


def moment_from_log_moments(m1: float, m2: float, strict: bool = True) -> float:
    """Combine first and second log-excess moments into the moment estimate.

    Returns m1 + 1 - 0.5 / (1 - m1**2 / m2). With ``strict`` (the baseline
    path) any non-positive 1 - m1**2/m2 is rejected, since the Cauchy-Schwarz
    inequality makes negatives impossible up to rounding and zero means all
    log-excesses were equal. The transferred path passes ``strict=False``
    because control-variate corrections can legitimately push the ratio past
    one; only an exactly singular denominator is rejected there.
    """
    if m2 == 0.0:
        raise EstimationError("moment estimator undefined")
    denom = 1.0 - (m1 * m1) / m2
    if denom == 0.0 or (strict and denom <= 0.0):
        raise EstimationError("moment estimator undefined")
    return m1 + 1.0 - 0.5 / denom


def hill(sample, k: int) -> EviEstimate:
    """Hill estimator of the extreme value index.

    Parameters
    ----------
    sample : array-like of float
        Raw observations; the threshold is taken inside.
    k : int
        Number of extremes, 1 <= k <= n - 1; the threshold (the (n-k)-th
        order statistic) must be positive.

    Returns
    -------
    EviEstimate
        ``value`` is the mean log-excess over the strict exceedance fraction;
        ``variance_estimate`` is the asymptotic value**2 / k_eff.
    """
    threshold = threshold_at(sample, k)
    excess, indicator = log_excess_indicators(sample, threshold)
    value, k_eff = _ratio_of_means(excess, indicator)
    return EviEstimate(
        value=value, method=Method.HILL, k=int(k), k_eff=k_eff,
        variance_estimate=value * value / k_eff,
    )


def moment(sample, k: int) -> EviEstimate:
    """Moment estimator of the extreme value index (valid for index > -1/2).

    Uses the first and second empirical log-excess moments over the strict
    exceedance set. No variance estimate is attached.
    """
    threshold = threshold_at(sample, k)
    excess, indicator = log_excess_indicators(sample, threshold)
    m1, k_eff = _ratio_of_means(excess, indicator)
    m2 = float((excess * excess).mean() / indicator.mean())
    value = moment_from_log_moments(m1, m2, strict=True)
    return EviEstimate(value=value, method=Method.MOMENT, k=int(k), k_eff=k_eff)


@dataclass(frozen=True)
class HillPlotSeries:
    """Hill estimates across a grid of k values; failures are NaN entries."""

    k_values: np.ndarray
    estimates: np.ndarray

    def __post_init__(self):
        k_values = np.asarray(self.k_values, dtype=int)
        estimates = np.asarray(self.estimates, dtype=float)
        if k_values.size != estimates.size:
            raise ValueError("k_values and estimates must have equal length")
        if k_values.size == 0:
            raise ValueError("empty k range")
        if np.any(np.diff(k_values) <= 0):
            raise ValueError("k_values must be strictly increasing")
        object.__setattr__(self, "k_values", k_values)
        object.__setattr__(self, "estimates", estimates)


def hill_plot(sample, k_min: int, k_max: int, step: int = 1) -> HillPlotSeries:
    """Hill estimates for k in [k_min, k_max] with the given step.

    Individual k values where the estimator degenerates (tied thresholds with
    no strict exceedances) are recorded as NaN rather than aborting the series.
    """
    arr = np.asarray(sample, dtype=float)
    n = arr.size
    if step < 1:
        raise ValueError("step must be positive")
    if not 1 <= k_min <= k_max <= n - 1:
        raise EstimationError("invalid k")
    k_values = np.arange(int(k_min), int(k_max) + 1, int(step))
    if k_values.size == 0:
        raise ValueError("empty k range")
    estimates = np.empty(k_values.size)
    for i, k in enumerate(k_values):
        try:
            estimates[i] = hill(arr, int(k)).value
        except EstimationError:
            estimates[i] = np.nan
    return HillPlotSeries(k_values=k_values, estimates=estimates)

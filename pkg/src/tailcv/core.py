"""Domain types, order statistics, and control-variate variable construction.

The semi-supervised layout couples a scarce target sample with an abundant
source sample: n index-aligned (target, source) pairs plus m extra source-only
observations. All estimators in this package operate on peaks over a random
threshold, the (n-k)-th ascending order statistic, with strict exceedance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "EstimationError",
    "SemiSupervisedDataset",
    "CvVariables",
    "Method",
    "TransferCoefficients",
    "EviEstimate",
    "order_statistics",
    "threshold_at",
    "log_excess_indicators",
    "build_cv_variables",
]


class EstimationError(ValueError):
    """Estimator input or intermediate quantity is degenerate."""


def _readonly_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SemiSupervisedDataset:
    """Coupled (target, source) pairs plus extra unpaired source observations.

    Attributes
    ----------
    paired_target : array of shape (n,)
        Target observations, index-aligned with ``paired_source``.
    paired_source : array of shape (n,)
        Source observations coupled to the target.
    extra_source : array of shape (m,)
        Additional source-only observations; may be empty.
    """

    paired_target: np.ndarray
    paired_source: np.ndarray
    extra_source: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        object.__setattr__(self, "paired_target",
                           _readonly_vector(self.paired_target, "paired_target"))
        object.__setattr__(self, "paired_source",
                           _readonly_vector(self.paired_source, "paired_source"))
        object.__setattr__(self, "extra_source",
                           _readonly_vector(self.extra_source, "extra_source"))
        if self.paired_target.size != self.paired_source.size:
            raise ValueError("paired_target and paired_source must have equal length")
        if self.paired_target.size < 2:
            raise ValueError("need at least 2 coupled observations")

    @property
    def n(self) -> int:
        return self.paired_target.size

    @property
    def m(self) -> int:
        return self.extra_source.size

    def all_source(self) -> np.ndarray:
        """All n + m source observations, coupled ones first."""
        return np.concatenate([self.paired_source, self.extra_source])


@dataclass(frozen=True)
class CvVariables:
    """Control-variate variables built from a semi-supervised dataset.

    Target side (length n): ``a`` holds log-excesses over the target threshold,
    ``c`` the 0/1 exceedance indicators, and ``g = a**2``. Source side (length
    n + m, coupled entries first): ``b``, ``d``, ``h`` are the analogues over
    the source threshold, which is fixed from the n coupled source values.
    """

    a: np.ndarray
    c: np.ndarray
    g: np.ndarray
    b: np.ndarray
    d: np.ndarray
    h: np.ndarray
    target_threshold: float
    source_threshold: float
    k_target: int
    k_source: int

    def __post_init__(self):
        for name in ("a", "c", "g", "b", "d", "h"):
            object.__setattr__(self, name, _readonly_vector(getattr(self, name), name))
        if not (self.a.size == self.c.size == self.g.size):
            raise ValueError("a, c, g must have equal length")
        if not (self.b.size == self.d.size == self.h.size):
            raise ValueError("b, d, h must have equal length")
        if self.b.size < self.a.size:
            raise ValueError("source side cannot be shorter than target side")
        for ind, name in ((self.c, "c"), (self.d, "d")):
            if not np.all((ind == 0.0) | (ind == 1.0)):
                raise ValueError(f"{name} entries must be exactly 0 or 1")
        if np.any(self.a < 0) or np.any((self.a > 0) & (self.c == 0.0)):
            raise ValueError("a must be non-negative and supported on c == 1")
        if not np.array_equal(self.g, self.a * self.a):
            raise ValueError("g must equal a**2 elementwise")
        if not np.array_equal(self.h, self.b * self.b):
            raise ValueError("h must equal b**2 elementwise")

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def m(self) -> int:
        return self.b.size - self.a.size


class Method(Enum):
    """Estimator identity attached to an EviEstimate."""

    HILL = "hill"
    MOMENT = "moment"
    TRANSFERRED_HILL = "transferred_hill"
    TRANSFERRED_MOMENT = "transferred_moment"

    @property
    def is_transferred(self) -> bool:
        return self in (Method.TRANSFERRED_HILL, Method.TRANSFERRED_MOMENT)

    @property
    def baseline(self) -> "Method":
        """The untransferred counterpart of a transferred method."""
        return {
            Method.TRANSFERRED_HILL: Method.HILL,
            Method.TRANSFERRED_MOMENT: Method.MOMENT,
        }.get(self, self)


@dataclass(frozen=True)
class TransferCoefficients:
    """Fitted control-variate coefficients recorded on a transferred estimate.

    ``alpha``/``beta`` correct the first-moment numerator/denominator pair;
    ``alpha_prime``/``beta_prime`` correct the second-moment pair and are only
    present for the transferred moment estimator. A degenerate flag means the
    corresponding pair was forced to zero (baseline fallback).
    """

    alpha: float
    beta: float
    alpha_prime: float | None = None
    beta_prime: float | None = None
    degenerate: bool = False
    degenerate_second: bool | None = None


@dataclass(frozen=True)
class EviEstimate:
    """An extreme value index estimate with its method and diagnostics.

    ``k`` is the requested number of extremes; ``k_eff`` the realized strict
    exceedance count (equal to k for tie-free samples). ``coefficients`` is
    present exactly for transferred methods. ``variance_estimate`` is the
    asymptotic plug-in variance where the method provides one (Hill-type
    estimators), clipped at zero.
    """

    value: float
    method: Method
    k: int
    k_eff: int
    coefficients: TransferCoefficients | None = None
    variance_estimate: float | None = None

    def __post_init__(self):
        if (self.coefficients is not None) != self.method.is_transferred:
            raise ValueError("coefficients present iff the method is transferred")
        if self.variance_estimate is not None and self.variance_estimate < 0:
            raise ValueError("variance_estimate must be non-negative")


def order_statistics(sample) -> np.ndarray:
    """Ascending order statistics of a sample.

    Parameters
    ----------
    sample : array-like of float
        Non-empty sample with finite entries.

    Returns
    -------
    np.ndarray
        Sorted copy, non-decreasing.
    """
    arr = np.asarray(sample, dtype=float)
    if arr.size == 0:
        raise EstimationError("empty sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains non-finite entries")
    return np.sort(arr)


def threshold_at(sample, k: int) -> float:
    """The (n-k)-th ascending order statistic, used as the random threshold.

    Parameters
    ----------
    sample : array-like of float
    k : int
        Number of extremes, 1 <= k <= n - 1.
    """
    arr = order_statistics(sample)
    n = arr.size
    if not 1 <= int(k) <= n - 1:
        raise EstimationError("invalid k")
    return float(arr[n - int(k) - 1])


def log_excess_indicators(values, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Log-excesses over a positive threshold and strict exceedance indicators.

    Parameters
    ----------
    values : array-like of float
    threshold : float
        Must be positive; values at or below it contribute zeros.

    Returns
    -------
    (excess, indicator) : tuple of np.ndarray
        ``indicator`` is 1.0 where value > threshold, else 0.0; ``excess`` is
        ln(value) - ln(threshold) there and exactly 0.0 elsewhere.
    """
    if threshold <= 0:
        raise EstimationError("log-transform undefined")
    arr = np.asarray(values, dtype=float)
    mask = arr > threshold
    excess = np.zeros(arr.shape)
    if mask.any():
        excess[mask] = np.log(arr[mask]) - np.log(threshold)
    return excess, mask.astype(float)


def build_cv_variables(dataset: SemiSupervisedDataset, k: int,
                       k_source: int | None = None) -> CvVariables:
    """Construct the control-variate variables from a dataset.

    The target threshold is the (n-k)-th order statistic of the coupled target
    sample; the source threshold is the (n-k_source)-th order statistic of the
    n coupled source values (never of all n + m), and the source-side
    variables are then evaluated over all n + m source observations.

    Parameters
    ----------
    dataset : SemiSupervisedDataset
    k : int
        Number of target extremes, 1 <= k <= n - 1.
    k_source : int, optional
        Number of source extremes; defaults to k.

    Returns
    -------
    CvVariables
    """
    if k_source is None:
        k_source = k
    target_threshold = threshold_at(dataset.paired_target, k)
    source_threshold = threshold_at(dataset.paired_source, k_source)
    a, c = log_excess_indicators(dataset.paired_target, target_threshold)
    b, d = log_excess_indicators(dataset.all_source(), source_threshold)
    return CvVariables(
        a=a, c=c, g=a * a, b=b, d=d, h=b * b,
        target_threshold=target_threshold,
        source_threshold=source_threshold,
        k_target=int(k), k_source=int(k_source),
    )

"""Control-variates engine for ratio-of-means estimators.

Implements the exact control-variate coefficient for a single mean, the
jointly optimized coefficient pair for an approximate-control-variate (ACV)
correction of both the numerator and the denominator of a ratio of means, the
corrected ratio itself, and a plug-in formula for the variance reduction it
achieves. The auxiliary (source) mean is approximate because it is estimated
from the larger n + m sample rather than known exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CvVariables, EstimationError

__all__ = [
    "AcvCoefficients",
    "MomentStatistics",
    "moment_statistics",
    "cv_coefficient",
    "acv_ratio_coefficients",
    "corrected_ratio",
    "acv_ratio_estimate",
    "variance_difference_plugin",
]

# Relative Gram-determinant floor and indicator-correlation ceiling below/above
# which the coefficient system is treated as singular.
DETERMINANT_RTOL = 1e-12
CORRELATION_CEILING = 1.0 - 1e-10


@dataclass(frozen=True)
class AcvCoefficients:
    """Optimized ACV coefficient pair for a ratio of means.

    ``alpha`` corrects the numerator mean, ``beta`` the denominator mean.
    ``determinant`` is Var(b)Var(d) - Cov(b,d)**2 from the plug-in moments.
    When ``degenerate`` is true both coefficients are zero and the corrected
    ratio falls back to the baseline ratio exactly.
    """

    alpha: float
    beta: float
    determinant: float
    degenerate: bool

    def __post_init__(self):
        if self.degenerate and (self.alpha != 0.0 or self.beta != 0.0):
            raise ValueError("degenerate coefficients must be zero")


@dataclass(frozen=True)
class MomentStatistics:
    """Plug-in means and covariance matrix of jointly observed sequences.

    ``covariance`` uses the n-1 divisor; its diagonal holds the variances.
    """

    means: np.ndarray
    covariance: np.ndarray
    count: int

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.covariance)


def moment_statistics(*sequences) -> MomentStatistics:
    """Sample means and covariance matrix (n-1 divisor) of aligned sequences.

    All sequences must have the same length, at least 2.
    """
    if not sequences:
        raise ValueError("at least one sequence required")
    arrays = [np.asarray(s, dtype=float) for s in sequences]
    count = arrays[0].size
    if any(arr.size != count for arr in arrays):
        raise ValueError("sequences must have equal length")
    if count < 2:
        raise ValueError("need at least 2 observations")
    stacked = np.vstack(arrays)
    covariance = np.atleast_2d(np.cov(stacked, ddof=1))
    return MomentStatistics(means=stacked.mean(axis=1), covariance=covariance,
                            count=count)


def cv_coefficient(a, b) -> float:
    """Exact control-variate coefficient Cov(a, b) / Var(b).

    This is the variance-minimizing coefficient for correcting the mean of
    ``a`` with a control ``b`` of known mean, estimated with n-1 divisors.
    """
    stats = moment_statistics(a, b)
    var_b = stats.covariance[1, 1]
    if var_b == 0.0:
        raise EstimationError("degenerate control variate")
    return float(stats.covariance[0, 1] / var_b)


def acv_ratio_coefficients(a, b, c, d, r_plugin: float) -> AcvCoefficients:
    """Jointly optimized ACV coefficients for the ratio mean(a)/mean(c).

    The four sequences are the coupled observations of the numerator variable
    ``a``, its source-side control ``b``, the denominator variable ``c``, and
    its control ``d``. ``r_plugin`` is the plug-in value of the ratio itself
    (the baseline estimate), which enters both optimal coefficients.

    Returns a degenerate (zero) pair when the control Gram matrix is singular
    to relative tolerance 1e-12, when the controls are numerically perfectly
    correlated, or when ``r_plugin`` is zero (the beta formula divides by it).
    """
    stats = moment_statistics(a, b, c, d)
    if stats.count < 3:
        raise ValueError("need at least 3 coupled observations")
    if not np.any(np.asarray(c, dtype=float)):
        raise EstimationError("no exceedances")
    cov = stats.covariance
    var_b, var_d = cov[1, 1], cov[3, 3]
    cov_ab, cov_ad = cov[0, 1], cov[0, 3]
    cov_bc, cov_bd = cov[1, 2], cov[1, 3]
    cov_cd = cov[2, 3]
    determinant = var_b * var_d - cov_bd * cov_bd
    degenerate = (
        determinant <= DETERMINANT_RTOL * var_b * var_d
        or abs(cov_bd) >= CORRELATION_CEILING * np.sqrt(var_b * var_d)
        or r_plugin == 0.0
    )
    if degenerate:
        return AcvCoefficients(alpha=0.0, beta=0.0, determinant=float(determinant),
                               degenerate=True)
    r = float(r_plugin)
    alpha = (var_d * cov_ab - r * var_d * cov_bc
             + r * cov_bd * cov_cd - cov_bd * cov_ad) / determinant
    beta = (cov_bd * cov_ab - r * cov_bd * cov_bc
            + r * var_b * cov_cd - var_b * cov_ad) / (r * determinant)
    return AcvCoefficients(alpha=float(alpha), beta=float(beta),
                           determinant=float(determinant), degenerate=False)


def corrected_ratio(numerator_coupled, numerator_all, denominator_coupled,
                    denominator_all, coefficients: AcvCoefficients) -> float:
    """ACV-corrected ratio of means.

    Each mean over the n coupled observations is shifted by its coefficient
    times the difference between the full-sample (n + m) mean of its control
    and the coupled-sample mean; with m = 0 or zero coefficients the shift is
    exactly 0.0 and the baseline ratio is returned bit-for-bit.
    """
    num_coupled = np.asarray(numerator_coupled, dtype=float)
    num_all = np.asarray(numerator_all, dtype=float)
    den_coupled = np.asarray(denominator_coupled, dtype=float)
    den_all = np.asarray(denominator_all, dtype=float)
    n = num_coupled.size
    numerator = num_coupled.mean() + coefficients.alpha * (
        num_all.mean() - num_all[:n].mean())
    denominator = den_coupled.mean() + coefficients.beta * (
        den_all.mean() - den_all[:n].mean())
    if denominator == 0.0:
        raise EstimationError("degenerate denominator")
    return float(numerator / denominator)


def acv_ratio_estimate(variables: CvVariables, coefficients: AcvCoefficients) -> float:
    """The ACV/ACV ratio estimate on a built set of control-variate variables.

    Evaluates (mean(a) + alpha*(mean(b over n+m) - mean(b over n))) over the
    analogous denominator expression in (c, d).
    """
    return corrected_ratio(variables.a, variables.b, variables.c, variables.d,
                           coefficients)


def variance_difference_plugin(variables: CvVariables, gamma_hat: float) -> float:
    """Plug-in estimate of the variance reduction of the corrected ratio.

    Estimates Var(baseline Hill) - Var(transferred Hill) as

        m / (n (n+m)) * Var(s_d * d - s_b * b) / (mean(c)**2 * det)

    with s_d = gamma_hat*Cov(b,c) - Cov(a,b), s_b = gamma_hat*Cov(c,d) -
    Cov(a,d), det = Var(b)Var(d) - Cov(b,d)**2, all moments estimated with
    n-1 divisors over the n coupled observations. The result can be negative
    for unstable small-exceedance inputs; callers that need a variance
    estimate should clip, while threshold scans report negatives as-is.
    """
    n = variables.n
    m = variables.m
    a, c = variables.a, variables.c
    b, d = variables.b[:n], variables.d[:n]
    mean_c = c.mean()
    if mean_c == 0.0:
        raise EstimationError("no exceedances")
    cov = moment_statistics(a, b, c, d).covariance
    var_b, var_d, cov_bd = cov[1, 1], cov[3, 3], cov[1, 3]
    determinant = var_b * var_d - cov_bd * cov_bd
    if (determinant <= DETERMINANT_RTOL * var_b * var_d
            or abs(cov_bd) >= CORRELATION_CEILING * np.sqrt(var_b * var_d)):
        raise EstimationError("degenerate control variate")
    s_d = gamma_hat * cov[1, 2] - cov[0, 1]
    s_b = gamma_hat * cov[2, 3] - cov[0, 3]
    combination = s_d * d - s_b * b
    spread = float(np.var(combination, ddof=1))
    return float(m / (n * (n + m)) * spread / (mean_c * mean_c * determinant))

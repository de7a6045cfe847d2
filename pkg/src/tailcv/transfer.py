"""Transferred estimators: variance-reduced Hill and moment via source data.

Both estimators write the baseline as a ratio of means on the target sample
and correct numerator and denominator with approximate control variates built
from the correlated source sample, exploiting the m extra unpaired source
observations. Coefficients are estimated in-sample; when their Gram system is
degenerate the correction is dropped and the baseline value is returned
bit-for-bit.
"""

from __future__ import annotations

from .acv import acv_ratio_coefficients, corrected_ratio, variance_difference_plugin
from .core import (
    CvVariables,
    EviEstimate,
    Method,
    SemiSupervisedDataset,
    TransferCoefficients,
    build_cv_variables,
)
from .estimators import _ratio_of_means, moment_from_log_moments

__all__ = [
    "transferred_hill",
    "transferred_hill_from_variables",
    "transferred_moment",
    "transferred_moment_from_variables",
]


def transferred_hill_from_variables(variables: CvVariables) -> EviEstimate:
    """Transferred Hill estimate from pre-built control-variate variables."""
    n = variables.n
    a, c = variables.a, variables.c
    r_plugin, k_eff = _ratio_of_means(a, c)
    coefficients = acv_ratio_coefficients(a, variables.b[:n], c, variables.d[:n],
                                          r_plugin)
    value = corrected_ratio(a, variables.b, c, variables.d, coefficients)
    base_variance = r_plugin * r_plugin / k_eff
    if coefficients.degenerate:
        variance = base_variance
    else:
        variance = base_variance - variance_difference_plugin(variables, r_plugin)
    record = TransferCoefficients(alpha=coefficients.alpha, beta=coefficients.beta,
                                  degenerate=coefficients.degenerate)
    return EviEstimate(
        value=value, method=Method.TRANSFERRED_HILL, k=variables.k_target,
        k_eff=k_eff, coefficients=record,
        variance_estimate=max(variance, 0.0),
    )


def transferred_hill(dataset: SemiSupervisedDataset, k: int,
                     k_source: int | None = None) -> EviEstimate:
    """Variance-reduced Hill estimator using a correlated source sample.

    Parameters
    ----------
    dataset : SemiSupervisedDataset
        n coupled (target, source) pairs plus m extra source observations.
    k : int
        Number of target extremes.
    k_source : int, optional
        Number of source extremes used for the source threshold; defaults
        to k.

    Returns
    -------
    EviEstimate
        The corrected ratio of means with the fitted (alpha, beta) recorded;
        ``variance_estimate`` is the baseline plug-in variance minus the
        plug-in variance reduction, clipped at zero. With m = 0 or a
        degenerate coefficient system the value equals ``hill`` on the
        coupled target sample exactly.
    """
    variables = build_cv_variables(dataset, k, k_source)
    return transferred_hill_from_variables(variables)


def transferred_moment_from_variables(variables: CvVariables) -> EviEstimate:
    """Transferred moment estimate from pre-built control-variate variables."""
    n = variables.n
    a, c, g = variables.a, variables.c, variables.g
    b_coupled, d_coupled = variables.b[:n], variables.d[:n]
    h_coupled = variables.h[:n]
    m1_plugin, k_eff = _ratio_of_means(a, c)
    m2_plugin, _ = _ratio_of_means(g, c)
    first = acv_ratio_coefficients(a, b_coupled, c, d_coupled, m1_plugin)
    second = acv_ratio_coefficients(g, h_coupled, c, d_coupled, m2_plugin)
    m1_corrected = corrected_ratio(a, variables.b, c, variables.d, first)
    m2_corrected = corrected_ratio(g, variables.h, c, variables.d, second)
    value = moment_from_log_moments(m1_corrected, m2_corrected, strict=False)
    record = TransferCoefficients(
        alpha=first.alpha, beta=first.beta,
        alpha_prime=second.alpha, beta_prime=second.beta,
        degenerate=first.degenerate, degenerate_second=second.degenerate,
    )
    return EviEstimate(value=value, method=Method.TRANSFERRED_MOMENT,
                       k=variables.k_target, k_eff=k_eff, coefficients=record)


def transferred_moment(dataset: SemiSupervisedDataset, k: int,
                       k_source: int | None = None) -> EviEstimate:
    """Variance-reduced moment estimator using a correlated source sample.

    The first log-moment is corrected with coefficients optimized for it and
    the second log-moment with its own pair (alpha_prime, beta_prime); the two
    corrected moments are then combined exactly as in the baseline moment
    estimator. Per-moment optimization is deliberate: jointly optimal
    coefficients for the combined statistic are not attempted, so the total
    variance can occasionally increase. Each pair falls back to zero
    independently when degenerate; if both degenerate (or m = 0) the value
    equals ``moment`` on the coupled target sample exactly.
    """
    variables = build_cv_variables(dataset, k, k_source)
    return transferred_moment_from_variables(variables)

"""Dependence diagnostics and the asymptotic variance-reduction calculator.

The transfer gain is driven by upper-tail dependence between target and
source. This module estimates the tail-dependence coefficient, the Pearson
correlations between the control-variate variables, and an asymptotic
approximation of the relative variance reduction (RVR) of the transferred
Hill estimator built from conditional moments of scaled log-excesses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CvVariables,
    EstimationError,
    SemiSupervisedDataset,
    threshold_at,
)
from .estimators import hill

__all__ = [
    "DependenceReport",
    "tail_dependence",
    "cv_correlations",
    "asymptotic_rvr",
    "asymptotic_rvr_formula",
    "dependence_report",
]


@dataclass(frozen=True)
class DependenceReport:
    """Diagnostics of target-source tail dependence.

    ``lambda_hat`` is the joint-exceedance frequency over k and is reported
    unclipped (under ties it can exceed 1; ``lambda_clipped`` flags that).
    ``corr_ab``/``corr_cd`` are Pearson correlations of the log-excess and
    indicator variable pairs over the coupled sample. ``c_ab_hat`` and
    ``c_ad_hat`` are the conditional scaled log-excess moments entering the
    asymptotic RVR formula (NaN when no joint exceedances exist). ``p_hat``
    is the realized target exceedance fraction k_eff / n.
    """

    lambda_hat: float
    corr_ab: float
    corr_cd: float
    c_ad_hat: float
    c_ab_hat: float
    p_hat: float
    lambda_clipped: bool = False


def tail_dependence(paired_target, paired_source, k: int) -> float:
    """Empirical upper-tail dependence of a coupled sample.

    Counts indices where both coordinates strictly exceed their own (n-k)-th
    order statistic and divides by k. Rank-based: invariant under strictly
    increasing transforms of either margin. Bounded by n/k; values above 1
    are possible under ties and are not clipped here.
    """
    target = np.asarray(paired_target, dtype=float)
    source = np.asarray(paired_source, dtype=float)
    if target.size != source.size:
        raise ValueError("paired samples must have equal length")
    target_threshold = threshold_at(target, k)
    source_threshold = threshold_at(source, k)
    joint = (target > target_threshold) & (source > source_threshold)
    return float(joint.sum() / int(k))


def cv_correlations(variables: CvVariables) -> tuple[float, float]:
    """Pearson correlations (corr(a, b), corr(c, d)) over the coupled sample."""
    n = variables.n
    pairs = (
        (variables.a, variables.b[:n]),
        (variables.c, variables.d[:n]),
    )
    out = []
    for x, y in pairs:
        if np.var(x) == 0.0 or np.var(y) == 0.0:
            raise EstimationError("degenerate control variate")
        out.append(float(np.corrcoef(x, y)[0, 1]))
    return out[0], out[1]


def asymptotic_rvr_formula(lambda_hat: float, p: float, c_ab: float,
                           c_ad: float, n: int, m: int) -> float:
    """Closed-form asymptotic RVR of the transferred Hill estimator.

    Evaluates

        lambda_hat**2 * (m / (n + m))
            * (c_ab**2 + c_ad**2 * (2 - p) / (1 - p) - c_ab * c_ad)

    where p = k/n is the exceedance probability. The m/(n+m) prefactor is the
    variance-difference scale m/(n(n+m)) divided by the baseline variance,
    whose 1/k normalization cancels the remaining 1/p = n/k factor. Exactly
    proportional to lambda_hat**2 and exactly 0 for m = 0.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if m == 0:
        return 0.0
    shape = c_ab * c_ab + c_ad * c_ad * (2.0 - p) / (1.0 - p) - c_ab * c_ad
    return float(lambda_hat * lambda_hat * (m / (n + m)) * shape)


def _joint_scaled_excess_moments(dataset: SemiSupervisedDataset, k: int,
                                 k_source: int, gamma_t_hat: float,
                                 gamma_s_hat: float) -> tuple[float, float, int]:
    """Conditional moments (c_ab, c_ad) of scaled log-excesses, joint count.

    Over indices where both coupled coordinates strictly exceed their
    thresholds, z_t and z_s are the log-excesses scaled by the respective
    index estimates; c_ad = mean(z_t - 1) and c_ab = mean((z_t - 1) * z_s).
    """
    target = dataset.paired_target
    source = dataset.paired_source
    target_threshold = threshold_at(target, k)
    source_threshold = threshold_at(source, k_source)
    if target_threshold <= 0 or source_threshold <= 0:
        raise EstimationError("log-transform undefined")
    joint = (target > target_threshold) & (source > source_threshold)
    count = int(joint.sum())
    if count == 0:
        raise EstimationError("tail dependence too weak to estimate")
    z_t = (np.log(target[joint]) - np.log(target_threshold)) / gamma_t_hat
    z_s = (np.log(source[joint]) - np.log(source_threshold)) / gamma_s_hat
    c_ad = float((z_t - 1.0).mean())
    c_ab = float(((z_t - 1.0) * z_s).mean())
    return c_ab, c_ad, count


def _resolve_gamma_hats(dataset: SemiSupervisedDataset, k: int, k_source: int,
                        gamma_t_hat: float | None,
                        gamma_s_hat: float | None) -> tuple[float, float]:
    # Defaults are the Hill estimates on the coupled samples so the
    # diagnostics never depend on the m extra observations.
    if gamma_t_hat is None:
        gamma_t_hat = hill(dataset.paired_target, k).value
    if gamma_s_hat is None:
        gamma_s_hat = hill(dataset.paired_source, k_source).value
    if gamma_t_hat <= 0 or gamma_s_hat <= 0:
        raise ValueError("scaled log-excesses need positive index estimates")
    return float(gamma_t_hat), float(gamma_s_hat)


def asymptotic_rvr(dataset: SemiSupervisedDataset, k: int,
                   k_source: int | None = None,
                   gamma_t_hat: float | None = None,
                   gamma_s_hat: float | None = None) -> float:
    """Asymptotic RVR of the transferred Hill estimator, from data.

    Estimates tail dependence, the conditional scaled log-excess moments, and
    evaluates :func:`asymptotic_rvr_formula` with the nominal p = k/n. The
    tail-dependence estimate is clipped at 1 before squaring. Applies to
    heavy-tailed sources (positive source index estimate).

    Parameters
    ----------
    dataset : SemiSupervisedDataset
    k, k_source : int
        Numbers of target and source extremes (k_source defaults to k).
    gamma_t_hat, gamma_s_hat : float, optional
        Index estimates used to scale the log-excesses; default to the Hill
        estimates on the coupled target and source samples.
    """
    if k_source is None:
        k_source = k
    gamma_t_hat, gamma_s_hat = _resolve_gamma_hats(dataset, k, k_source,
                                                   gamma_t_hat, gamma_s_hat)
    c_ab, c_ad, _ = _joint_scaled_excess_moments(dataset, k, k_source,
                                                 gamma_t_hat, gamma_s_hat)
    lambda_hat = tail_dependence(dataset.paired_target, dataset.paired_source, k)
    return asymptotic_rvr_formula(min(lambda_hat, 1.0), int(k) / dataset.n,
                                  c_ab, c_ad, dataset.n, dataset.m)


def dependence_report(dataset: SemiSupervisedDataset, k: int,
                      k_source: int | None = None,
                      gamma_t_hat: float | None = None,
                      gamma_s_hat: float | None = None) -> DependenceReport:
    """Assemble the full dependence diagnostics for a dataset.

    The conditional moments are NaN when there are no joint exceedances
    (weak-dependence samples); all other fields are always populated.
    """
    from .core import build_cv_variables

    if k_source is None:
        k_source = k
    variables = build_cv_variables(dataset, k, k_source)
    corr_ab, corr_cd = cv_correlations(variables)
    lambda_hat = tail_dependence(dataset.paired_target, dataset.paired_source, k)
    k_eff = int(round(variables.c.sum()))
    try:
        gamma_t_hat, gamma_s_hat = _resolve_gamma_hats(dataset, k, k_source,
                                                       gamma_t_hat, gamma_s_hat)
        c_ab, c_ad, _ = _joint_scaled_excess_moments(dataset, k, k_source,
                                                     gamma_t_hat, gamma_s_hat)
    except (EstimationError, ValueError):
        c_ab, c_ad = float("nan"), float("nan")
    return DependenceReport(
        lambda_hat=lambda_hat, corr_ab=corr_ab, corr_cd=corr_cd,
        c_ad_hat=c_ad, c_ab_hat=c_ab, p_hat=k_eff / dataset.n,
        lambda_clipped=lambda_hat > 1.0,
    )

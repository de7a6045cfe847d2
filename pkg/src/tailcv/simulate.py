"""Synthetic data generation and the replicated variance-reduction study.

Coupled (target, source) pairs are drawn from a Gumbel copula with Pareto,
standard normal, or Beta marginals; m extra source observations come from
fresh uniforms through the same source marginal. The experiment runner
replicates dataset generation and estimation, reporting empirical variances,
relative variance reduction (RVR) per estimator pair, and averaged dependence
diagnostics. Every random draw is a pure function of (seed, replication
index, variable role) through counter-based Philox streams, so replications
can run in any order or in parallel with bit-identical results.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.special import ndtr, ndtri

from .acv import variance_difference_plugin
from .core import (
    EstimationError,
    Method,
    SemiSupervisedDataset,
    build_cv_variables,
)
from .dependence import (
    DependenceReport,
    _joint_scaled_excess_moments,
    _resolve_gamma_hats,
    asymptotic_rvr_formula,
    cv_correlations,
    tail_dependence,
)
from .estimators import _ratio_of_means, hill, moment, moment_from_log_moments
from .transfer import (
    transferred_hill_from_variables,
    transferred_moment_from_variables,
)

__all__ = [
    "Marginal",
    "marginal_quantile",
    "marginal_for_evi",
    "sample_gumbel_copula",
    "ExperimentConfig",
    "generate_dataset",
    "EstimatorSummary",
    "RvrPair",
    "RvrReport",
    "run_rvr_experiment",
    "ThresholdScanPoint",
    "source_threshold_scan",
    "BootstrapResult",
    "bootstrap_study",
    "WORKERS_ENV_VAR",
]

WORKERS_ENV_VAR = "TAILCV_WORKERS"

# Variable roles keying the per-replication RNG streams.
_ROLE_COUPLED = 0
_ROLE_EXTRA = 1
_ROLE_BOOTSTRAP = 2

DEFAULT_ESTIMATORS = (Method.HILL, Method.MOMENT,
                      Method.TRANSFERRED_HILL, Method.TRANSFERRED_MOMENT)


def _stream(seed: int, index: int, role: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, replication index, role)."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(index, role))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass(frozen=True)
class Marginal:
    """Marginal distribution specification for data generation.

    Families: "pareto" with tail index ``gamma`` > 0 and left endpoint
    ``y_m`` (cdf 1 - (y/y_m)**(-1/gamma) written with the index as the
    quantile exponent: quantile y_m*(1-u)**(-gamma)); "normal" for the
    standard normal (index 0); "beta" for Beta(1, shape_b) with quantile
    1 - (1-u)**(1/shape_b) and index -1/shape_b.
    """

    family: str
    gamma: float = 1.0
    y_m: float = 1e-3
    shape_b: float = 1.0

    def __post_init__(self):
        if self.family not in ("pareto", "normal", "beta"):
            raise ValueError(f"unknown marginal family '{self.family}'")
        if self.family == "pareto" and (self.gamma <= 0 or self.y_m <= 0):
            raise ValueError("pareto marginal needs gamma > 0 and y_m > 0")
        if self.family == "beta" and self.shape_b <= 0:
            raise ValueError("beta marginal needs shape_b > 0")

    @staticmethod
    def pareto(gamma: float, y_m: float = 1e-3) -> "Marginal":
        return Marginal(family="pareto", gamma=gamma, y_m=y_m)

    @staticmethod
    def standard_normal() -> "Marginal":
        return Marginal(family="normal")

    @staticmethod
    def beta(shape_b: float) -> "Marginal":
        return Marginal(family="beta", shape_b=shape_b)

    @property
    def evi(self) -> float:
        """The extreme value index of this marginal."""
        if self.family == "pareto":
            return self.gamma
        if self.family == "normal":
            return 0.0
        return -1.0 / self.shape_b

    def quantile(self, u):
        """Quantile function at u in (0, 1); accepts arrays."""
        arr = np.asarray(u, dtype=float)
        if arr.size and (np.min(arr) <= 0.0 or np.max(arr) >= 1.0):
            raise ValueError("u must lie strictly inside (0, 1)")
        if self.family == "pareto":
            return self.y_m * (1.0 - arr) ** (-self.gamma)
        if self.family == "normal":
            return ndtri(arr)
        return 1.0 - (1.0 - arr) ** (1.0 / self.shape_b)

    def cdf(self, y):
        """Distribution function (used by round-trip checks)."""
        arr = np.asarray(y, dtype=float)
        if self.family == "pareto":
            return 1.0 - (arr / self.y_m) ** (-1.0 / self.gamma)
        if self.family == "normal":
            return ndtr(arr)
        return 1.0 - (1.0 - arr) ** self.shape_b

    def to_dict(self) -> dict:
        out = {"family": self.family}
        if self.family == "pareto":
            out.update(gamma=self.gamma, y_m=self.y_m)
        elif self.family == "beta":
            out.update(shape_b=self.shape_b)
        return out


def marginal_quantile(u, marginal: Marginal):
    """Quantile of ``marginal`` at u in (0, 1); accepts arrays."""
    return marginal.quantile(u)


def marginal_for_evi(gamma: float, y_m: float = 1e-3) -> Marginal:
    """Marginal with the requested extreme value index.

    Positive gamma gives Pareto(gamma, y_m), zero the standard normal, and
    negative gamma the bounded Beta(1, -1/gamma).
    """
    if gamma > 0:
        return Marginal.pareto(gamma, y_m)
    if gamma == 0:
        return Marginal.standard_normal()
    return Marginal.beta(-1.0 / gamma)


def sample_gumbel_copula(theta: float, count: int,
                         rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample pairs from the Gumbel copula with parameter theta >= 1.

    Uses the Marshall-Olkin frailty construction: a positive stable variate S
    of index 1/theta from the Chambers-Mallows-Stuck formula, two standard
    exponentials E1, E2, and U_i = exp(-(E_i/S)**(1/theta)). theta = 1 is the
    independence copula and is returned as plain uniforms. Outputs are nudged
    into the open interval (0, 1) by one ulp as a numeric guard (relevant
    only with probability below 1e-19 per draw).

    Returns
    -------
    (u1, u2) : pair of np.ndarray of length ``count``
    """
    if theta < 1.0:
        raise ValueError("theta must be >= 1")
    if count <= 0:
        raise ValueError("count must be positive")
    if theta == 1.0:
        u1 = rng.random(count)
        u2 = rng.random(count)
    else:
        index = 1.0 / theta
        angle = rng.uniform(0.0, np.pi, count)
        scale = rng.standard_exponential(count)
        stable = (np.sin(index * angle) / np.sin(angle) ** (1.0 / index)) * (
            np.sin((1.0 - index) * angle) / scale) ** ((1.0 - index) / index)
        e1 = rng.standard_exponential(count)
        e2 = rng.standard_exponential(count)
        u1 = np.exp(-((e1 / stable) ** index))
        u2 = np.exp(-((e2 / stable) ** index))
    lo = np.finfo(float).tiny
    hi = np.nextafter(1.0, 0.0)
    return np.clip(u1, lo, hi), np.clip(u2, lo, hi)


def _normalize_estimators(estimators) -> tuple[Method, ...]:
    methods = tuple(Method(e) for e in estimators)
    if len(set(methods)) != len(methods):
        raise ValueError("duplicate estimators requested")
    if not methods:
        raise ValueError("at least one estimator required")
    return methods


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of a replicated semi-supervised tail-estimation study.

    ``gamma_t`` is the target Pareto index (the target marginal is always
    Pareto(gamma_t, y_m)); ``source_marginal`` may be any supported family.
    ``k`` defaults to round(0.1 * n) and ``k_source`` to ``k``.
    """

    gamma_t: float
    theta: float
    n: int
    m: int
    source_marginal: Marginal
    k: int | None = None
    k_source: int | None = None
    replications: int = 1000
    seed: int = 0
    estimators: tuple[Method, ...] = DEFAULT_ESTIMATORS
    y_m: float = 1e-3

    def __post_init__(self):
        if self.gamma_t <= 0:
            raise ValueError("gamma_t must be positive")
        if self.theta < 1.0:
            raise ValueError("theta must be >= 1")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.m < 0:
            raise ValueError("m must be non-negative")
        if self.y_m <= 0:
            raise ValueError("y_m must be positive")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        k = int(round(0.1 * self.n)) if self.k is None else int(self.k)
        k_source = k if self.k_source is None else int(self.k_source)
        if not 1 <= k <= self.n - 1 or not 1 <= k_source <= self.n - 1:
            raise ValueError("invalid k")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "k_source", k_source)
        object.__setattr__(self, "estimators",
                           _normalize_estimators(self.estimators))

    @property
    def target_marginal(self) -> Marginal:
        return Marginal.pareto(self.gamma_t, self.y_m)

    def to_dict(self) -> dict:
        return {
            "gamma_t": self.gamma_t,
            "theta": self.theta,
            "n": self.n,
            "m": self.m,
            "source_marginal": self.source_marginal.to_dict(),
            "k": self.k,
            "k_source": self.k_source,
            "replications": self.replications,
            "seed": self.seed,
            "estimators": [method.value for method in self.estimators],
            "y_m": self.y_m,
        }


def generate_dataset(config: ExperimentConfig,
                     replication_index: int) -> SemiSupervisedDataset:
    """Generate one replication's dataset, deterministic in (seed, index).

    The n coupled pairs use the copula stream (role 0); the m extra source
    values use fresh uniforms from the extras stream (role 1) through the
    source marginal.
    """
    rng_pairs = _stream(config.seed, replication_index, _ROLE_COUPLED)
    u_target, u_source = sample_gumbel_copula(config.theta, config.n, rng_pairs)
    target = config.target_marginal.quantile(u_target)
    source = config.source_marginal.quantile(u_source)
    if config.m > 0:
        rng_extra = _stream(config.seed, replication_index, _ROLE_EXTRA)
        extra = config.source_marginal.quantile(rng_extra.random(config.m))
    else:
        extra = np.empty(0)
    return SemiSupervisedDataset(paired_target=target, paired_source=source,
                                 extra_source=extra)


def _nanmean(values) -> float:
    arr = np.asarray(values, dtype=float)
    mask = np.isfinite(arr)
    if not mask.any():
        return float("nan")
    return float(arr[mask].mean())


def _nanvar(values) -> float:
    arr = np.asarray(values, dtype=float)
    finite = arr[np.isfinite(arr)]
    if finite.size < 2:
        return float("nan")
    return float(np.var(finite, ddof=1))


_DIAGNOSTIC_KEYS = ("lambda_hat", "corr_ab", "corr_cd", "c_ad_hat", "c_ab_hat",
                    "p_hat", "asymptotic_rvr")


def _estimate_from_variables(method: Method, variables) -> float:
    if method is Method.HILL:
        return _ratio_of_means(variables.a, variables.c)[0]
    if method is Method.MOMENT:
        m1, _ = _ratio_of_means(variables.a, variables.c)
        m2, _ = _ratio_of_means(variables.g, variables.c)
        return moment_from_log_moments(m1, m2, strict=True)
    if method is Method.TRANSFERRED_HILL:
        return transferred_hill_from_variables(variables).value
    return transferred_moment_from_variables(variables).value


def _run_replication(config: ExperimentConfig, replication_index: int) -> dict:
    """One replication: dataset, requested estimates, dependence diagnostics."""
    dataset = generate_dataset(config, replication_index)
    record = {key: float("nan") for key in _DIAGNOSTIC_KEYS}
    variables = None
    try:
        variables = build_cv_variables(dataset, config.k, config.k_source)
    except (EstimationError, ValueError):
        pass
    for method in config.estimators:
        value = float("nan")
        try:
            if variables is not None:
                value = _estimate_from_variables(method, variables)
            elif not method.is_transferred:
                sample = dataset.paired_target
                estimator = hill if method is Method.HILL else moment
                value = estimator(sample, config.k).value
        except EstimationError:
            pass
        record[method.value] = value
    try:
        record["lambda_hat"] = tail_dependence(dataset.paired_target,
                                               dataset.paired_source, config.k)
    except (EstimationError, ValueError):
        pass
    if variables is not None:
        try:
            record["corr_ab"], record["corr_cd"] = cv_correlations(variables)
        except EstimationError:
            pass
        record["p_hat"] = float(round(variables.c.sum())) / config.n
    try:
        gamma_t_hat, gamma_s_hat = _resolve_gamma_hats(
            dataset, config.k, config.k_source, None, None)
        c_ab, c_ad, _ = _joint_scaled_excess_moments(
            dataset, config.k, config.k_source, gamma_t_hat, gamma_s_hat)
        record["c_ab_hat"], record["c_ad_hat"] = c_ab, c_ad
        lambda_hat = record["lambda_hat"]
        if math.isfinite(lambda_hat):
            record["asymptotic_rvr"] = asymptotic_rvr_formula(
                min(lambda_hat, 1.0), config.k / config.n, c_ab, c_ad,
                config.n, config.m)
    except (EstimationError, ValueError):
        pass
    return record


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    if workers < 1:
        raise ValueError("workers must be at least 1")
    return workers


def _map_replications(func, count: int, workers: int | None) -> list:
    """Apply func to 0..count-1, optionally in a process pool, in index order."""
    workers = _resolve_workers(workers)
    if workers <= 1 or count <= 1:
        return [func(index) for index in range(count)]
    chunksize = max(1, count // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, range(count), chunksize=chunksize))


@dataclass(frozen=True)
class EstimatorSummary:
    """Across-replication summary of one estimator."""

    method: Method
    mean: float
    variance: float
    bias: float
    failures: int


@dataclass(frozen=True)
class RvrPair:
    """Variance comparison of a transferred estimator against its baseline."""

    baseline: Method
    transferred: Method
    variance_baseline: float
    variance_transferred: float
    rvr: float


@dataclass(frozen=True)
class RvrReport:
    """Result of a replicated RVR experiment.

    ``estimates`` maps method names to per-replication value arrays (NaN for
    failed replications, which are excluded from the summaries and counted).
    ``dependence`` holds the per-field averages of the per-replication
    dependence diagnostics; ``asymptotic_rvr_mean`` averages the closed-form
    RVR approximation across replications.
    """

    config: ExperimentConfig
    replications: int
    estimates: dict = field(repr=False)
    summaries: dict
    pairs: tuple
    dependence: DependenceReport
    asymptotic_rvr_mean: float

    def to_dict(self) -> dict:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            return x

        return {
            "config": self.config.to_dict(),
            "replications": self.replications,
            "summaries": {
                name: {
                    "mean": clean(s.mean),
                    "variance": clean(s.variance),
                    "bias": clean(s.bias),
                    "failures": s.failures,
                }
                for name, s in self.summaries.items()
            },
            "pairs": [
                {
                    "baseline": p.baseline.value,
                    "transferred": p.transferred.value,
                    "variance_baseline": clean(p.variance_baseline),
                    "variance_transferred": clean(p.variance_transferred),
                    "rvr": clean(p.rvr),
                }
                for p in self.pairs
            ],
            "dependence": {
                "lambda_hat": clean(self.dependence.lambda_hat),
                "corr_ab": clean(self.dependence.corr_ab),
                "corr_cd": clean(self.dependence.corr_cd),
                "c_ad_hat": clean(self.dependence.c_ad_hat),
                "c_ab_hat": clean(self.dependence.c_ab_hat),
                "p_hat": clean(self.dependence.p_hat),
                "lambda_clipped": self.dependence.lambda_clipped,
            },
            "asymptotic_rvr_mean": clean(self.asymptotic_rvr_mean),
        }


def run_rvr_experiment(config: ExperimentConfig,
                       workers: int | None = None) -> RvrReport:
    """Run the replicated study and summarize variances, RVR, and diagnostics.

    Replications are independent and may run in a process pool (``workers``
    argument, else the TAILCV_WORKERS environment variable, else serial); the
    report is bit-identical for any worker count. An estimator failing in
    more than 10% of replications aborts with "unstable configuration".

    Parameters
    ----------
    config : ExperimentConfig
        Must request at least 2 replications.
    workers : int, optional
        Process count for replication-level parallelism.
    """
    if config.replications < 2:
        raise ValueError("need at least 2 replications")
    records = _map_replications(partial(_run_replication, config),
                                config.replications, workers)
    estimates = {
        method.value: np.array([rec[method.value] for rec in records])
        for method in config.estimators
    }
    summaries = {}
    for method in config.estimators:
        values = estimates[method.value]
        failures = int(np.count_nonzero(~np.isfinite(values)))
        if failures > 0.1 * config.replications:
            raise EstimationError("unstable configuration")
        mean = _nanmean(values)
        summaries[method.value] = EstimatorSummary(
            method=method, mean=mean, variance=_nanvar(values),
            bias=mean - config.gamma_t, failures=failures,
        )
    pairs = []
    for transferred in (Method.TRANSFERRED_HILL, Method.TRANSFERRED_MOMENT):
        baseline = transferred.baseline
        if transferred in config.estimators and baseline in config.estimators:
            variance_baseline = summaries[baseline.value].variance
            variance_transferred = summaries[transferred.value].variance
            rvr = (variance_baseline - variance_transferred) / variance_baseline
            pairs.append(RvrPair(
                baseline=baseline, transferred=transferred,
                variance_baseline=variance_baseline,
                variance_transferred=variance_transferred, rvr=float(rvr),
            ))
    diagnostics = {key: _nanmean([rec[key] for rec in records])
                   for key in _DIAGNOSTIC_KEYS}
    dependence = DependenceReport(
        lambda_hat=diagnostics["lambda_hat"],
        corr_ab=diagnostics["corr_ab"],
        corr_cd=diagnostics["corr_cd"],
        c_ad_hat=diagnostics["c_ad_hat"],
        c_ab_hat=diagnostics["c_ab_hat"],
        p_hat=diagnostics["p_hat"],
        lambda_clipped=bool(diagnostics["lambda_hat"] > 1.0),
    )
    return RvrReport(
        config=config, replications=config.replications, estimates=estimates,
        summaries=summaries, pairs=tuple(pairs), dependence=dependence,
        asymptotic_rvr_mean=diagnostics["asymptotic_rvr"],
    )


@dataclass(frozen=True)
class ThresholdScanPoint:
    """Distribution summary of the analytic transferred-Hill variance at one l.

    ``negative_count`` counts replications whose analytic variance estimate
    was negative (retained in the quartiles, flagged here); ``failed`` counts
    replications where the plug-in was not computable at this l.
    """

    l: int
    median: float
    q1: float
    q3: float
    negative_count: int
    failed: int


def _scan_replication(config: ExperimentConfig, l_values: tuple,
                      replication_index: int) -> np.ndarray:
    dataset = generate_dataset(config, replication_index)
    try:
        baseline = hill(dataset.paired_target, config.k)
    except EstimationError:
        return np.full(len(l_values), np.nan)
    base_variance = baseline.variance_estimate
    out = np.empty(len(l_values))
    for j, l in enumerate(l_values):
        try:
            variables = build_cv_variables(dataset, config.k, int(l))
            difference = variance_difference_plugin(variables, baseline.value)
            out[j] = base_variance - difference
        except (EstimationError, ValueError):
            out[j] = np.nan
    return out


def source_threshold_scan(config: ExperimentConfig, l_values,
                          workers: int | None = None) -> tuple:
    """Scan the source extremes count l for the analytic variance minimum.

    For each l, collects the plug-in analytic variance of the transferred
    Hill estimator (baseline plug-in variance minus the plug-in variance
    difference) across the configured replications and summarizes its
    distribution. Negative estimates are retained in the quartiles and
    counted per point.

    Returns
    -------
    tuple of ThresholdScanPoint, one per l in input order.
    """
    l_tuple = tuple(int(l) for l in l_values)
    if not l_tuple:
        raise ValueError("l_values must be non-empty")
    if any(not 1 <= l <= config.n - 1 for l in l_tuple):
        raise EstimationError("invalid k")
    rows = _map_replications(partial(_scan_replication, config, l_tuple),
                             config.replications, workers)
    matrix = np.vstack(rows)
    points = []
    for j, l in enumerate(l_tuple):
        column = matrix[:, j]
        finite = column[np.isfinite(column)]
        if finite.size:
            q1, median, q3 = np.percentile(finite, [25.0, 50.0, 75.0])
        else:
            q1 = median = q3 = float("nan")
        points.append(ThresholdScanPoint(
            l=l, median=float(median), q1=float(q1), q3=float(q3),
            negative_count=int(np.count_nonzero(finite < 0)),
            failed=int(column.size - finite.size),
        ))
    return tuple(points)


@dataclass(frozen=True)
class BootstrapResult:
    """Per-estimator value distributions across bootstrap resamples.

    ``estimates`` keeps one slot per resample (NaN where the estimator
    failed); ``successful`` gives the compacted value sequence.
    """

    estimates: dict
    failures: dict
    n_sub: int
    resamples: int
    with_replacement: bool

    def successful(self, method) -> np.ndarray:
        values = self.estimates[Method(method).value]
        return values[np.isfinite(values)]


def bootstrap_study(dataset: SemiSupervisedDataset, n_sub: int, resamples: int,
                    k: int, estimators=DEFAULT_ESTIMATORS, seed: int = 0,
                    k_source: int | None = None,
                    with_replacement: bool = False) -> BootstrapResult:
    """Subsample the coupled pool and re-estimate, mimicking scarce targets.

    Each resample draws ``n_sub`` coupled pairs from the dataset's paired
    rows (without replacement by default; a subsample) to form the coupled
    set; the source values of the remaining pairs, plus any pre-existing
    extra_source rows, become the unpaired extras. Estimator failures are
    excluded from the value sequences and counted.

    Parameters
    ----------
    dataset : SemiSupervisedDataset
        The joint pool; its n paired rows are the subsampling population.
    n_sub : int
        Coupled-set size per resample, at most the pool size.
    resamples : int
        Number of resamples.
    k : int
        Number of target extremes within each resample.
    estimators : iterable of Method or str
    seed : int
        Stream key; same seed gives identical value sequences.
    k_source : int, optional
        Source extremes count, defaulting to k.
    with_replacement : bool
        Draw the coupled set with replacement instead of subsampling.
    """
    methods = _normalize_estimators(estimators)
    pool = dataset.n
    if n_sub > pool:
        raise ValueError("n_sub exceeds the coupled pool size")
    if n_sub < 2:
        raise ValueError("n_sub must be at least 2")
    if resamples < 1:
        raise ValueError("resamples must be positive")
    if k_source is None:
        k_source = k
    estimates = {method.value: np.full(resamples, np.nan) for method in methods}
    for index in range(resamples):
        rng = _stream(seed, index, _ROLE_BOOTSTRAP)
        if with_replacement:
            chosen = rng.integers(0, pool, size=n_sub)
            rest = np.setdiff1d(np.arange(pool), chosen)
        else:
            permutation = rng.permutation(pool)
            chosen, rest = permutation[:n_sub], permutation[n_sub:]
        subsample = SemiSupervisedDataset(
            paired_target=dataset.paired_target[chosen],
            paired_source=dataset.paired_source[chosen],
            extra_source=np.concatenate([dataset.paired_source[rest],
                                         dataset.extra_source]),
        )
        variables = None
        try:
            variables = build_cv_variables(subsample, k, k_source)
        except (EstimationError, ValueError):
            pass
        for method in methods:
            try:
                if variables is not None:
                    value = _estimate_from_variables(method, variables)
                elif not method.is_transferred:
                    estimator = hill if method is Method.HILL else moment
                    value = estimator(subsample.paired_target, k).value
                else:
                    continue
            except EstimationError:
                continue
            estimates[method.value][index] = value
    failures = {
        name: int(np.count_nonzero(~np.isfinite(values)))
        for name, values in estimates.items()
    }
    return BootstrapResult(estimates=estimates, failures=failures,
                           n_sub=int(n_sub), resamples=int(resamples),
                           with_replacement=bool(with_replacement))

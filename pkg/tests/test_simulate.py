import json

import numpy as np
import pytest
from scipy import stats

from tailcv import (
    EstimationError,
    ExperimentConfig,
    Marginal,
    Method,
    bootstrap_study,
    generate_dataset,
    hill,
    marginal_for_evi,
    marginal_quantile,
    run_rvr_experiment,
    sample_gumbel_copula,
    source_threshold_scan,
    build_cv_variables,
    variance_difference_plugin,
)
from tailcv.simulate import _stream


# ---------------------------------------------------------------- marginals

def test_pareto_quantile_hand_values():
    assert abs(marginal_quantile(0.75, Marginal.pareto(1.0, y_m=1.0)) - 4.0) < 1e-12
    assert abs(marginal_quantile(1e-15, Marginal.pareto(1.0, y_m=1.0)) - 1.0) < 1e-12


def test_beta_quantile_hand_value():
    assert abs(marginal_quantile(0.75, Marginal.beta(2.0)) - 0.5) < 1e-12


def test_normal_quantile_values():
    normal = Marginal.standard_normal()
    assert normal.quantile(0.5) == 0.0
    assert abs(normal.quantile(0.975) - 1.959963984540054) < 1e-9


def test_marginal_evi():
    assert Marginal.pareto(0.7).evi == 0.7
    assert Marginal.standard_normal().evi == 0.0
    assert Marginal.beta(4.0).evi == -0.25


def test_marginal_for_evi_families():
    assert marginal_for_evi(0.5).family == "pareto"
    assert marginal_for_evi(0.0).family == "normal"
    negative = marginal_for_evi(-0.5)
    assert negative.family == "beta"
    assert abs(negative.evi + 0.5) < 1e-15


def test_marginal_validation():
    with pytest.raises(ValueError):
        Marginal.pareto(-1.0)
    with pytest.raises(ValueError):
        Marginal.beta(0.0)
    with pytest.raises(ValueError):
        Marginal.pareto(1.0).quantile(0.0)
    with pytest.raises(ValueError):
        Marginal.pareto(1.0).quantile(1.0)


def test_pareto_quantile_cdf_round_trip():
    marginal = Marginal.pareto(0.5, y_m=1e-3)
    u = np.linspace(0.001, 0.999, 97)
    np.testing.assert_allclose(marginal.cdf(marginal.quantile(u)), u,
                               atol=1e-12)


# ------------------------------------------------------------------ copula

def test_copula_rejects_theta_below_one():
    rng = _stream(0, 0, 0)
    with pytest.raises(ValueError):
        sample_gumbel_copula(0.9, 10, rng)


def test_copula_outputs_in_open_interval():
    rng = _stream(0, 0, 0)
    for theta in (1.0, 2.0, 10.0):
        u1, u2 = sample_gumbel_copula(theta, 10_000, rng)
        for u in (u1, u2):
            assert u.min() > 0.0 and u.max() < 1.0


def test_copula_independence_at_theta_one():
    rng = _stream(31, 0, 0)
    u1, u2 = sample_gumbel_copula(1.0, 100_000, rng)
    assert abs(stats.kendalltau(u1, u2).statistic) < 0.01


# ------------------------------------------------------------------- config

def test_config_defaults():
    config = ExperimentConfig(gamma_t=0.5, theta=2.0, n=1000, m=500,
                              source_marginal=Marginal.pareto(1.0))
    assert config.k == 100
    assert config.k_source == 100
    assert config.estimators == (Method.HILL, Method.MOMENT,
                                 Method.TRANSFERRED_HILL,
                                 Method.TRANSFERRED_MOMENT)


def test_config_accepts_method_names():
    config = ExperimentConfig(gamma_t=0.5, theta=2.0, n=100, m=0,
                              source_marginal=Marginal.pareto(1.0),
                              estimators=("hill", "transferred_hill"))
    assert config.estimators == (Method.HILL, Method.TRANSFERRED_HILL)


@pytest.mark.parametrize("kwargs", [
    dict(gamma_t=-1.0), dict(theta=0.5), dict(n=1), dict(m=-1),
    dict(k=0), dict(k=1000), dict(replications=0), dict(seed=-1),
    dict(estimators=("hill", "hill")),
])
def test_config_validation(kwargs):
    base = dict(gamma_t=0.5, theta=2.0, n=1000, m=500,
                source_marginal=Marginal.pareto(1.0))
    base.update(kwargs)
    with pytest.raises(ValueError):
        ExperimentConfig(**base)


# ------------------------------------------------------------------ datasets

def test_generate_dataset_shapes_and_determinism():
    config = ExperimentConfig(gamma_t=0.5, theta=5.0, n=200, m=300,
                              source_marginal=Marginal.pareto(1.0), seed=42)
    first = generate_dataset(config, 7)
    again = generate_dataset(config, 7)
    np.testing.assert_array_equal(first.paired_target, again.paired_target)
    np.testing.assert_array_equal(first.paired_source, again.paired_source)
    np.testing.assert_array_equal(first.extra_source, again.extra_source)
    assert (first.n, first.m) == (200, 300)
    other = generate_dataset(config, 8)
    assert not np.array_equal(first.paired_target, other.paired_target)


def test_generate_dataset_m_zero():
    config = ExperimentConfig(gamma_t=0.5, theta=5.0, n=50, m=0,
                              source_marginal=Marginal.pareto(1.0))
    assert generate_dataset(config, 0).m == 0


def test_generate_dataset_strong_dependence_log_correlation():
    config = ExperimentConfig(gamma_t=0.25, theta=10.0, n=1000, m=0,
                              source_marginal=Marginal.pareto(0.5), seed=3)
    for index in range(10):
        ds = generate_dataset(config, index)
        corr = np.corrcoef(np.log(ds.paired_target),
                           np.log(ds.paired_source))[0, 1]
        assert corr > 0.9


def test_source_marginal_families_generate():
    for marginal in (Marginal.standard_normal(), Marginal.beta(2.0)):
        config = ExperimentConfig(gamma_t=0.5, theta=3.0, n=100, m=50,
                                  source_marginal=marginal)
        ds = generate_dataset(config, 0)
        assert ds.n == 100 and ds.m == 50


# ----------------------------------------------------------------- runner

def test_runner_reports_requested_estimators_only():
    config = ExperimentConfig(gamma_t=0.5, theta=5.0, n=200, m=400,
                              source_marginal=Marginal.pareto(1.0),
                              replications=30, estimators=("hill",))
    report = run_rvr_experiment(config)
    assert set(report.estimates) == {"hill"}
    assert report.pairs == ()
    assert report.replications == 30


def test_runner_requires_two_replications():
    config = ExperimentConfig(gamma_t=0.5, theta=5.0, n=200, m=0,
                              source_marginal=Marginal.pareto(1.0),
                              replications=1)
    with pytest.raises(ValueError):
        run_rvr_experiment(config)


def test_runner_deterministic_across_reruns():
    config = ExperimentConfig(gamma_t=0.5, theta=5.0, n=200, m=400,
                              source_marginal=Marginal.pareto(1.0),
                              replications=40, seed=99)
    first = run_rvr_experiment(config)
    again = run_rvr_experiment(config)
    for name in first.estimates:
        np.testing.assert_array_equal(first.estimates[name],
                                      again.estimates[name])
    assert first.pairs == again.pairs


def test_runner_flags_unstable_configuration():
    # k = 1 makes the moment estimator degenerate in every replication.
    config = ExperimentConfig(gamma_t=1.0, theta=1.0, n=10, m=0, k=1,
                              source_marginal=Marginal.pareto(1.0),
                              replications=20, estimators=("moment",))
    with pytest.raises(EstimationError, match="unstable configuration"):
        run_rvr_experiment(config)


def test_runner_rvr_from_reported_variances():
    config = ExperimentConfig(gamma_t=0.5, theta=5.0, n=200, m=400,
                              source_marginal=Marginal.pareto(1.0),
                              replications=60, seed=12)
    report = run_rvr_experiment(config)
    for pair in report.pairs:
        expected = ((pair.variance_baseline - pair.variance_transferred)
                    / pair.variance_baseline)
        assert pair.rvr == expected
        assert pair.variance_baseline >= 0.0
        assert pair.variance_transferred >= 0.0


def test_report_to_dict_is_json_clean():
    config = ExperimentConfig(gamma_t=0.5, theta=5.0, n=200, m=400,
                              source_marginal=Marginal.pareto(1.0),
                              replications=30, seed=1)
    payload = run_rvr_experiment(config).to_dict()
    json.dumps(payload, allow_nan=False)
    assert payload["config"]["n"] == 200
    assert set(payload["summaries"]) == {m.value for m in config.estimators}


# ------------------------------------------------------------------- scan

def test_scan_single_l_matches_direct_computation():
    config = ExperimentConfig(gamma_t=0.5, theta=5.0, n=200, m=400,
                              source_marginal=Marginal.pareto(1.0),
                              replications=25, seed=6)
    points = source_threshold_scan(config, [20])
    direct = []
    for index in range(config.replications):
        ds = generate_dataset(config, index)
        baseline = hill(ds.paired_target, config.k)
        variables = build_cv_variables(ds, config.k, 20)
        direct.append(baseline.variance_estimate
                      - variance_difference_plugin(variables, baseline.value))
    assert points[0].l == 20
    assert points[0].median == np.median(direct)
    assert points[0].failed == 0


def test_scan_independent_source_matches_baseline_variance():
    config = ExperimentConfig(gamma_t=0.25, theta=1.0, n=1000, m=5000,
                              source_marginal=Marginal.pareto(0.5), k=100,
                              replications=300, seed=5)
    point = source_threshold_scan(config, [100])[0]
    baseline = np.median([
        hill(generate_dataset(config, index).paired_target, 100).variance_estimate
        for index in range(config.replications)
    ])
    assert abs(point.median / baseline - 1.0) < 0.10


def test_scan_validates_l_range():
    config = ExperimentConfig(gamma_t=0.5, theta=5.0, n=200, m=0,
                              source_marginal=Marginal.pareto(1.0),
                              replications=5)
    with pytest.raises(EstimationError, match="invalid k"):
        source_threshold_scan(config, [0])
    with pytest.raises(EstimationError, match="invalid k"):
        source_threshold_scan(config, [200])
    with pytest.raises(ValueError):
        source_threshold_scan(config, [])


# --------------------------------------------------------------- bootstrap

@pytest.fixture(scope="module")
def bootstrap_pool():
    config = ExperimentConfig(gamma_t=0.25, theta=5.0, n=6000, m=0,
                              source_marginal=Marginal.pareto(0.5),
                              replications=2, seed=42)
    return generate_dataset(config, 0)


def test_bootstrap_deterministic(bootstrap_pool):
    first = bootstrap_study(bootstrap_pool, n_sub=500, resamples=20, k=50,
                            seed=3)
    again = bootstrap_study(bootstrap_pool, n_sub=500, resamples=20, k=50,
                            seed=3)
    for name in first.estimates:
        np.testing.assert_array_equal(first.estimates[name],
                                      again.estimates[name])


def test_bootstrap_full_pool_single_resample(bootstrap_pool):
    result = bootstrap_study(bootstrap_pool, n_sub=bootstrap_pool.n,
                             resamples=1, k=100, estimators=("hill",), seed=0)
    full = hill(bootstrap_pool.paired_target, 100).value
    assert abs(result.successful("hill")[0] - full) < 1e-12


def test_bootstrap_variance_reduction(bootstrap_pool):
    result = bootstrap_study(bootstrap_pool, n_sub=1000, resamples=500, k=100,
                             seed=7)
    var_hill = np.var(result.successful("hill"), ddof=1)
    var_transferred = np.var(result.successful("transferred_hill"), ddof=1)
    assert var_transferred < var_hill


def test_bootstrap_validation(bootstrap_pool):
    with pytest.raises(ValueError):
        bootstrap_study(bootstrap_pool, n_sub=bootstrap_pool.n + 1,
                        resamples=5, k=10)
    with pytest.raises(ValueError):
        bootstrap_study(bootstrap_pool, n_sub=1, resamples=5, k=10)
    with pytest.raises(ValueError):
        bootstrap_study(bootstrap_pool, n_sub=100, resamples=0, k=10)


def test_bootstrap_with_replacement_smoke(bootstrap_pool):
    result = bootstrap_study(bootstrap_pool, n_sub=500, resamples=10, k=50,
                             estimators=("hill", "transferred_hill"), seed=1,
                             with_replacement=True)
    assert result.with_replacement
    assert len(result.successful("hill")) == 10


def test_stream_roles_are_distinct():
    coupled = _stream(5, 0, 0).random(8)
    extra = _stream(5, 0, 1).random(8)
    assert not np.array_equal(coupled, extra)

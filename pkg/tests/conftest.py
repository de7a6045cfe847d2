import hypothesis
import numpy as np
import pytest

from tailcv import ExperimentConfig, Marginal, generate_dataset

hypothesis.settings.register_profile(
    "tailcv", deadline=None, max_examples=100,
    suppress_health_check=[hypothesis.HealthCheck.too_slow],
)
hypothesis.settings.load_profile("tailcv")


@pytest.fixture(scope="session")
def theta5_config():
    return ExperimentConfig(
        gamma_t=0.25, theta=5.0, n=1000, m=5000,
        source_marginal=Marginal.pareto(0.5), k=100,
        replications=400, seed=20260826,
    )


@pytest.fixture(scope="session")
def theta5_dataset(theta5_config):
    return generate_dataset(theta5_config, 0)


@pytest.fixture
def tiny_dataset():
    # The 5-point hand-oracle sample on both sides, no extras.
    values = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    from tailcv import SemiSupervisedDataset
    return SemiSupervisedDataset(paired_target=values, paired_source=values,
                                 extra_source=np.empty(0))


@pytest.fixture(scope="session")
def check_criterion(request):
    """One PASS/FAIL line per acceptance criterion, echoed in the summary."""
    lines = request.config.__dict__.setdefault("_criterion_lines", [])

    def check(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        lines.append(line)
        print(line)
        assert passed, line

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

import pytest

from tailmix.estimation import ModelKind
from tailmix.study import StudyConfig, run_study

TRUE_PARAMS = {
    ModelKind.GPD_N_GPD: (0.3, 0.4, 1.0, 0.2, 0.4),
    ModelKind.WEIBULL_N_WEIBULL: (0.5, 0.2, 1.0, 0.6, 0.25),
    ModelKind.TRANSFORM_NORMAL: (-1.5, 1.5, 0.45, 1.0, 0.6),
}

_STUDIES = {}


def reference_scale_study(generator: ModelKind):
    """k = 50, m = 1000 cross-fitting study, computed once per session."""
    generator = ModelKind(generator)
    if generator not in _STUDIES:
        config = StudyConfig(generator=generator, true_params=TRUE_PARAMS[generator],
                             sample_sizes=(1000,), self_fit_sizes=(), replications=50, seed=0)
        _STUDIES[generator] = run_study(config)
    return _STUDIES[generator]


@pytest.fixture(scope="session")
def studies():
    return reference_scale_study


_ACCEPTANCE = {}


def record_acceptance(number: int, title: str, passed: bool, summary: str) -> None:
    _ACCEPTANCE[number] = (title, passed, summary)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, summary = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({summary})")

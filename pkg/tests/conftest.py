import numpy as np
import pytest

from canonsys import FourierCoefficient, make_system

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    num, title = mark.args
    if rep.when == "setup" and rep.passed:
        return
    status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
    prev = _CRITERIA.get(num)
    # a criterion split over several tests fails if any part fails
    if prev is None or prev[1] == "PASS":
        _CRITERIA[num] = (title, status, item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, status, name = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d} {status}  {title}")


def random_fourier_system(rng: np.random.Generator, n: int, z, period: float = 1.0, harmonics: int = 2):
    """Periodic, uniformly positive definite Fourier coefficient of size 2n.

    The constant term has unit trace, the usual normalization of canonical
    systems, so the spectral parameter keeps its meaning across dimensions.
    The harmonics are bounded by 0.9 of the smallest
    eigenvalue of the constant term, so H(t) stays positive definite.
    """
    d = 2 * n
    B = rng.standard_normal((d, d))
    H0 = B @ B.T / d + 0.5 * np.eye(d)
    H0 /= np.trace(H0)
    floor = np.linalg.eigvalsh(H0)[0]
    terms = []
    for _ in range(2 * harmonics):
        S = rng.standard_normal((d, d))
        S = S + S.T
        terms.append(S / np.linalg.norm(S, 2))
    weights = rng.uniform(0.2, 1.0, size=len(terms))
    weights *= 0.9 * floor / weights.sum()
    terms = [w * T for w, T in zip(weights, terms)]
    coef = FourierCoefficient(H0, period, terms[:harmonics], terms[harmonics:])
    return make_system(coef, z)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

import numpy as np
import pytest

# Acceptance tests record one (criterion, ok, detail) entry each; the
# terminal summary below prints one line per criterion at the end of
# the run.
_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.fixture
def acceptance():
    def record(criterion: str, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        _ACCEPTANCE.append((criterion, status, detail))
        line = f"{status} {criterion}" + (f" [{detail}]" if detail else "")
        print(line)
        assert ok, line

    return record


@pytest.fixture
def acceptance_skip():
    def record(criterion: str, reason: str):
        _ACCEPTANCE.append((criterion, "SKIP", reason))
        pytest.skip(reason)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for criterion, status, detail in _ACCEPTANCE:
        line = f"{status} {criterion}" + (f" [{detail}]" if detail else "")
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def spectral_matrix(rng, m, n, sigmas):
    """Matrix with prescribed singular values and random directions."""
    sigmas = np.asarray(sigmas, dtype=np.float64)
    r = sigmas.size
    u, _ = np.linalg.qr(rng.standard_normal((m, r)))
    v, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return (u * sigmas) @ v.T


def geometric_sigmas(count, ratio=2.0, first=1.0):
    return first * ratio ** (-np.arange(count, dtype=np.float64))

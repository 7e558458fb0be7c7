import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.linalg import expm

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# lines collected by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_rotation(rng, n):
    """Haar rotation via sign-corrected QR (independent of the package's samplers)."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, [0, 1]] = Q[:, [1, 0]]
    return Q


def random_deformation(rng, n, scale=1.0):
    F = np.eye(n) + scale * rng.standard_normal((n, n)) / np.sqrt(n)
    if np.linalg.det(F) < 0:
        F[0] = -F[0]
    return F


def skew_unit(rng, n):
    A = rng.standard_normal((n, n))
    A = A - A.T
    return A / np.linalg.norm(A)


def geodesic(R, A, t):
    return R @ expm(t * A)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

import numpy as np
import pytest

from qcrb import families

HALF_PI = np.pi / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def rfixed_half():
    return families.StateFamily(families.QUBIT_R_FIXED, r0=0.5)


def random_hermitian(rng, d):
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (x + x.conj().T)


def random_psd(rng, d, ridge=0.0):
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return x @ x.conj().T + ridge * np.eye(d)


def random_weight(rng, d, ridge=0.05):
    x = rng.standard_normal((d, d))
    return x @ x.T + ridge * np.eye(d)


def random_qubit_point(rng, kind):
    """Interior point away from the coordinate singularities."""
    r = rng.uniform(0.05, 0.95)
    th = rng.uniform(0.15, np.pi - 0.15) + (np.pi if rng.random() < 0.5 else 0.0)
    ph = rng.uniform(0, 2 * np.pi)
    return {
        families.QUBIT_FULL: [r, th, ph],
        families.QUBIT_R_FIXED: [th, ph],
        families.QUBIT_PHI_ZERO: [r, th],
    }[kind]


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def random_hpd(rng, d, complex_=True, spread=1.0):
    if complex_:
        A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    else:
        A = rng.standard_normal((d, d))
    H = A @ A.conj().T / d + spread * 0.1 * np.eye(d)
    return (H + H.conj().T) / 2


def random_unitary(rng, d, complex_=True):
    if complex_:
        A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    else:
        A = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def gaussian_samples(rng, n, Sigma):
    d = Sigma.shape[0]
    L = np.linalg.cholesky(Sigma)
    if np.iscomplexobj(Sigma):
        z = (rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))) / np.sqrt(2)
    else:
        z = rng.standard_normal((n, d))
    return z @ L.T


@pytest.fixture
def rng():
    return np.random.default_rng(20161015)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

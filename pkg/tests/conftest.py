import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_unitary(rng, m):
    Z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_hpd(rng, m, cond=10.0):
    """Hermitian PD matrix with log-uniform spectrum in [1, cond]."""
    U = random_unitary(rng, m)
    lam = np.exp(rng.uniform(0.0, np.log(cond), size=m))
    lam[0], lam[-1] = 1.0, cond
    return (U * lam) @ U.conj().T


def random_points(rng, N, m):
    Z = rng.normal(size=(N, m)) + 1j * rng.normal(size=(N, m))
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

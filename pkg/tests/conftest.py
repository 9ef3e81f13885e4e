import numpy as np
import pytest


def random_spd(rng: np.random.Generator, d: int, eig_low: float = 0.1,
               eig_high: float = 10.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues in [eig_low, eig_high]."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigs = rng.uniform(eig_low, eig_high, size=d)
    return (q * eigs) @ q.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)

import numpy as np
import pytest

from addlab.rng import RngStream


@pytest.fixture
def stream():
    def make(seed, stream_id=0):
        return RngStream(seed, stream_id)
    return make


def random_density(n, generator):
    """Full-rank random density matrix (Ginibre square, normalized)."""
    a = generator.standard_normal((n, n)) + 1j * generator.standard_normal((n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_simplex(d, generator):
    w = generator.dirichlet(np.ones(d))
    return w / w.sum()

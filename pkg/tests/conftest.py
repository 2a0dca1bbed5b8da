import numpy as np
import pytest

from sharplasso.models import build_model


def random_sigma(rng, p, extra=None):
    """Random unit-diagonal positive definite correlation-style matrix."""
    a = rng.standard_normal((p, p + (extra if extra is not None else p)))
    m = a @ a.T / a.shape[1]
    m = 0.5 * (m + m.T)
    d = np.sqrt(np.diag(m))
    sigma = m / np.outer(d, d)
    np.fill_diagonal(sigma, 1.0)
    return sigma


def random_model(rng, p, extra=None):
    return build_model(random_sigma(rng, p, extra))


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)

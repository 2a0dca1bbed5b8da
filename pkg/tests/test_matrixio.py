import numpy as np
import pytest

from sharplasso import matrixio
from sharplasso.errors import NotSymmetric

from conftest import random_sigma


def test_csv_roundtrip_exact(tmp_path, rng):
    sigma = random_sigma(rng, 7)
    path = tmp_path / "sigma.csv"
    matrixio.write_matrix_csv(path, sigma)
    back = matrixio.read_matrix_csv(path)
    np.testing.assert_array_equal(back, sigma)  # %.17g round-trips float64


def test_binary_roundtrip_exact(tmp_path, rng):
    sigma = random_sigma(rng, 5)
    path = tmp_path / "sigma.bin"
    matrixio.write_matrix_binary(path, sigma)
    back = matrixio.read_matrix_binary(path)
    np.testing.assert_array_equal(back, sigma)


def test_read_rejects_asymmetric(tmp_path):
    path = tmp_path / "bad.csv"
    np.savetxt(path, np.arange(9.0).reshape(3, 3), delimiter=",")
    with pytest.raises(NotSymmetric):
        matrixio.read_matrix_csv(path)

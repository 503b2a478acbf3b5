import numpy as np
import pytest

from landaulab import distributions as dist
from landaulab import quadrature as quad


@pytest.fixture(scope="session")
def rule24():
    return quad.tensor_gauss(24)


@pytest.fixture(scope="session")
def rule16():
    return quad.tensor_gauss(16)


@pytest.fixture(scope="session")
def rule10():
    return quad.tensor_gauss(10)


@pytest.fixture(scope="session")
def maxwell():
    return dist.maxwellian()


@pytest.fixture(scope="session")
def gauss_mild():
    # the reference mildly anisotropic normalized state
    return dist.AnisotropicGaussian(np.zeros(3), [1.06, 0.97, 0.97])


@pytest.fixture(scope="session")
def gauss_strong():
    return dist.AnisotropicGaussian(np.zeros(3), [1.2, 0.9, 0.9])


@pytest.fixture(scope="session")
def mixture():
    comps = (
        dist.AnisotropicGaussian([0.35, 0.0, 0.0], [1.05, 0.95, 1.0]),
        dist.AnisotropicGaussian([-0.35, 0.0, 0.0], [0.9, 1.05, 1.0]),
    )
    m = dist.normalize(dist.GaussianMixture([0.5, 0.5], comps))
    m, _ = dist.diagonalize(m)
    return m

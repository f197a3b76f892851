import numpy as np
import pytest

from hmmfv import HmmDiscretisation, build_structured_triangular


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def mesh_n1():
    return build_structured_triangular(1)


@pytest.fixture(scope="session")
def mesh_n2():
    return build_structured_triangular(2)


@pytest.fixture(scope="session")
def mesh_n4():
    return build_structured_triangular(4)


@pytest.fixture(scope="session")
def disc_n2(mesh_n2):
    return HmmDiscretisation(mesh_n2)


@pytest.fixture(scope="session")
def disc_n4(mesh_n4):
    return HmmDiscretisation(mesh_n4)


def random_zero_boundary(disc, rng, scale=1.0):
    """Random element of the zero-boundary subspace."""
    z = np.zeros(disc.n_dofs)
    z[:disc.n_zero_dofs] = scale * rng.normal(size=disc.n_zero_dofs)
    return disc.from_dof_array(z)


def dense(a):
    return np.asarray(a.todense())

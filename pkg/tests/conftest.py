import numpy as np
import pytest

import kaczbench as kb


@pytest.fixture(scope="session")
def sys_500x20():
    return kb.generate_mother(kb.GeneratorConfig(m_max=500, n_max=20, seed=1))


@pytest.fixture(scope="session")
def sys_2000x50():
    return kb.generate_mother(kb.GeneratorConfig(m_max=2000, n_max=50, seed=7))


@pytest.fixture(scope="session")
def inc_2000x50(sys_2000x50):
    return kb.make_inconsistent(sys_2000x50, noise_seed=11)


@pytest.fixture(scope="session")
def coherent_system():
    """Two-unknown system whose rows are highly coherent in cyclic order.

    A dense bundle of nearly parallel unit rows is followed by a few
    well-spread rows of large norm.  Cyclic sweeps crawl through the
    bundle (projections are norm-invariant), while norm-proportional
    sampling concentrates on the informative rows.
    """
    dense, spread = 100, 10
    thetas = np.concatenate(
        [np.linspace(0.0, 0.005, dense), np.linspace(0.005, 0.7, spread)]
    )
    a = np.column_stack([np.cos(thetas), np.sin(thetas)])
    a[dense:] *= 20.0
    x_star = np.array([1.5, -2.0])
    return kb.LinearSystem(A=a, b=a @ x_star, x_star=x_star, seed=0)

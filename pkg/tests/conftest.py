import numpy as np
import pytest

from ncgopt import make_finite_sum_problem, make_matfac_problem, make_trig_problem


@pytest.fixture
def trig2():
    return make_trig_problem(2, [1.0, 1.0])


@pytest.fixture
def trig10():
    return make_trig_problem(10, [1.0] * 10)


@pytest.fixture
def matfac62():
    rng = np.random.default_rng(2024)
    basis, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    m = (basis[:, :2] * np.array([4.0, 1.0])) @ basis[:, :2].T
    return make_matfac_problem(0.5 * (m + m.T), 2)


@pytest.fixture
def finitesum_small():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((40, 6))
    y = rng.choice([-1.0, 1.0], size=40)
    return make_finite_sum_problem(a, y)


def random_symmetric(d, seed, spectrum=None):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = rng.uniform(-1.0, 1.0, d) if spectrum is None else np.asarray(spectrum, float)
    return (q * lam) @ q.T, np.sort(lam)

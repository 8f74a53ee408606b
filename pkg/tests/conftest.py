import numpy as np
import pytest

from finslerlab import finsler


def _fd_once(f, point, multi_index, h):
    var = next((k for k, m in enumerate(multi_index) if m > 0), None)
    if var is None:
        return f(point)
    lower = list(multi_index)
    lower[var] -= 1
    up = point.copy()
    up[var] += h
    down = point.copy()
    down[var] -= h
    return (_fd_once(f, up, lower, h) - _fd_once(f, down, lower, h)) / (2 * h)


def central_fd(f, point, multi_index, h=None):
    """Iterated central finite differences with one Richardson step.

    Independent derivative oracle for the Taylor engine: never touches the
    series code, only plain evaluations of ``f``.
    """
    point = np.asarray(point, dtype=float)
    order = int(sum(multi_index))
    if order == 0:
        return f(point)
    if h is None:
        h = (2.3e-16) ** (1.0 / (order + 4))
    coarse = _fd_once(f, point, tuple(multi_index), h)
    fine = _fd_once(f, point, tuple(multi_index), h / 2.0)
    return (4.0 * fine - coarse) / 3.0


@pytest.fixture(scope="session")
def euclidean2():
    return finsler.euclidean(2)


@pytest.fixture(scope="session")
def sphere():
    return finsler.round_sphere()


@pytest.fixture(scope="session")
def randers():
    return finsler.randers(2, 0.3)


@pytest.fixture(scope="session")
def randers_constant_beta():
    """Constant-covector Randers norm; position independent, so its spray
    vanishes (it is a locally Minkowski structure).  Kept as a fixture for
    the tensor-level oracle tests."""
    return finsler.from_expression(
        "(sqrt(s1^2 + s2^2) + 0.3*s1)^2", 2, label="randers_const"
    )


@pytest.fixture(scope="session")
def minkowski_quartic():
    return finsler.locally_minkowski(2)

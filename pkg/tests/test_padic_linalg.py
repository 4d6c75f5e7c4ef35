import math

import pytest

from anticyclo import padic_linalg
from anticyclo.errors import PreconditionError


def test_valuations():
    assert padic_linalg.vp(18, 3) == 2
    assert padic_linalg.vp(0, 3) == math.inf
    assert padic_linalg.unit_part(18, 3) == (2, 2)
    assert padic_linalg.vp_mod(3 ** 8, 3, 8) == math.inf


def test_solve_unimodular():
    x, loss = padic_linalg.solve([[2, 1], [1, 1]], [3, 2], 3, 8)
    assert x == [1, 1]
    assert loss == 0


def test_solve_reports_lost_digits():
    x, loss = padic_linalg.solve([[3, 0], [0, 1]], [6, 1], 3, 8)
    assert x == [2, 1]
    assert loss == 2


def test_solve_singular():
    with pytest.raises(PreconditionError):
        padic_linalg.solve([[1, 1], [1, 1]], [1, 1], 3, 8)


def test_kernel_vector_normalized():
    x, loss = padic_linalg.kernel_vector([[1, 1], [2, 2]], 3, 8)
    assert x == [1, 3 ** 8 - 1]
    assert loss == 0


def test_kernel_dimension_checked():
    with pytest.raises(PreconditionError) as e:
        padic_linalg.kernel_vector([[1, 0], [0, 1]], 3, 8)
    assert e.value.code == "padic_linalg.kernel_dimension"


def test_rank_and_det():
    assert padic_linalg.rank([[1, 2], [2, 4]], 3, 8) == 1
    assert padic_linalg.rank(padic_linalg.identity(3), 3, 8) == 3
    assert padic_linalg.det_valuation([[9, 0], [0, 1]], 3, 8) == (2, True)


def test_newton_slopes():
    # (x - 1)(x - 3)
    assert padic_linalg.newton_slopes([3, -4, 1], 3, 8) == [0, 1]


def test_charpoly():
    modulus = 3 ** 8
    assert padic_linalg.charpoly([[1, 2], [2, 1]], modulus) == [(-3) % modulus, (-2) % modulus, 1]

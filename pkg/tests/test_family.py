import pytest

from anticyclo.autforms import check_eigen, eigenform, load_class_set
from anticyclo.coeff import ring_make
from anticyclo.errors import PreconditionError
from anticyclo.family import (
    classical_points,
    family_Lp,
    family_residual,
    lift_family,
    lift_matrix_family,
    refine_eigenvalue,
    specialize_family,
    specialize_Lp,
)
from anticyclo.lfun import agree_lfunctions, build_Lp
from anticyclo.weights import AffinoidWeight, Weight, lambda_direction

TRIVIAL = Weight.of((0, 0), (0,))
MASSES = [[1, 2], [2, 1]]


def test_refine_eigenvalue():
    assert refine_eigenvalue(MASSES, 2, 3, 8) == 3 ** 8 - 1
    assert refine_eigenvalue(MASSES, 0, 3, 8) == 3


def test_refine_rejects_double_roots():
    with pytest.raises(PreconditionError) as e:
        refine_eigenvalue([[1, 0], [0, 1]], 4, 3, 8)
    assert e.value.code == "family.eigenvalue_collision"


def test_lift_matrix_family():
    blocks = {(0,): MASSES, (1,): [[3, 0], [0, 0]]}
    lift = lift_matrix_family(blocks, -1, 3, 20, 1, 3, 10)
    modulus = 3 ** 10
    assert lift.eigenvalue[(0,)] == modulus - 1
    # first-order term u.U_1.v / u.v with u = v = (1, -1)
    assert lift.eigenvalue[(1,)] == (3 * pow(2, -1, modulus)) % modulus
    assert lift.vectors[(0,)][lift.normalization] == 1
    assert family_residual(blocks, lift, 3, 1, 3) >= 10


def test_classical_points():
    omega = AffinoidWeight(Weight.of((0, -5), (0,)), (lambda_direction(1),))
    points = classical_points(omega, 3, bound=1)
    assert [pt["point"] for pt in points] == [[-3], [0], [3]]
    assert [pt["classical"] for pt in points] == [True, True, False]
    assert all(pt["dominant"] for pt in points)


@pytest.fixture(scope="module")
def toy(toy_model_path):
    model = load_class_set(toy_model_path)
    ring = ring_make(3, 8)
    phi = eigenform(model, TRIVIAL, -1, 0, 0, ring)
    omega = AffinoidWeight(TRIVIAL, (lambda_direction(1),))
    return phi, omega


@pytest.fixture(scope="module")
def family(toy):
    phi, omega = toy
    return lift_family(phi, -1, omega, 2)


def test_family_center_is_the_eigenform(toy, family):
    phi, _ = toy
    assert family.eigenvalue.constant_term() == -1
    center = specialize_family(family, [0])
    assert center.eigenvalue == 3 ** 8 - 1
    assert center.precision == 8
    for x in phi.model.classes:
        assert center.form.values[x].moment(0, 0) == phi.values[x].moment(0, 0)


def test_family_specializes_to_eigenforms(family):
    at_three = specialize_family(family, [3])
    assert at_three.weight == Weight.of((0, 0), (3,))
    assert at_three.precision == 3
    assert check_eigen(at_three.form, at_three.eigenvalue, at_three.precision)


def test_family_lfunction_at_center(toy, family):
    phi, _ = toy
    L = specialize_Lp(family_Lp(family, 1), [0])
    assert L.weight == TRIVIAL
    assert agree_lfunctions(L, build_Lp(phi, -1, 1), 6)


def test_family_preconditions(toy):
    phi, omega = toy
    with pytest.raises(PreconditionError) as e:
        lift_family(phi, 3, omega, 2)
    assert e.value.code == "family.critical_slope"
    elsewhere = AffinoidWeight(Weight.of((0, -5), (0,)), (lambda_direction(1),))
    with pytest.raises(PreconditionError) as e:
        lift_family(phi, -1, elsewhere, 2)
    assert e.value.code == "family.center_mismatch"


@pytest.fixture(scope="module")
def slope_one(toy_model_path):
    model = load_class_set(toy_model_path)
    center = Weight.of((0, -5), (0,))
    phi = eigenform(model, center, 3, 0, 0, ring_make(3, 8))
    omega = AffinoidWeight(center, (lambda_direction(1),))
    return phi, lift_family(phi, 3, omega, 2)


def test_slope_one_family_lfunction(slope_one):
    phi, F = slope_one
    L = family_Lp(F, 1)
    assert L.shift == 1
    assert L.slope == 1
    at_center = specialize_Lp(L, [0])
    assert at_center.shift == 1
    assert agree_lfunctions(at_center, build_Lp(phi, 3, 1), 5)


def test_slope_one_family_shift_grows_with_beta(slope_one):
    _, F = slope_one
    assert family_Lp(F, 2).shift == 2

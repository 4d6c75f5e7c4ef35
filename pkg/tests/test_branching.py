import numpy as np
import pytest
import sympy

from anticyclo.branching import (
    MatrixPair,
    base_point,
    build_u,
    build_u_direct,
    c_ratio,
    canonical,
    factor_N1,
    fundamental_generators,
    identity_matrix,
    iota,
    leading_minor,
    orbit_witness,
    random_group_element,
    random_lower_borel,
    random_N1,
    same_line,
    support_defects,
    weight_function,
)
from anticyclo.coeff import ring_make
from anticyclo.errors import PreconditionError, VerificationError
from anticyclo.weights import Weight


@pytest.fixture
def ring():
    return ring_make(3, 6)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_orbit_identity(n):
    witness = orbit_witness(n)
    assert witness["holds"]
    assert abs(witness["det_xi"]) == 1


def test_generators_n1():
    gens = fundamental_generators(1)
    assert gens.names() == ["u10", "u21", "v11"]
    assert all(f.anchored for f in gens.as_list())
    assert all(f.value_at_base() == 1 for f in gens.as_list())


@pytest.mark.parametrize(
    "mu,lam",
    [((2, 1), (1,)), ((3, 0), (1,)), ((0, -2), (-1,)), ((1, 1, 0), (1, 0))],
)
def test_product_formula(mu, lam):
    w = Weight.of(mu, lam)
    assert same_line(build_u(w), build_u_direct(w))


def test_non_interlacing_weight_has_no_invariant():
    w = Weight.of((2, 1), (0,))
    with pytest.raises(PreconditionError) as e:
        build_u(w)
    assert e.value.code == "branching.not_interlacing"
    with pytest.raises(VerificationError) as e:
        build_u_direct(w)
    assert e.value.code == "branching.invariant_dimension"


def test_degree_cap():
    with pytest.raises(PreconditionError) as e:
        build_u_direct(Weight.of((3, 0), (0,)), degree_cap=0)
    assert e.value.code == "branching.degree_cap"


def test_group_operations(ring):
    rng = np.random.default_rng(1)
    x = random_group_element(2, ring, rng)
    one = MatrixPair.of(ring, identity_matrix(3), identity_matrix(2))
    assert x @ x.inverse() == one
    assert iota(identity_matrix(2), ring) == one


def test_factorization_on_N1(ring):
    rng = np.random.default_rng(7)
    for n in (1, 2):
        for _ in range(3):
            x = random_N1(n, ring, rng)
            assert x.in_N(1)
            assert factor_N1(x).holds()


def test_factorization_rejects_points_outside_N1(ring):
    one = MatrixPair.of(ring, identity_matrix(2), identity_matrix(1))
    with pytest.raises(PreconditionError) as e:
        factor_N1(one)
    assert e.value.code == "branching.not_in_N1"


def test_generators_are_units_on_N1(ring):
    assert support_defects(1, ring) == []
    rng = np.random.default_rng(3)
    x = random_N1(1, ring, rng)
    for f in fundamental_generators(1).as_list():
        assert f.evaluate(x).constant() % 3 != 0


def test_generator_products_at_base(ring):
    x0 = base_point(1, ring)
    assert weight_function(Weight.of((0, -5), (0,))).evaluate(x0) == 1
    assert c_ratio(1).evaluate(x0) == 1


def test_generators_checked_against_a_ring(ring):
    gens = fundamental_generators(1, ring)
    assert gens.as_list() == fundamental_generators(1).as_list()
    assert c_ratio(1, ring).evaluate(base_point(1, ring)) == 1
    with pytest.raises(PreconditionError) as e:
        fundamental_generators(2, ring)
    assert e.value.code == "branching.non_unit_base_value"
    assert "v11" in e.value.message
    # without a ring the vanishing generators fall back to primitive form
    assert not fundamental_generators(2).v[0].anchored


def test_leading_minors(ring):
    x = MatrixPair.of(ring, [[5, 0], [7, 2]], [[4]])
    assert leading_minor(1, "big", 1).evaluate(x) == 5
    assert leading_minor(1, "big", 2).evaluate(x) == 10
    assert leading_minor(1, "small", 1).evaluate(x) == 4
    assert leading_minor(1, "small", 1).weight == Weight.of((0, 0), (-1,))

    y = MatrixPair.of(ring, identity_matrix(3), [[1, 2], [3, 4]])
    assert leading_minor(2, "small", 2).evaluate(y) == -2
    assert leading_minor(2, "big", 1).weight == Weight.of((1, 0, 0), (0, 0))

    with pytest.raises(PreconditionError) as e:
        leading_minor(1, "small", 2)
    assert e.value.code == "branching.minor_index"
    with pytest.raises(PreconditionError):
        leading_minor(1, "middle", 1)


@pytest.mark.parametrize("component,k", [("big", 1), ("big", 2), ("big", 3), ("small", 1), ("small", 2)])
def test_leading_minor_borel_equivariance(ring, component, k):
    rng = np.random.default_rng(7)
    f = leading_minor(2, component, k)
    for _ in range(3):
        b = random_lower_borel(2, ring, rng)
        x = random_group_element(2, ring, rng)
        diag = b.g if component == "big" else b.gp
        scale = ring.one()
        for i in range(k):
            scale = scale * ring.scalar(diag[i][i])
        assert f.evaluate(b @ x) == scale * f.evaluate(x)


@pytest.mark.parametrize("n", [1, 2])
def test_generators_match_golden_files(golden, n):
    expected = golden(f"generators-n{n}")
    assert expected["n"] == n
    gens = fundamental_generators(n)
    assert gens.names() == [g["name"] for g in expected["generators"]]
    for f, g in zip(gens.as_list(), expected["generators"]):
        got = canonical(f).to_json()
        assert {k: v for k, v in got.items() if k != "poly"} == {k: v for k, v in g.items() if k not in ("name", "poly")}
        assert sympy.Poly(sympy.sympify(g["poly"]), *f.poly.gens, domain="QQ") == canonical(f).poly

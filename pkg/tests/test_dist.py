from fractions import Fraction

import numpy as np
import pytest

from anticyclo.branching import MatrixPair
from anticyclo.coeff import AffinoidScalar, ring_make
from anticyclo.padic_linalg import unit_part
from anticyclo.dist import (
    AffineMap,
    Distribution,
    LocAnFunction,
    TruncatedSeries,
    act,
    affine_map_from_pair,
    agree,
    binom,
    coarsen,
    decode_coset,
    dirac,
    encode_coset,
    fit_growth,
    growth_norm,
    growth_report,
    kappa,
    moment_count,
    monoid_act,
    multi_indices,
    n1_cosets,
    pair,
    random_distribution,
    specialize_dist,
    tp_map,
    unipotent_affine_map,
)
from anticyclo.errors import PreconditionError
from anticyclo.weights import Weight, contraction_exponents, up_coset_exponent


@pytest.fixture
def ring():
    return ring_make(5, 6)


def test_binomials():
    assert binom(5, 2) == 10
    assert binom(-1, 2) == 1
    assert binom(-2, 1) == -2


def test_series_inverse():
    z = TruncatedSeries([1, 3, 0, 2], 3, 6, 3)
    assert (z * z.inverse()).coeffs == [1, 0, 0, 0]
    with pytest.raises(PreconditionError):
        TruncatedSeries([3, 1], 3, 6, 3).inverse()
    with pytest.raises(PreconditionError):
        TruncatedSeries([3, 1], 3, 6, 3).exact_div(3)


def test_dirac_pairing(ring):
    mu = dirac(ring, "Zp", 7, 1, 3)
    f = LocAnFunction.power(5, "Zp", 1, 3, 3, ring.modulus)
    assert pair(mu, f) == 343


def test_pairing_needs_matching_truncation(ring):
    mu = dirac(ring, "Zp", 7, 1, 3)
    f = LocAnFunction.power(5, "Zp", 2, 3, 1, ring.modulus)
    with pytest.raises(PreconditionError) as e:
        pair(mu, f)
    assert e.value.code == "dist.truncation_mismatch"


def test_coarsen_dirac(ring):
    fine = dirac(ring, "Zp", 7, 2, 3)
    coarse = coarsen(fine, 1)
    assert coarse.level == 1
    assert agree(coarse, dirac(ring, "Zp", 7, 1, 3), ring.N)
    with pytest.raises(PreconditionError):
        coarsen(coarse, 2)


def test_coarsen_preserves_pairings(ring):
    rng = np.random.default_rng(5)
    mu = random_distribution(ring, "Zp", 2, 3, rng)
    for j in range(4):
        fine = LocAnFunction.power(5, "Zp", 2, 3, j, ring.modulus)
        coarse = LocAnFunction.power(5, "Zp", 1, 3, j, ring.modulus)
        assert pair(mu, fine) == pair(coarsen(mu, 1), coarse)


def test_dirac_growth_is_zero():
    ring = ring_make(3, 8)
    report = growth_report(dirac(ring, "Zp", 5, 3, 2), 3)
    assert report.h == 0
    assert report.constant_exponent == 0


def test_growth_norm():
    ring = ring_make(3, 8)
    delta = dirac(ring, "Zp", 5, 3, 2)
    assert growth_norm(delta, 3) == 1
    assert growth_norm(delta.scale(9), 3) == Fraction(1, 9)
    assert growth_norm(delta.scale(0), 2) == 0


def test_fit_growth_slope():
    report = fit_growth([0, -1, -2])
    assert report.h == 1
    assert fit_growth([0, Fraction(-1, 2)]).h == Fraction(1, 2)


def test_tp_pushes_dirac(ring):
    moved = act(tp_map(ring), dirac(ring, "N", 7, 1, 2))
    assert moved.level == 2
    assert agree(moved, dirac(ring, "N", 35, 2, 2), ring.N)


def test_action_is_adjoint(ring):
    rng = np.random.default_rng(11)
    mu = random_distribution(ring, "N", 1, 3, rng)
    gamma = AffineMap(5, ring.N, 1, 2, 1, 1)
    for j in range(4):
        f = LocAnFunction.power(5, "Zp", 2, 3, j, ring.modulus)
        assert pair(act(gamma, mu), f) == pair(mu, monoid_act(gamma, f))


def test_n1_cosets():
    assert n1_cosets(3, 2) == [1, 4, 7]
    with pytest.raises(PreconditionError):
        n1_cosets(3, 0)


def test_kappa_of_dirac():
    ring = ring_make(3, 6)
    trivial = Weight.of((0, 0), (0,))
    pushed = kappa(dirac(ring, "N", 4, 2, 2), trivial)
    assert pushed.domain == "Zpx"
    assert agree(pushed, dirac(ring, "Zpx", pow(4, -1, 3 ** 10), 2, 2), ring.N)


def test_kappa_preconditions():
    ring = ring_make(3, 6)
    with pytest.raises(PreconditionError) as e:
        kappa(dirac(ring, "N", 2, 1, 2), Weight.of((0, 0), (0,)))
    assert e.value.code == "dist.missing_support"
    with pytest.raises(PreconditionError) as e:
        kappa(dirac(ring, "N", 1, 1, 2), Weight.of((0, 0, 0), (0, 0)))
    assert e.value.code == "dist.c_non_unit"


def test_specialize_at_center():
    ring = ring_make(3, 6, 1, 1, 2)
    mu = random_distribution(ring, "Zp", 1, 2, np.random.default_rng(2))
    special = specialize_dist(mu, [0])
    assert special.ring.k == 0
    for b in mu.cosets():
        for k in range(3):
            x = mu.moment(b, k)
            assert isinstance(x, AffinoidScalar)
            assert special.moment(b, k) == x.constant_term()


def test_several_coordinate_layout():
    assert multi_indices(4, 1) == ((0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
    assert multi_indices(2, 2)[3:] == ((2, 0), (1, 1), (0, 2))
    assert moment_count(4, 2) == 15
    assert moment_count(1, 3) == 4
    assert encode_coset([1, 2, 0, 1], 3, 1) == 34
    assert decode_coset(34, 3, 1, 4) == [1, 2, 0, 1]
    assert encode_coset([10, 0, 0, 0], 3, 2) == 1


def test_n2_distribution_shape():
    ring = ring_make(3, 4)
    mu = dirac(ring, "N", [4, 5, 7, 2], 1, 2, n=2)
    assert (mu.dim, mu.moment_count, mu.coset_modulus) == (4, 15, 81)
    assert mu.cosets() == [encode_coset([1, 2, 1, 2], 3, 1)]
    with pytest.raises(PreconditionError) as e:
        Distribution(ring, "N", 0, 1, {0: [ring.scalar(1)]}, n=2)
    assert e.value.code == "dist.truncation"
    with pytest.raises(PreconditionError) as e:
        Distribution(ring, "N", 0, 1, {}, n=3)
    assert e.value.code == "dist.dimension"


def test_coarsen_n2_dirac():
    ring = ring_make(3, 6)
    fine = dirac(ring, "N", [4, 5, 7, 2], 2, 2, n=2)
    coarse = coarsen(fine, 1)
    assert coarse.level == 1
    assert agree(coarse, dirac(ring, "N", [4, 5, 7, 2], 1, 2, n=2), ring.N)


def test_n2_polynomial_pairing():
    ring = ring_make(3, 6)
    mu = dirac(ring, "N", [4, 5, 7, 2], 1, 2, n=2)
    f = LocAnFunction.polynomial(3, "N", 1, 2, 4, {(1, 0, 0, 1): 1, (0, 0, 1, 0): 2, (0, 0, 0, 0): 5}, ring.modulus)
    assert pair(mu, f) == 4 * 2 + 2 * 7 + 5


def test_tp_contracts_n2_coordinates():
    ring = ring_make(3, 6)
    gamma = tp_map(ring, n=2)
    assert gamma.dim == 4
    assert gamma.s == 1
    assert gamma.shift == (0, 0, 0, 0)
    diagonal = [unit_part(gamma.linear[i][i], 3)[0] for i in range(4)]
    assert tuple(diagonal) == contraction_exponents(2) == (1, 2, 1, 1)
    assert sum(diagonal) == up_coset_exponent(2)


def test_tp_pushes_n2_dirac():
    ring = ring_make(3, 6)
    moved = act(tp_map(ring, n=2), dirac(ring, "N", [1, 2, 1, 2], 1, 2, n=2))
    assert moved.level == 2
    assert agree(moved, dirac(ring, "N", [3, 18, 3, 6], 2, 2, n=2), ring.N)


def test_generic_map_matches_n1_map(ring):
    gamma = MatrixPair.of(ring, [[10, 3], [0, 7]], [[11]])
    weight = Weight.of((2, -1), (1,))
    m = affine_map_from_pair(gamma, weight, ring)
    u = unipotent_affine_map(gamma, weight, ring)
    assert u.shift == (m.b,)
    assert u.linear == ((5 ** m.s * m.a % ring.modulus,),)
    assert u.s == m.s == 1
    assert u.cocycle == m.cocycle


def test_n2_action_is_adjoint():
    ring = ring_make(3, 8)
    gamma = MatrixPair.of(ring, [[18, 3, 2], [0, 3, 1], [0, 0, 4]], [[9, 6], [0, 6]])
    m = affine_map_from_pair(gamma, Weight.of((1, 0, -1), (1, -1)), ring)
    assert m.s == 1
    assert m.cocycle != 1
    mu = random_distribution(ring, "N", 1, 2, np.random.default_rng(5), n=2)
    pushed = act(m, mu)
    assert pushed.level == 2
    polys = [{(0, 0, 0, 0): 1}, {(1, 0, 0, 1): 1, (0, 1, 0, 0): 2}, {(0, 0, 2, 0): 1, (0, 0, 0, 1): 7}]
    for poly in polys:
        f = LocAnFunction.polynomial(3, "N", 2, 2, 4, poly, ring.modulus)
        assert pair(pushed, f) == pair(mu, monoid_act(m, f))


def test_monoid_rejects_increasing_valuations():
    ring = ring_make(3, 6)
    gamma = MatrixPair.of(ring, [[1, 0, 0], [0, 3, 0], [0, 0, 1]], [[1, 0], [0, 1]])
    with pytest.raises(PreconditionError) as e:
        affine_map_from_pair(gamma, Weight.of((0, 0, 0), (0, 0)), ring)
    assert e.value.code == "dist.outside_monoid"

from fractions import Fraction

import pytest

from anticyclo import coeff
from anticyclo.coeff import AffinoidScalar, ring_make
from anticyclo.errors import PreconditionError


def test_plain_ring():
    ring = ring_make(3, 8)
    assert ring.degree == 1
    assert ring.modulus == 3 ** 8
    assert ring.descriptor() == {"p": 3, "N": 8, "m": 1, "k": 0, "D": 0}


def test_cube_root_of_unity():
    ring = ring_make(3, 8, 3)
    zeta = ring.root_power(1)
    assert zeta * zeta + zeta + 1 == 0
    assert ring.root_power(3) == 1


def test_fourth_root_with_weight_variable():
    ring = ring_make(5, 6, 4, 1, 4)
    i = ring.root_power(1)
    assert i * i == -1
    assert ring.k == 1 and ring.D == 4


def test_bad_rings():
    with pytest.raises(PreconditionError) as e:
        ring_make(4, 8)
    assert e.value.code == "coeff.composite_prime"
    with pytest.raises(PreconditionError):
        ring_make(3, 8, 5)


def test_valuation():
    ring = ring_make(3, 8)
    assert coeff.valuation(ring.scalar(9)) == 2
    assert coeff.valuation(ring.scalar(4)) == 0
    assert coeff.valuation(ring.zero()) == coeff.INFINITY


def test_valuation_ramified():
    ring = ring_make(3, 8, 3)
    assert coeff.valuation(ring.root_power(1) - 1) == Fraction(1, 2)


def test_unit_inverse():
    assert coeff.unit_inverse(ring_make(5, 3).scalar(6)) == 1 - 5 + 25
    assert coeff.unit_inverse(ring_make(3, 4).scalar(2)) == 41
    with pytest.raises(PreconditionError) as e:
        coeff.unit_inverse(ring_make(3, 4).scalar(3))
    assert e.value.code == "coeff.non_unit"


def test_unit_inverse_in_extension():
    ring = ring_make(3, 8, 3)
    x = ring.root_power(1) + 3
    assert x * coeff.unit_inverse(x) == 1


def test_embedding_is_multiplicative():
    ring = ring_make(3, 8, 3)
    a = ring.root_power(1) + 2
    b = ring.root_power(2) * 5
    assert coeff.embed(a * b, 6) == coeff.embed(a, 6) * coeff.embed(b, 6)
    assert coeff.embed(ring.root_power(1), 6) == ring_make(3, 8, 6).root_power(2)


def test_log_and_exp():
    x = coeff.padic_log(4, 3, 8)
    assert coeff.padic_exp(x, 3, 8) == 4
    assert (coeff.padic_log(4 * 7, 3, 8) - coeff.padic_log(4, 3, 8) - coeff.padic_log(7, 3, 8)) % 3 ** 8 == 0


def test_teichmuller():
    w = coeff.teichmuller(2, 3, 8)
    assert w % 3 == 2
    assert pow(w, 2, 3 ** 8) == 1
    assert coeff.one_unit_part(2, 3, 8) % 3 == 1


def test_fraction_to_int():
    assert coeff.fraction_to_int(Fraction(1, 2), 3, 81) == 41
    with pytest.raises(PreconditionError):
        coeff.fraction_to_int(Fraction(1, 3), 3, 81)


def test_specialize_geometric_sum():
    ring = ring_make(3, 8, 1, 1, 3)
    f = AffinoidScalar(ring, {(d,): ring.one() for d in range(4)})
    value = coeff.specialize(f, [3])
    assert value.value == 40
    assert value.precision == 4


def test_specialize_at_center_keeps_precision():
    ring = ring_make(3, 8, 1, 1, 3)
    f = AffinoidScalar.constant(ring, 7) + AffinoidScalar.variable(ring, 0)
    value = coeff.specialize(f, [0])
    assert value.value == 7
    assert value.precision == 8


def test_specialize_outside_disc():
    ring = ring_make(3, 8, 1, 1, 3)
    with pytest.raises(PreconditionError) as e:
        coeff.specialize(AffinoidScalar.variable(ring, 0), [1])
    assert e.value.code == "coeff.point_outside_disc"


def test_affinoid_arithmetic_truncates():
    ring = ring_make(3, 8, 1, 1, 3)
    w = AffinoidScalar.variable(ring, 0)
    one = AffinoidScalar.constant(ring, 1)
    assert (one + w) * (one - w) == one - w * w
    assert w * w * w * w == 0
    assert coeff.affinoid_inverse(one + w) * (one + w) == one


def test_affinoid_unit_power_at_integer_points():
    ring = ring_make(3, 8, 1, 1, 3)
    f = coeff.affinoid_unit_power(4, 2, [1], ring)
    assert f.constant_term() == 16
    assert coeff.specialize(f, [3]).value.congruent(ring.scalar(4 ** 5), 4)


def test_scalar_json_round_trip():
    ring = ring_make(3, 8, 3)
    x = ring.root_power(1) * 7 + 2
    assert coeff.decode_scalar(coeff.encode_scalar(x)) == x

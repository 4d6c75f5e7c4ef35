import pytest

from anticyclo.coeff import ring_make
from anticyclo.errors import PreconditionError, SchemaError, VerificationError
from anticyclo.weights import (
    AffinoidWeight,
    Weight,
    crit_set,
    dual_chain_holds,
    exponent_vector,
    interlaces,
    interlacing_weights,
    is_classical_point,
    lambda_direction,
    make_refinement,
    slope_predicates,
    slope_predicates_from_valuations,
    torus_character,
    tp_exponents,
    up_coset_exponent,
    weight_from_exponents,
)


def test_crit_oracles(oracles):
    for case in oracles["crit"]:
        crit = crit_set(Weight.from_json(case["weight"]))
        assert [crit.j_min, crit.j_max] == case["crit"]
        assert crit.h == case["h"]


def test_crit_matches_dual_chain():
    w = Weight.of((2, 0, -1), (1, 0))
    crit = crit_set(w)
    for j in range(-6, 7):
        assert (j in crit) == dual_chain_holds(w, j)


def test_crit_is_empty_off_the_dominant_cone():
    crit = crit_set(Weight.of((0, 1), (0,)))
    assert crit.empty
    assert crit.h is None
    assert crit.count == 0
    assert list(crit) == []
    assert 0 not in crit
    assert crit.to_json() == {"crit": [], "h": None}


def test_exponent_oracles(oracles):
    for case in oracles["exponents"]:
        w = Weight.from_json(case["weight"])
        ev = exponent_vector(w)
        assert list(ev.c) == case["c"]
        assert list(ev.d) == case["d"]
        assert weight_from_exponents(w.n, ev) == w


def test_exponents_nonnegative_on_interlacing_weights():
    for w in interlacing_weights(2, 1):
        ev = exponent_vector(w)
        assert min(ev.c[:-1] + ev.d) >= 0


def test_interlacing_enumeration():
    weights = list(interlacing_weights(1, 1))
    assert len(weights) == 10
    assert all(interlaces(w) for w in weights)
    assert len(set(weights)) == len(weights)
    assert not interlaces(Weight.of((2, 1), (0,)))


def test_bad_weight_payload():
    with pytest.raises(SchemaError) as e:
        Weight.from_json({"mu": [0, 0], "lambda": [0, 0]})
    assert e.value.code == "weights.bad_weight"
    with pytest.raises(SchemaError):
        Weight.from_json({"mu": [0]})


def test_shift_and_dual():
    w = Weight.of((3, 1, 0), (2, 1))
    assert w.shift(2).lam == (4, 3)
    assert w.dual_lambda() == (-1, -2)


def test_torus_character_and_tp():
    w = Weight.of((1, 0), (-2,))
    assert torus_character(w, (2, 3), (5,)) == 50
    assert tp_exponents(2) == ((2, 1, 0), (2, 1))


def test_coset_exponents(oracles):
    for case in oracles["coset_exponent"]:
        assert up_coset_exponent(case["n"]) == case["exponent"]


def test_refinement_and_slopes():
    ring = ring_make(3, 8)
    w = Weight.of((0, -5), (0,))
    r = make_refinement(w, ring.scalar(3))
    vals = r.valuations()
    assert vals["alpha_p"] == 1
    report = slope_predicates(r)
    assert report.noncritical and report.very_small and report.small_by_count
    with pytest.raises(PreconditionError):
        make_refinement(w, ring.scalar(3), alpha_norm=ring.scalar(2))


def test_slope_thresholds():
    report = slope_predicates_from_valuations(Weight.of((3, 0), (0,)), 0, 0)
    assert report.very_small
    report = slope_predicates_from_valuations(Weight.of((1, 0), (0,)), 2, 2)
    assert not report.noncritical
    assert not report.very_small
    assert not report.small_by_count


def test_very_small_must_be_noncritical():
    with pytest.raises(VerificationError) as e:
        slope_predicates_from_valuations(Weight.of((1, 0), (0,)), 0, 5)
    assert e.value.code == "weights.slope_inconsistency"


def test_affinoid_weight_points():
    center = Weight.of((0, -5), (0,))
    omega = AffinoidWeight(center, (lambda_direction(1),))
    assert omega.at([3]) == Weight.of((0, -5), (3,))
    assert AffinoidWeight.from_json(omega.to_json()) == omega
    assert is_classical_point(center, omega.directions, [3])
    assert not is_classical_point(center, omega.directions, [0.5])
    with pytest.raises(PreconditionError):
        AffinoidWeight(center, ())

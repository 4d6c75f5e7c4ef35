import copy
import json
from fractions import Fraction

import pytest

from anticyclo.autforms import (
    ClassSetModel,
    HPeriod,
    UpCoset,
    check_eigen,
    classical_project,
    coset_count_check,
    eigenform,
    level_tower,
    load_class_set,
    localize,
    random_form,
    rerandomize_representatives,
    save_class_set,
    specialize_form,
    stabilizer_weight,
    synthetic_class_set,
    translate_form,
    up_apply,
    up_matrix,
    up_spectrum,
)
from anticyclo.branching import restricted_representation
from anticyclo.coeff import ring_make
from anticyclo.dist import coarsen
from anticyclo.errors import PreconditionError, SchemaError
from anticyclo.weights import Weight

TRIVIAL = Weight.of((0, 0), (0,))


@pytest.fixture
def model(toy_model_path):
    return load_class_set(toy_model_path)


def test_toy_model(model, oracles):
    assert model.classes == [0, 1]
    assert model.mass_matrix() == oracles["mass_matrix"]["T"]
    assert model.mass() == 2
    assert [r["alpha"] for r in model.refinements] == oracles["mass_matrix"]["eigenvalues"]


def test_model_validation(toy_model_path):
    with open(toy_model_path) as f:
        payload = json.load(f)

    extra = copy.deepcopy(payload)
    extra["up_cosets"]["0"].append(dict(extra["up_cosets"]["0"][0], digit=3))
    with pytest.raises(SchemaError) as e:
        ClassSetModel.from_json(extra)
    assert e.value.code == "autforms.coset_count"

    wrong = dict(payload, schema="something-else")
    with pytest.raises(SchemaError) as e:
        ClassSetModel.from_json(wrong)
    assert e.value.code == "autforms.schema"


def test_synthetic_models():
    model = synthetic_class_set(3, [[1, 2], [2, 1]], stabilizers=[1, 2])
    assert model.mass() == Fraction(3, 2)
    with pytest.raises(PreconditionError) as e:
        synthetic_class_set(3, [[1, 2], [2, 1]], stabilizers=[1, 3])
    assert e.value.code == "autforms.non_unit_stabilizer"
    with pytest.raises(PreconditionError) as e:
        synthetic_class_set(3, [[2, 2], [2, 1]])
    assert e.value.code == "autforms.bad_masses"


def test_save_and_load(model, tmp_path):
    path = str(tmp_path / "model.json")
    save_class_set(model, path)
    assert load_class_set(path).to_json() == model.to_json()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_coset_count(n, oracles):
    result = coset_count_check(n, 3)
    assert result["holds"]
    assert result["exponent"] == oracles["coset_exponent"][n - 1]["exponent"]


def test_degree_zero_operator_is_mass_matrix(model):
    U = up_matrix(model, TRIVIAL, 0, 0, ring_make(3, 8))
    assert U.size == 2
    assert U.center() == model.mass_matrix()
    assert up_spectrum(U)["slopes"] == [0.0, 1.0]


def test_degree_zero_eigenforms(model):
    ring = ring_make(3, 8)
    phi = eigenform(model, TRIVIAL, -1, 0, 0, ring)
    assert phi.values[0].moment(0, 0) == 1
    assert phi.values[1].moment(0, 0) == -1
    assert check_eigen(phi, -1, ring.N)

    report = localize(model, TRIVIAL, 3, 0, 0, ring)
    assert report.dimension == 1 and report.semisimple
    with pytest.raises(PreconditionError) as e:
        localize(model, TRIVIAL, 1, 0, 0, ring)
    assert e.value.code == "autforms.empty_eigenspace"
    with pytest.raises(PreconditionError) as e:
        eigenform(model, TRIVIAL, 1, 0, 0, ring)
    assert e.value.code == "autforms.eigenspace_dimension"


def test_operator_ignores_representatives(model):
    ring = ring_make(3, 6)
    w = Weight.of((0, -5), (0,))
    before = up_matrix(model, w, 1, 2, ring)
    after = up_matrix(rerandomize_representatives(model, seed=4), w, 1, 2, ring)
    assert before.center() == after.center()


def test_classical_projection_shape(model):
    ring = ring_make(3, 6)
    phi = random_form(model, Weight.of((0, -5), (0,)), ring, 1, 2)
    projected = classical_project(phi)
    assert sorted(projected) == [0, 1]
    assert all(len(row) == 6 for row in projected.values())
    with pytest.raises(PreconditionError) as e:
        specialize_form(phi, [0])
    assert e.value.code == "autforms.not_affinoid"


def test_level_tower(model):
    ring = ring_make(3, 6)
    entries = level_tower(model, 2, TRIVIAL, ring, ring.N + 4)
    assert len(entries) == 6
    assert all(e.word[0] == 0 and len(e.path) == 2 for e in entries)
    with pytest.raises(PreconditionError):
        level_tower(model, 0, TRIVIAL, ring, ring.N)


def test_stabilizer_weight():
    assert stabilizer_weight(HPeriod(0, 0, 2), 3, 81) == 41


N2_WEIGHT = Weight.of((1, 0, -1), (1, -1))


@pytest.fixture(scope="module")
def n2_model(model_path):
    return load_class_set(model_path("toy-n2-p3"))


@pytest.fixture(scope="module")
def one_class(model_path):
    return load_class_set(model_path("one-class-p3"))


def test_coset_representatives():
    identity = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    coset = UpCoset(2 + 3 * 5 + 27 * 1 + 81 * 2, 0, identity, ((1, 0), (0, 1)))
    assert coset.digit_vector(3, 2) == [2, 5, 1, 2]
    pair = coset.representative_pair(ring_make(3, 6), 2)
    assert pair.g == ((9, 6, 5), (0, 3, 1), (0, 0, 1))
    assert pair.gp == ((9, 6), (0, 3))
    assert coset.lift_json(2) == [0, 0, 0, 0]

    n1 = UpCoset(2, 0, ((1, 0), (0, 1)), ((1,),), lift=(1,))
    pair = n1.representative_pair(ring_make(3, 6), 1)
    assert pair.g == ((3, 5), (0, 1))
    assert pair.gp == ((3,),)
    assert n1.lift_json(1) == 1


def test_n2_model(n2_model):
    assert n2_model.n == 2
    assert all(len(table) == 3 ** 5 for table in n2_model.cosets.values())
    assert n2_model.mass_matrix() == [[122, 121], [121, 122]]
    with pytest.raises(PreconditionError) as e:
        synthetic_class_set(3, [[1, 2], [2, 1]], n=2)
    assert e.value.code == "autforms.bad_masses"


def test_n2_degree_zero_operator(n2_model):
    ring = ring_make(3, 6)
    assert up_matrix(n2_model, N2_WEIGHT, 0, 0, ring).center() == n2_model.mass_matrix()

    twisted = synthetic_class_set(3, [[122, 121], [121, 122]], twisted=[(0, 0)], n=2)
    mod = ring.modulus
    expected = [[(121 + pow(4, -1, mod)) % mod, 121], [121, 122]]
    assert up_matrix(twisted, N2_WEIGHT, 0, 0, ring).center() == expected
    assert up_matrix(twisted, Weight.of((0, 0, 0), (0, 0)), 0, 0, ring).center() == [[122, 121], [121, 122]]


def test_n2_operator_ignores_representatives(n2_model):
    ring = ring_make(3, 6)
    twisted = synthetic_class_set(3, [[122, 121], [121, 122]], twisted=[(0, 0), (1, 5)], n=2)
    for model in (n2_model, twisted):
        moved = rerandomize_representatives(model, seed=2)
        assert any(c.lift != (0, 0, 0, 0) for c in moved.cosets[0])
        before = up_matrix(model, N2_WEIGHT, 0, 1, ring)
        after = up_matrix(moved, N2_WEIGHT, 0, 1, ring)
        assert before.size == 10
        assert before.center() == after.center()


def test_n2_ordinary_eigenform(n2_model):
    ring = ring_make(3, 6)
    report = localize(n2_model, N2_WEIGHT, 1, 0, 1, ring)
    assert report.dimension == 1 and report.semisimple
    phi = eigenform(n2_model, N2_WEIGHT, 1, 0, 1, ring)
    assert phi.values[0].moment(0, 0) == 1
    assert phi.values[1].moment(0, 0) == -1
    assert check_eigen(phi, 1, ring.N)

    projected = classical_project(phi)
    assert all(len(row) == len(restricted_representation(N2_WEIGHT)) for row in projected.values())
    assert any(not x.is_zero() for row in projected.values() for x in row)


def test_restricted_representation_sizes():
    assert restricted_representation(Weight.of((0, 0, 0), (0, 0))) == ({(0, 0, 0, 0): Fraction(1)},)
    assert len(restricted_representation(Weight.of((1, 0, 0), (0, 0)))) == 3
    assert len(restricted_representation(Weight.of((3, 0), (0,)))) == 4


def test_n2_level_tower(n2_model):
    ring = ring_make(3, 6)
    W = ring.N + 6
    entries = level_tower(n2_model, 2, N2_WEIGHT, ring, W)
    assert len(entries) == 2 * 3 ** 5
    assert all(e.word[0] == 0 and len(e.path) == 2 for e in entries)
    phi = random_form(n2_model, N2_WEIGHT, ring, 0, 1, seed=1)
    xi = translate_form(phi, entries[7], W)
    assert (xi.level, xi.dim, xi.degree) == (2, 4, 1)


def test_one_class_model(one_class):
    assert one_class.classes == [0]
    assert one_class.mass() == 1
    assert stabilizer_weight(one_class.periods[0], 3, 81) == 1
    assert one_class.mass_matrix() == [[3]]

    ring = ring_make(3, 8)
    phi = random_form(one_class, TRIVIAL, ring, 1, 2, seed=5)
    image = up_apply(phi)
    assert coarsen(image.values[0], 0).moment(0, 0) == coarsen(phi.values[0], 0).moment(0, 0) * 3

    psi = eigenform(one_class, TRIVIAL, 3, 0, 0, ring)
    assert psi.values[0].moment(0, 0) == 1
    assert check_eigen(psi, 3, ring.N)


def test_one_class_twisted_eigenspace():
    twisted = synthetic_class_set(3, [[3]], twisted=[(0, 0)])
    w = Weight.of((1, 0), (1,))
    ring = ring_make(3, 8)
    assert up_matrix(twisted, w, 0, 0, ring).center() == [[6]]
    report = localize(twisted, w, 6, 0, 2, ring)
    assert report.dimension == 1
    assert report.semisimple

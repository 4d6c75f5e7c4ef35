import numpy as np
import pytest

from anticyclo.autforms import eigenform, load_class_set, random_form
from anticyclo.coeff import from_digits, ring_make, to_digits
from anticyclo.dist import agree, dirac, random_distribution
from anticyclo.errors import SchemaError
from anticyclo.family import lift_family
from anticyclo.lfun import agree_lfunctions, build_Lp
from anticyclo.storage import ArtifactStore, digit_dtype
from anticyclo.weights import AffinoidWeight, Weight, lambda_direction

TRIVIAL = Weight.of((0, 0), (0,))


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(str(tmp_path / "artifacts"))


def test_distribution_archive(store):
    ring = ring_make(3, 6, 3)
    mu = random_distribution(ring, "Zpx", 2, 3, np.random.default_rng(0))
    mu = mu.scale(ring.root_power(1))
    store.save_distribution("mu", mu, {"note": "zeta twist"})
    loaded = store.load_distribution("mu")
    assert loaded.ring == ring
    assert loaded.domain == "Zpx"
    assert agree(loaded, mu, ring.N)
    assert store.load_meta("mu") == {"note": "zeta twist"}


def test_affinoid_distribution_archive(store):
    ring = ring_make(3, 6, 1, 1, 2)
    mu = random_distribution(ring, "N", 1, 2, np.random.default_rng(1))
    store.save_distribution("family_mu", mu)
    loaded = store.load_distribution("family_mu")
    for b in mu.cosets():
        for k in range(3):
            assert loaded.moment(b, k) == mu.moment(b, k)
    assert store.load_meta("family_mu") is None


def test_n2_distribution_archive(store):
    ring = ring_make(3, 5)
    mu = random_distribution(ring, "N", 1, 2, np.random.default_rng(4), cosets=[0, 7, 80], n=2)
    store.save_distribution("n2_mu", mu)
    loaded = store.load_distribution("n2_mu")
    assert (loaded.n, loaded.dim, loaded.moment_count) == (2, 4, 15)
    assert loaded.cosets() == [0, 7, 80]
    assert agree(loaded, mu, ring.N)


def test_form_and_lfunction_archives(store, toy_model_path):
    model = load_class_set(toy_model_path)
    phi = random_form(model, Weight.of((0, -5), (0,)), ring_make(3, 6), 1, 2, seed=3)
    store.save_form("phi", phi)
    loaded = store.load_form("phi", model)
    assert loaded.weight == phi.weight
    assert all(agree(loaded.values[x], phi.values[x], 6) for x in model.classes)

    psi = eigenform(model, TRIVIAL, -1, 0, 0, ring_make(3, 8))
    L = build_Lp(psi, -1, 1)
    store.save_lfunction("lp", L)
    L2 = store.load_lfunction("lp")
    assert (L2.shift, L2.beta, L2.alpha) == (L.shift, L.beta, L.alpha)
    assert agree_lfunctions(L, L2, 8)


def test_family_archive(store, toy_model_path):
    model = load_class_set(toy_model_path)
    phi = eigenform(model, TRIVIAL, -1, 0, 0, ring_make(3, 8))
    F = lift_family(phi, -1, AffinoidWeight(TRIVIAL, (lambda_direction(1),)), 2)
    store.save_family("family", F)
    G = store.load_family("family", model)
    assert G.omega == F.omega
    assert G.eigenvalue == F.eigenvalue
    assert G.vector == F.vector
    assert G.radius == F.radius


def test_listing_and_errors(store):
    ring = ring_make(3, 4)
    mu = random_distribution(ring, "Zp", 1, 1, np.random.default_rng(2))
    store.save_distribution("b", mu, {})
    store.save_distribution("a", mu)
    assert store.list_artifacts() == ["a", "b"]
    with pytest.raises(SchemaError) as e:
        store.load_form("a", None)
    assert e.value.code == "storage.kind"
    store.delete("a")
    assert store.list_artifacts() == ["b"]
    with pytest.raises(SchemaError) as e:
        store.load_distribution("a")
    assert e.value.code == "storage.missing"


def test_digit_arrays_fit_the_prime():
    assert digit_dtype(3) == np.uint8
    assert digit_dtype(257) == np.uint16
    assert digit_dtype(65537) == np.uint32
    assert to_digits(300, 257, 2) == [43, 1]
    assert from_digits([43, 1], 257) == 300


def test_large_prime_distribution_archive(store):
    ring = ring_make(257, 2)
    mu = dirac(ring, "Zp", 300, 1, 2)
    assert mu.moment(43, 1) == 1
    store.save_distribution("wide", mu)
    loaded = store.load_distribution("wide")
    assert loaded.moment(43, 0) == 1
    assert loaded.moment(43, 1) == 1
    assert loaded.moment(43, 2) == 1
    assert agree(loaded, mu, 2)

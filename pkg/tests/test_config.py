import pytest

from anticyclo.config import config_from_dict, load_config
from anticyclo.errors import PreconditionError, SchemaError
from anticyclo.weights import Weight


def test_bundled_profiles():
    cfg = load_config(profile="n1-p3")
    assert (cfg.p, cfg.N, cfg.m) == (3, 8, 18)
    assert cfg.n == 1
    assert cfg.weight == Weight.of((0, -5), (0,))
    assert cfg.class_set.endswith("toy-n1-p3.json")
    assert cfg.suite_enabled("family")

    cfg = load_config(profile="n2-p3")
    assert cfg.n == 2
    assert cfg.class_set.endswith("toy-n2-p3.json")
    assert [r["alpha"] for r in cfg.refinements] == [1]
    assert not cfg.suite_enabled("family")
    assert cfg.suite_enabled("anything-else")


def test_overrides():
    cfg = load_config(profile="n1-p3", overrides={"ring.N": 10, "settings.seed": 5})
    assert cfg.N == 10
    assert cfg.ring().modulus == 3 ** 10
    assert cfg.ring().m == 1
    assert cfg.character_ring().m == 18
    assert cfg.character_ring().modulus == 3 ** 10
    assert cfg.settings["seed"] == 5


def test_ring_must_hold_character_values():
    with pytest.raises(PreconditionError) as e:
        load_config(profile="n1-p3", overrides={"ring.m": 6})
    assert e.value.code == "config.ring_too_small"
    with pytest.raises(PreconditionError) as e:
        load_config(profile="n1-p3", overrides={"ring.m": 10})
    assert e.value.code == "coeff.unsupported_conductor"


def test_bad_configs():
    with pytest.raises(SchemaError) as e:
        load_config(profile="no-such-profile")
    assert e.value.code == "config.unknown_profile"
    with pytest.raises(SchemaError) as e:
        config_from_dict({"ring": {"p": 3}})
    assert e.value.code == "config.missing_key"
    with pytest.raises(PreconditionError) as e:
        config_from_dict({"ring": {"p": 4, "N": 3}, "inputs": {"weight": {"mu": [0, 0], "lambda": [0]}}})
    assert e.value.code == "coeff.composite_prime"
    with pytest.raises(SchemaError):
        load_config()


def test_defaults_and_round_trip():
    cfg = config_from_dict({"ring": {"p": 5, "N": 6}, "inputs": {"weight": {"mu": [1, 0], "lambda": [0]}}})
    assert cfg.degree == 4 and cfg.D == 3
    assert cfg.settings["degree_cap"] == 12
    assert config_from_dict(cfg.to_json()).to_json() == cfg.to_json()


def test_weight_from_file(tmp_path):
    (tmp_path / "w.json").write_text('{"mu": [2, 0], "lambda": [1]}')
    cfg = config_from_dict({"ring": {"p": 3, "N": 4}, "inputs": {"weight": "w.json"}}, str(tmp_path))
    assert cfg.weight == Weight.of((2, 0), (1,))
    with pytest.raises(SchemaError) as e:
        config_from_dict({"ring": {"p": 3, "N": 4}, "inputs": {"weight": "missing.json"}}, str(tmp_path))
    assert e.value.code == "config.missing_file"

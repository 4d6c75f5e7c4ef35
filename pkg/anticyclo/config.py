"""
Pipeline configuration: nested JSON sections ring / inputs / settings / suites
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from anticyclo.coeff import RingDescriptor, ring_make
from anticyclo.errors import PreconditionError, SchemaError
from anticyclo.weights import Weight

logger = logging.getLogger(__name__)

PROFILE_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "profiles")

DEFAULT_SETTINGS = {
    "log_level": "WARNING",
    "output_dir": "artifacts",
    "seed": 0,
    "measure_constant": 1,
    "degree_cap": 12,
    "enable_progress": True,
    "samples": 20,
}

DEFAULT_RING = {"m": 1, "D": 3, "d": 4, "r": 1, "r_max": 3, "beta_max": 3}


@dataclass(frozen=True)
class PipelineConfig:
    """Validated, read-only pipeline settings"""

    name: str
    p: int
    N: int
    m: int
    D: int
    degree: int
    level: int
    r_max: int
    beta_max: int
    weight: Weight
    class_set: Optional[str]
    refinements: List[Dict[str, Any]]
    characters: List[Dict[str, Any]]
    settings: Dict[str, Any]
    suites: Dict[str, bool] = field(default_factory=dict)
    source: Optional[str] = None

    @property
    def n(self) -> int:
        return self.weight.n

    def ring(self, N: Optional[int] = None) -> RingDescriptor:
        """Coefficients of forms, distributions and families"""
        return ring_make(self.p, N or self.N)

    def character_ring(self, N: Optional[int] = None) -> RingDescriptor:
        """The coefficient ring with zeta_m adjoined, where character values are taken"""
        return ring_make(self.p, N or self.N, self.m)

    def suite_enabled(self, name: str) -> bool:
        return self.suites.get(name, True)

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "ring": {
                "p": self.p,
                "N": self.N,
                "m": self.m,
                "D": self.D,
                "d": self.degree,
                "r": self.level,
                "r_max": self.r_max,
                "beta_max": self.beta_max,
            },
            "inputs": {
                "weight": self.weight.to_json(),
                "class_set": self.class_set,
                "refinements": self.refinements,
                "characters": self.characters,
            },
            "settings": self.settings,
            "suites": self.suites,
        }


def resolve_profile(name: str) -> str:
    path = os.path.join(PROFILE_DIR, f"{name}.json")
    if not os.path.exists(path):
        available = sorted(f[:-5] for f in os.listdir(PROFILE_DIR) if f.endswith(".json")) if os.path.isdir(PROFILE_DIR) else []
        raise SchemaError("config.unknown_profile", f"no profile {name}; available: {available}")
    return path


def _apply_overrides(payload: Dict[str, Any], overrides: Dict[str, Any]):
    """Dotted keys such as ring.N replace nested values"""
    for key, value in overrides.items():
        section = payload
        parts = key.split(".")
        for part in parts[:-1]:
            section = section.setdefault(part, {})
        section[parts[-1]] = value


def _resolve_file(value: Optional[str], base_dir: str) -> Optional[str]:
    if value is None:
        return None
    path = value if os.path.isabs(value) else os.path.normpath(os.path.join(base_dir, value))
    if not os.path.exists(path):
        raise SchemaError("config.missing_file", f"referenced file {path} does not exist")
    return path


def _read_weight(value: Any, base_dir: str) -> Weight:
    if isinstance(value, str):
        with open(_resolve_file(value, base_dir), "r") as f:
            value = json.load(f)
    if not isinstance(value, dict):
        raise SchemaError("config.bad_weight", "inputs.weight must be a weight object or a file name")
    return Weight.from_json(value)


def config_from_dict(payload: Dict[str, Any], base_dir: str = ".", source: Optional[str] = None) -> PipelineConfig:
    try:
        ring = dict(DEFAULT_RING, **payload["ring"])
        inputs = payload.get("inputs", {})
        settings = dict(DEFAULT_SETTINGS, **payload.get("settings", {}))
        p, N = int(ring["p"]), int(ring["N"])
        weight = _read_weight(inputs["weight"], base_dir)
    except KeyError as e:
        raise SchemaError("config.missing_key", f"configuration lacks {e}")
    except (TypeError, ValueError) as e:
        raise SchemaError("config.bad_value", f"cannot read configuration: {e}")

    m = int(ring["m"])
    ring_make(p, N, m)
    characters = list(inputs.get("characters", []))
    for chi in characters:
        beta = int(chi.get("beta", 0))
        if beta and m % ((p - 1) * p ** beta) != 0:
            raise PreconditionError(
                "config.ring_too_small",
                f"m={m} does not contain the values of characters of conductor {p}^{beta}",
            )
    if int(settings["measure_constant"]) != 1:
        logger.warning("measure constant %s is reported but every identity is checked as a ratio", settings["measure_constant"])

    return PipelineConfig(
        name=payload.get("name", "custom"),
        p=p,
        N=N,
        m=m,
        D=int(ring["D"]),
        degree=int(ring["d"]),
        level=int(ring["r"]),
        r_max=int(ring["r_max"]),
        beta_max=int(ring["beta_max"]),
        weight=weight,
        class_set=_resolve_file(inputs.get("class_set"), base_dir),
        refinements=list(inputs.get("refinements", [])),
        characters=characters,
        settings=settings,
        suites={k: bool(v) for k, v in payload.get("suites", {}).items()},
        source=source,
    )


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None, profile: Optional[str] = None) -> PipelineConfig:
    """Read a config file or a bundled profile and apply dotted overrides"""
    if path is None:
        if profile is None:
            raise SchemaError("config.missing", "give a config file or a profile name")
        path = resolve_profile(profile)
    if not os.path.exists(path):
        raise SchemaError("config.missing_file", f"config file {path} does not exist")
    with open(path, "r") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError("config.bad_json", f"{path}: {e}")
    if overrides:
        _apply_overrides(payload, overrides)
    config = config_from_dict(payload, os.path.dirname(os.path.abspath(path)), path)
    logger.debug("configuration %s loaded from %s", config.name, path)
    return config

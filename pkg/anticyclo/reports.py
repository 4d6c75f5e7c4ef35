"""
Deterministic JSON reports and content hashes of referenced files
"""
import hashlib
import json
import math
from fractions import Fraction
from typing import Any, Dict, Optional

from anticyclo.errors import AnticycloError

FLOAT_DIGITS = 6


def normalize(value: Any) -> Any:
    """JSON-ready copy with sorted-key dicts, Fractions as strings and fixed float rounding"""
    if isinstance(value, dict):
        return {str(k): normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(v) for v in value]
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else value.numerator
    if isinstance(value, float):
        if math.isinf(value) or math.isnan(value):
            return None
        return round(value, FLOAT_DIGITS)
    if hasattr(value, "to_json"):
        return normalize(value.to_json())
    return value


def dumps(payload: Dict[str, Any]) -> str:
    return json.dumps(normalize(payload), sort_keys=True, indent=2, ensure_ascii=False)


def file_hash(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]


def success(**fields) -> Dict[str, Any]:
    return dict(fields, status="success")


def error_report(error: AnticycloError) -> Dict[str, Any]:
    return dict(error.to_report(), status="error")


def write_report(payload: Dict[str, Any], path: Optional[str] = None) -> str:
    text = dumps(payload)
    if path:
        with open(path, "w") as f:
            f.write(text + "\n")
    return text

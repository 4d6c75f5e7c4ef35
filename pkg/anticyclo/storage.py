"""
Artifact storage for distributions, forms, families and L-functions
Moment tables are kept as base-p digit arrays in .npz archives with a JSON header
"""
import glob
import json
import logging
import math
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from anticyclo import coeff
from anticyclo.autforms import ClassSetModel, ModularForm, form_to_vector
from anticyclo.coeff import AffinoidScalar, PadicScalar, RingDescriptor, ring_make
from anticyclo.dist import Distribution
from anticyclo.errors import SchemaError
from anticyclo.family import FamilyEigenform
from anticyclo.lfun import PadicLFunction
from anticyclo.weights import AffinoidWeight, Weight

logger = logging.getLogger(__name__)

FORMAT = "anticyclo.npz/1"


def _multidegrees(ring: RingDescriptor) -> List[Tuple[int, ...]]:
    return coeff.all_multidegrees(ring.k, ring.D) if ring.k else [()]


def digit_dtype(p: int) -> np.dtype:
    """Smallest unsigned integer type holding the digits 0..p-1"""
    for dtype in (np.uint8, np.uint16, np.uint32):
        if p - 1 <= np.iinfo(dtype).max:
            return np.dtype(dtype)
    raise SchemaError("storage.prime_too_large", f"digits of p={p} do not fit a 32-bit array")


def _scalar_digits(x: Any, ring: RingDescriptor) -> np.ndarray:
    """Digits indexed by (multidegree, power-basis coefficient, digit)"""
    degrees = _multidegrees(ring)
    out = np.zeros((len(degrees), ring.degree, ring.N), dtype=digit_dtype(ring.p))
    for t, deg in enumerate(degrees):
        c = x.coefficient(deg) if isinstance(x, AffinoidScalar) else x
        for i, value in enumerate(c.coeffs):
            out[t, i] = coeff.to_digits(value, ring.p, ring.N)
    return out


def _scalar_from_digits(block: np.ndarray, ring: RingDescriptor):
    degrees = _multidegrees(ring)
    scalars = []
    for t in range(len(degrees)):
        coeffs = tuple(coeff.from_digits([int(d) for d in block[t, i]], ring.p) for i in range(ring.degree))
        scalars.append(PadicScalar(ring, coeffs))
    if ring.k:
        return AffinoidScalar(ring, dict(zip(degrees, scalars)))
    return scalars[0]


def distribution_arrays(mu: Distribution) -> Tuple[Dict[str, Any], np.ndarray]:
    cosets = mu.cosets()
    ring = mu.ring
    count = mu.moment_count
    digits = np.zeros((len(cosets), count, len(_multidegrees(ring)), ring.degree, ring.N), dtype=digit_dtype(ring.p))
    for a, b in enumerate(cosets):
        for k in range(count):
            digits[a, k] = _scalar_digits(mu.moment(b, k), ring)
    header = {
        "domain": mu.domain,
        "level": mu.level,
        "degree": mu.degree,
        "n": mu.n,
        "ring": ring.descriptor(),
        "ring_hash": ring.content_hash(),
        "cosets": cosets,
    }
    return header, digits


def distribution_from_arrays(header: Dict[str, Any], digits: np.ndarray) -> Distribution:
    try:
        desc = header["ring"]
        ring = ring_make(desc["p"], desc["N"], desc.get("m", 1), desc.get("k", 0), desc.get("D", 0))
        if ring.content_hash() != header.get("ring_hash", ring.content_hash()):
            raise SchemaError("storage.hash_mismatch", "ring descriptor does not match its content hash")
        moments = {}
        for a, b in enumerate(header["cosets"]):
            moments[int(b)] = [_scalar_from_digits(digits[a, k], ring) for k in range(digits.shape[1])]
        return Distribution(ring, header["domain"], header["level"], header["degree"], moments, header.get("n", 1))
    except (KeyError, IndexError, TypeError) as e:
        raise SchemaError("storage.bad_distribution", f"cannot rebuild distribution: {e}")


def _weight_from_json(payload: Dict[str, Any]):
    if "center" in payload:
        return AffinoidWeight.from_json(payload)
    return Weight.from_json(payload)


class ArtifactStore:
    """Save and load numbered artifacts with JSON metadata side files"""

    def __init__(self, output_dir: str = "artifacts"):
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, f"{name}.npz")

    def _meta_path(self, name: str) -> str:
        return os.path.join(self.output_dir, f"meta_{name}.json")

    def _write(self, name: str, header: Dict[str, Any], arrays: Dict[str, np.ndarray], meta_data: Optional[Dict[str, Any]]):
        header = dict(header, format=FORMAT)
        path = self._path(name)
        np.savez_compressed(path, header=np.array(json.dumps(header, sort_keys=True)), **arrays)
        logger.info("saved %s", path)
        if meta_data is not None:
            with open(self._meta_path(name), "w") as f:
                json.dump(meta_data, f, indent=2, sort_keys=True)
        return path

    def _read(self, name: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        path = self._path(name)
        if not os.path.exists(path):
            raise SchemaError("storage.missing", f"no artifact named {name} in {self.output_dir}")
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            arrays = {key: data[key] for key in data.files if key != "header"}
        if header.get("format") != FORMAT:
            raise SchemaError("storage.format", f"{path} is not a {FORMAT} archive")
        return header, arrays

    def save_distribution(self, name: str, mu: Distribution, meta_data: Optional[Dict[str, Any]] = None) -> str:
        header, digits = distribution_arrays(mu)
        return self._write(name, {"kind": "distribution", "dist": header}, {"dist": digits}, meta_data)

    def load_distribution(self, name: str) -> Distribution:
        header, arrays = self._read(name)
        if header.get("kind") != "distribution":
            raise SchemaError("storage.kind", f"{name} holds a {header.get('kind')}, not a distribution")
        return distribution_from_arrays(header["dist"], arrays["dist"])

    def save_form(self, name: str, phi: ModularForm, meta_data: Optional[Dict[str, Any]] = None) -> str:
        headers = {}
        arrays = {}
        for x in phi.model.classes:
            headers[str(x)], arrays[f"class_{x}"] = distribution_arrays(phi.values[x])
        header = {
            "kind": "form",
            "model": phi.model.name,
            "weight": phi.weight.to_json(),
            "classes": headers,
        }
        return self._write(name, header, arrays, meta_data)

    def load_form(self, name: str, model: ClassSetModel) -> ModularForm:
        header, arrays = self._read(name)
        if header.get("kind") != "form":
            raise SchemaError("storage.kind", f"{name} holds a {header.get('kind')}, not a form")
        values = {}
        for x in model.classes:
            if str(x) not in header["classes"]:
                raise SchemaError("storage.missing_class", f"form {name} has no value at class {x}")
            values[x] = distribution_from_arrays(header["classes"][str(x)], arrays[f"class_{x}"])
        return ModularForm(model, _weight_from_json(header["weight"]), values)

    def save_family(self, name: str, F: FamilyEigenform, meta_data: Optional[Dict[str, Any]] = None) -> str:
        phi = F.form()
        headers = {}
        arrays = {}
        for x in F.model.classes:
            headers[str(x)], arrays[f"class_{x}"] = distribution_arrays(phi.values[x])
        header = dict(F.to_json(), kind="family", model=F.model.name, classes=headers)
        return self._write(name, header, arrays, meta_data)

    def load_family(self, name: str, model: ClassSetModel) -> FamilyEigenform:
        header, arrays = self._read(name)
        if header.get("kind") != "family":
            raise SchemaError("storage.kind", f"{name} holds a {header.get('kind')}, not a family")
        try:
            values = {x: distribution_from_arrays(header["classes"][str(x)], arrays[f"class_{x}"]) for x in model.classes}
            omega = AffinoidWeight.from_json(header["omega"])
            residual = header["residual_valuation"]
            return FamilyEigenform(
                model,
                omega,
                values[model.classes[0]].ring,
                int(header["level"]),
                int(header["degree"]),
                form_to_vector(ModularForm(model, omega, values)),
                coeff.decode_affinoid(header["eigenvalue"]),
                int(header["alpha0"]),
                int(header["radius"]),
                math.inf if residual is None else residual,
                header.get("provenance", {}),
            )
        except KeyError as e:
            raise SchemaError("storage.bad_family", f"family {name} lacks {e}")

    def save_lfunction(self, name: str, L: PadicLFunction, meta_data: Optional[Dict[str, Any]] = None) -> str:
        dist_header, digits = distribution_arrays(L.dist)
        if isinstance(L.alpha, AffinoidScalar):
            alpha = {"affinoid": coeff.encode_affinoid(L.alpha)}
        else:
            alpha = {"int": int(L.alpha)}
        header = {
            "kind": "lfunction",
            "dist": dist_header,
            "shift": L.shift,
            "beta": L.beta,
            "weight": L.weight.to_json(),
            "alpha": alpha,
            "model": L.model_name,
        }
        return self._write(name, header, {"dist": digits}, meta_data)

    def load_lfunction(self, name: str) -> PadicLFunction:
        header, arrays = self._read(name)
        if header.get("kind") != "lfunction":
            raise SchemaError("storage.kind", f"{name} holds a {header.get('kind')}, not an L-function")
        dist = distribution_from_arrays(header["dist"], arrays["dist"])
        alpha_payload = header["alpha"]
        alpha = coeff.decode_affinoid(alpha_payload["affinoid"]) if "affinoid" in alpha_payload else int(alpha_payload["int"])
        return PadicLFunction(
            dist,
            int(header["shift"]),
            int(header["beta"]),
            _weight_from_json(header["weight"]),
            alpha,
            header.get("model", "class-set"),
        )

    def load_meta(self, name: str) -> Optional[Dict[str, Any]]:
        meta_path = self._meta_path(name)
        if not os.path.exists(meta_path):
            return None
        with open(meta_path, "r") as f:
            return json.load(f)

    def list_artifacts(self) -> List[str]:
        files = glob.glob(os.path.join(self.output_dir, "*.npz"))
        return sorted(os.path.basename(f)[: -len(".npz")] for f in files)

    def delete(self, name: str):
        for path in (self._path(name), self._meta_path(name)):
            if os.path.exists(path):
                os.remove(path)

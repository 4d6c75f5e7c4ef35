"""
Finite class-set models of automorphic forms with distribution values, U_p and the level tower
"""
import json
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from anticyclo import coeff, padic_linalg
from anticyclo.branching import (
    MatrixPair,
    base_point,
    identity_matrix,
    random_zp,
    restricted_representation,
    unipotent_coordinates,
    unipotent_matrices,
    unipotent_pair,
)
from anticyclo.coeff import AffinoidScalar, RingDescriptor, fraction_to_int, ring_make
from anticyclo.dist import (
    SUPPORTED_N,
    AffineMap,
    AnyWeight,
    Distribution,
    LocAnFunction,
    MonoidMap,
    act,
    affine_map_from_pair,
    agree,
    coarsen,
    coset_list,
    moment_count,
    n_dimension,
    pair,
    specialize_dist,
)
from anticyclo.errors import PreconditionError, SchemaError
from anticyclo.weights import AffinoidWeight, Weight, contraction_exponents, tp_exponents, up_coset_exponent

logger = logging.getLogger(__name__)

SCHEMA = "anticyclo.class_set/1"


@dataclass(frozen=True)
class UpCoset:
    """One term delta_digit * k^{-1} of U_p at a class, landing on target"""

    digit: int
    target: int
    iwahori_g: Tuple[Tuple[int, ...], ...]
    iwahori_gp: Tuple[Tuple[int, ...], ...]
    lift: Tuple[int, ...] = ()

    def digit_vector(self, p: int, n: int) -> List[int]:
        """Mixed-radix digits, coordinate (i, j) running over Z/p^{e_i - e_j}"""
        out = []
        rest = self.digit
        for c in contraction_exponents(n):
            out.append(rest % p ** c)
            rest //= p ** c
        return out

    def lift_vector(self, n: int) -> List[int]:
        dim = n_dimension(n)
        return list(self.lift) + [0] * (dim - len(self.lift))

    def representative_pair(self, ring: RingDescriptor, n: int) -> MatrixPair:
        """n(digits) t_p n(lift); for n = 1 this is ([[p, digit + p * lift], [0, 1]], [[p]])"""
        p = ring.p
        big, small = tp_exponents(n)
        tp = MatrixPair.of(
            ring,
            [[p ** e if i == j else 0 for j in range(n + 1)] for i, e in enumerate(big)],
            [[p ** e if i == j else 0 for j in range(n)] for i, e in enumerate(small)],
        )
        return unipotent_pair(n, self.digit_vector(p, n), ring) @ tp @ unipotent_pair(n, self.lift_vector(n), ring)

    def lift_json(self, n: int) -> Union[int, List[int]]:
        vec = self.lift_vector(n)
        return vec[0] if n == 1 else vec


def _read_lift(value: Union[int, Sequence[int]]) -> Tuple[int, ...]:
    if isinstance(value, list):
        return tuple(int(v) for v in value)
    return (int(value),)


@dataclass(frozen=True)
class HPeriod:
    """An H-class y with its image class in G and its stabilizer weight"""

    h_class: int
    g_class: int
    stabilizer: int


@dataclass
class ClassSetModel:
    """Finite double-coset model of G(Q)\\G(A_f)/K with its U_p coset table"""

    n: int
    p: int
    stabilizers: Dict[int, int]
    cosets: Dict[int, List[UpCoset]]
    periods: List[HPeriod]
    measure: Fraction = Fraction(1)
    refinements: List[Dict[str, Any]] = field(default_factory=list)
    name: str = "class-set"

    @property
    def classes(self) -> List[int]:
        return sorted(self.stabilizers)

    def validate(self):
        """Check table shape and unit conditions"""
        expected = self.p ** up_coset_exponent(self.n)
        for x in self.classes:
            table = self.cosets.get(x, [])
            if len(table) != expected:
                raise SchemaError("autforms.coset_count", f"class {x} has {len(table)} cosets, expected {expected}")
            if sorted(c.digit for c in table) != list(range(expected)):
                raise SchemaError("autforms.coset_digits", f"class {x} does not use every digit once")
            for c in table:
                if c.target not in self.stabilizers:
                    raise SchemaError("autforms.unknown_class", f"coset of class {x} targets unknown class {c.target}")
                if len(c.iwahori_g) != self.n + 1 or len(c.iwahori_gp) != self.n:
                    raise SchemaError("autforms.iwahori_shape", "Iwahori part has the wrong size")
                if len(c.lift) > n_dimension(self.n):
                    raise SchemaError("autforms.lift_shape", f"coset {c.digit} of class {x} has {len(c.lift)} lift coordinates")
        for y in self.periods:
            if y.g_class not in self.stabilizers:
                raise SchemaError("autforms.unknown_class", f"H-class {y.h_class} maps to unknown class {y.g_class}")
            if y.stabilizer <= 0:
                raise SchemaError("autforms.stabilizer", "stabilizer weights must be positive")
            if y.stabilizer % self.p == 0:
                raise PreconditionError("autforms.non_unit_stabilizer", f"H-class {y.h_class} has stabilizer divisible by p")
        if self.measure.numerator % self.p == 0 or self.measure.denominator % self.p == 0:
            raise PreconditionError("autforms.non_unit_measure", "the measure of K must be a p-adic unit")

    def mass(self) -> Fraction:
        return sum((Fraction(1, s) for s in self.stabilizers.values()), Fraction(0))

    def mass_matrix(self) -> List[List[int]]:
        """Target counts T[x][y]; its eigenvalues are the degree-zero U_p eigenvalues"""
        index = {x: i for i, x in enumerate(self.classes)}
        T = [[0] * len(index) for _ in index]
        for x in self.classes:
            for c in self.cosets[x]:
                T[index[x]][index[c.target]] += 1
        return T

    def to_json(self) -> Dict[str, Any]:
        return {
            "schema": SCHEMA,
            "name": self.name,
            "n": self.n,
            "p": self.p,
            "measure": str(self.measure),
            "classes": [{"id": x, "stabilizer": self.stabilizers[x]} for x in self.classes],
            "up_cosets": {
                str(x): [
                    {
                        "digit": c.digit,
                        "target": c.target,
                        "lift": c.lift_json(self.n),
                        "iwahori": {"g": [list(r) for r in c.iwahori_g], "gp": [list(r) for r in c.iwahori_gp]},
                    }
                    for c in self.cosets[x]
                ]
                for x in self.classes
            },
            "h_periods": [{"h_class": y.h_class, "g_class": y.g_class, "stabilizer": y.stabilizer} for y in self.periods],
            "refinements": self.refinements,
        }

    @classmethod
    def from_json(cls, payload: Dict[str, Any]) -> "ClassSetModel":
        if payload.get("schema") != SCHEMA:
            raise SchemaError("autforms.schema", f"expected schema {SCHEMA}, got {payload.get('schema')}")
        try:
            stabilizers = {int(c["id"]): int(c["stabilizer"]) for c in payload["classes"]}
            cosets = {
                int(x): [
                    UpCoset(
                        int(c["digit"]),
                        int(c["target"]),
                        tuple(tuple(int(v) for v in r) for r in c["iwahori"]["g"]),
                        tuple(tuple(int(v) for v in r) for r in c["iwahori"]["gp"]),
                        _read_lift(c.get("lift", 0)),
                    )
                    for c in table
                ]
                for x, table in payload["up_cosets"].items()
            }
            periods = [HPeriod(int(y["h_class"]), int(y["g_class"]), int(y["stabilizer"])) for y in payload["h_periods"]]
            model = cls(
                n=int(payload["n"]),
                p=int(payload["p"]),
                stabilizers=stabilizers,
                cosets=cosets,
                periods=periods,
                measure=Fraction(payload.get("measure", "1")),
                refinements=list(payload.get("refinements", [])),
                name=payload.get("name", "class-set"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError("autforms.bad_model", f"cannot read class-set model: {e}")
        model.validate()
        return model


def load_class_set(path: str) -> ClassSetModel:
    with open(path, "r") as f:
        payload = json.load(f)
    return ClassSetModel.from_json(payload)


def save_class_set(model: ClassSetModel, path: str):
    with open(path, "w") as f:
        json.dump(model.to_json(), f, indent=2)


def synthetic_class_set(
    p: int,
    masses: Sequence[Sequence[int]],
    twisted: Sequence[Tuple[int, int]] = (),
    stabilizers: Optional[Sequence[int]] = None,
    refinements: Optional[List[Dict[str, Any]]] = None,
    name: str = "synthetic",
    n: int = 1,
) -> ClassSetModel:
    """
    Model whose class x sends masses[x][y] of its p^{n(n+1)(2n+1)/6} cosets to class y.
    Cosets listed in twisted get the Iwahori part (1, diag(1+p, 1, ...)) so U_p depends on lambda.
    """
    h = len(masses)
    total = p ** up_coset_exponent(n)
    for row in masses:
        if len(row) != h or sum(row) != total or any(c < 0 for c in row):
            raise PreconditionError("autforms.bad_masses", f"every row must be nonnegative and sum to {total}")
    stabs = list(stabilizers) if stabilizers is not None else [1] * h
    twisted_set = set(twisted)
    one_g = identity_matrix(n + 1)
    cosets: Dict[int, List[UpCoset]] = {}
    for x in range(h):
        table = []
        digit = 0
        for y in range(h):
            for _ in range(masses[x][y]):
                small = [list(r) for r in identity_matrix(n)]
                if (x, digit) in twisted_set:
                    small[0][0] = 1 + p
                table.append(UpCoset(digit, y, one_g, tuple(tuple(r) for r in small)))
                digit += 1
        cosets[x] = table
    model = ClassSetModel(
        n=n,
        p=p,
        stabilizers={x: stabs[x] for x in range(h)},
        cosets=cosets,
        periods=[HPeriod(x, x, stabs[x]) for x in range(h)],
        refinements=refinements or [],
        name=name,
    )
    model.validate()
    return model


def _int_matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> Tuple[Tuple[int, ...], ...]:
    out = np.array(A, dtype=object).reshape(len(A), len(A)).dot(np.array(B, dtype=object).reshape(len(B), len(B)))
    return tuple(tuple(int(v) for v in row) for row in out)


def rerandomize_representatives(model: ClassSetModel, seed: int = 0) -> ClassSetModel:
    """Move every coset representative delta to delta n(t) and its Iwahori part k to k n(t)"""
    rng = np.random.default_rng(seed)
    p, n = model.p, model.n
    dim = n_dimension(n)
    cosets = {}
    for x, table in model.cosets.items():
        moved = []
        for c in table:
            t = [int(v) for v in rng.integers(-p, p + 1, size=dim)]
            t_g, t_gp = unipotent_matrices(n, t)
            l_g, l_gp = unipotent_matrices(n, c.lift_vector(n))
            lift = unipotent_coordinates(n, _int_matmul(l_g, t_g), _int_matmul(l_gp, t_gp))
            moved.append(
                replace(
                    c,
                    iwahori_g=_int_matmul(c.iwahori_g, t_g),
                    iwahori_gp=_int_matmul(c.iwahori_gp, t_gp),
                    lift=tuple(lift),
                )
            )
        cosets[x] = moved
    return replace(model, cosets=cosets)


@dataclass
class ModularForm:
    """Class-indexed distribution values at a common truncation"""

    model: ClassSetModel
    weight: AnyWeight
    values: Dict[int, Distribution]

    @property
    def ring(self) -> RingDescriptor:
        return next(iter(self.values.values())).ring

    @property
    def level(self) -> int:
        return next(iter(self.values.values())).level

    @property
    def degree(self) -> int:
        return next(iter(self.values.values())).degree

    def scale(self, c) -> "ModularForm":
        return ModularForm(self.model, self.weight, {x: mu.scale(c) for x, mu in self.values.items()})

    def __add__(self, other: "ModularForm") -> "ModularForm":
        return ModularForm(self.model, self.weight, {x: mu + other.values[x] for x, mu in self.values.items()})

    def __sub__(self, other: "ModularForm") -> "ModularForm":
        return self + other.scale(-1)


def coset_maps(model: ClassSetModel, weight: AnyWeight, ring: RingDescriptor, W: int) -> Dict[int, List[Tuple[int, MonoidMap]]]:
    """(target, affine map of delta_digit * k^{-1}) for every coset of every class"""
    if model.n not in SUPPORTED_N:
        raise PreconditionError("autforms.dimension", f"U_p on distribution values is enabled for n in {SUPPORTED_N}")
    exact = ring_make(model.p, W)
    maps: Dict[int, List[Tuple[int, MonoidMap]]] = {}
    for x in model.classes:
        entries = []
        for c in model.cosets[x]:
            delta = c.representative_pair(exact, model.n)
            k = MatrixPair.of(exact, c.iwahori_g, c.iwahori_gp)
            if not k.in_iwahori():
                raise PreconditionError("autforms.outside_monoid", f"coset {c.digit} of class {x} has no Iwahori part")
            entries.append((c.target, affine_map_from_pair(delta @ k.inverse(), weight, ring)))
        maps[x] = entries
    return maps


def _working_precision(ring: RingDescriptor, level: int) -> int:
    return ring.N + level + 4


def up_apply(phi: ModularForm, maps: Optional[Dict[int, List[Tuple[int, MonoidMap]]]] = None) -> ModularForm:
    """(U_p phi)(x) = sum_j (delta_j k_j^{-1}) * phi(target_j), restricted back to phi's level"""
    model = phi.model
    if maps is None:
        maps = coset_maps(model, phi.weight, phi.ring, _working_precision(phi.ring, phi.level))
    out: Dict[int, Distribution] = {}
    for x in model.classes:
        total: Optional[Distribution] = None
        for target, gamma in maps[x]:
            pushed = act(gamma, phi.values[target])
            total = pushed if total is None else total + pushed
        out[x] = coarsen(total, phi.level)
    return ModularForm(model, phi.weight, out)


@dataclass
class UpMatrix:
    """Matrix of U_p on moments, basis ordered by (class, coset, degree); one block per affinoid multidegree"""

    basis: List[Tuple[int, int, int]]
    blocks: Dict[Tuple[int, ...], List[List[int]]]
    p: int
    precision: int

    @property
    def size(self) -> int:
        return len(self.basis)

    def center(self) -> List[List[int]]:
        return self.blocks[next(iter(sorted(self.blocks)))]


def _basis(model: ClassSetModel, level: int, degree: int) -> List[Tuple[int, int, int]]:
    dim = n_dimension(model.n)
    count = moment_count(dim, degree)
    return [(x, b, k) for x in model.classes for b in coset_list(model.p, "N", level, dim) for k in range(count)]


def form_from_vector(
    model: ClassSetModel,
    weight: AnyWeight,
    ring: RingDescriptor,
    level: int,
    degree: int,
    vector: Sequence[Any],
) -> ModularForm:
    basis = _basis(model, level, degree)
    count = moment_count(n_dimension(model.n), degree)
    moments: Dict[int, Dict[int, List[Any]]] = {x: {} for x in model.classes}
    zero = AffinoidScalar(ring, {}) if ring.k else ring.zero()
    for (x, b, k), value in zip(basis, vector):
        row = moments[x].setdefault(b, [zero] * count)
        if isinstance(value, int):
            value = AffinoidScalar.constant(ring, value) if ring.k else ring.scalar(value)
        row[k] = value
    values = {x: Distribution(ring, "N", level, degree, moments[x], model.n) for x in model.classes}
    return ModularForm(model, weight, values)


def form_to_vector(phi: ModularForm) -> List[Any]:
    return [phi.values[x].moment(b, k) for x, b, k in _basis(phi.model, phi.level, phi.degree)]


def up_matrix(model: ClassSetModel, weight: AnyWeight, level: int, degree: int, ring: RingDescriptor) -> UpMatrix:
    """Columns are U_p of the moment basis vectors"""
    basis = _basis(model, level, degree)
    maps = coset_maps(model, weight, ring, _working_precision(ring, level))
    degrees = coeff.all_multidegrees(ring.k, ring.D) if ring.k else [()]
    blocks = {deg: [[0] * len(basis) for _ in basis] for deg in degrees}
    for col in range(len(basis)):
        unit_vec = [0] * len(basis)
        unit_vec[col] = 1
        image = form_to_vector(up_apply(form_from_vector(model, weight, ring, level, degree, unit_vec), maps))
        for row, value in enumerate(image):
            if ring.k:
                for deg in degrees:
                    blocks[deg][row][col] = value.coefficient(deg).constant()
            else:
                blocks[()][row][col] = value.constant()
    logger.info("U_p matrix of size %d built at precision %d", len(basis), ring.N)
    return UpMatrix(basis, blocks, model.p, ring.N)


def up_spectrum(U: UpMatrix) -> Dict[str, Any]:
    """Newton slopes of the characteristic polynomial of the truncated operator"""
    M = U.center()
    cp = padic_linalg.charpoly(M, U.p ** U.precision)
    slopes = padic_linalg.newton_slopes(cp, U.p, U.precision)
    return {"size": U.size, "slopes": [None if s == float("inf") else float(s) for s in slopes]}


def _guard_digits(size: int) -> int:
    return 2 * size + 12


def eigenform(
    model: ClassSetModel,
    weight: Weight,
    alpha: int,
    level: int,
    degree: int,
    ring: RingDescriptor,
) -> ModularForm:
    """The alpha-eigenform, normalized so its first unit moment is 1"""
    size = len(_basis(model, level, degree))
    guard = _guard_digits(size)
    hi = ring.with_precision(ring.N + guard)
    U = up_matrix(model, weight, level, degree, hi)
    A = padic_linalg.mat_sub_scalar(U.center(), alpha, hi.modulus)
    try:
        vec, loss = padic_linalg.kernel_vector(A, ring.p, hi.N, ring.N)
    except PreconditionError as e:
        if e.code == "padic_linalg.kernel_dimension":
            raise PreconditionError("autforms.eigenspace_dimension", f"alpha={alpha}: {e.message}")
        raise
    logger.info("eigenform for alpha=%d found, %d guard digits used", alpha, loss)
    return form_from_vector(model, weight, ring, level, degree, vec)


@dataclass(frozen=True)
class EigenspaceReport:
    alpha: int
    dimension: int
    generalized_dimension: int

    @property
    def semisimple(self) -> bool:
        return self.dimension == self.generalized_dimension

    def to_json(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "dimension": self.dimension,
            "generalized_dimension": self.generalized_dimension,
            "semisimple": self.semisimple,
        }


def localize(model: ClassSetModel, weight: Weight, alpha: int, level: int, degree: int, ring: RingDescriptor) -> EigenspaceReport:
    """Dimensions of the alpha-eigenspace and generalized eigenspace"""
    size = len(_basis(model, level, degree))
    hi = ring.with_precision(ring.N + _guard_digits(size))
    U = up_matrix(model, weight, level, degree, hi)
    A = padic_linalg.mat_sub_scalar(U.center(), alpha, hi.modulus)
    dim = size - padic_linalg.rank(A, ring.p, hi.N)
    A_pow = A
    for _ in range(size - 1):
        A_pow = padic_linalg.mat_mul(A_pow, A, hi.modulus)
    gen_dim = size - padic_linalg.rank(A_pow, ring.p, hi.N)
    if dim == 0:
        raise PreconditionError("autforms.empty_eigenspace", f"{alpha} is not an eigenvalue of U_p")
    return EigenspaceReport(alpha, dim, gen_dim)


def check_eigen(phi: ModularForm, alpha, digits: int) -> bool:
    image = up_apply(phi)
    expected = phi.scale(alpha)
    return all(agree(image.values[x], expected.values[x], digits) for x in phi.model.classes)


def specialize_form(phi: ModularForm, point: Sequence[int]) -> ModularForm:
    """Evaluate a form over a weight disc at one point of the disc"""
    if not isinstance(phi.weight, AffinoidWeight):
        raise PreconditionError("autforms.not_affinoid", "form has a classical weight")
    values = {x: specialize_dist(mu, point) for x, mu in phi.values.items()}
    return ModularForm(phi.model, phi.weight.at(point), values)


def classical_project(phi: ModularForm) -> Dict[int, List[Any]]:
    """
    Moments against a basis of the weight's algebraic representation restricted
    to N: the image in the classical weight. For n = 1 the basis is 1, z, ..., z^{mu_1 - mu_2}.
    """
    if not isinstance(phi.weight, Weight):
        raise PreconditionError("autforms.dimension", "classical projection needs a classical weight")
    if not phi.weight.is_dominant():
        raise PreconditionError("autforms.not_dominant", "weight is not dominant")
    n = phi.weight.n
    out = {}
    if n == 1:
        k = phi.weight.mu[0] - phi.weight.mu[1]
        for x, mu in phi.values.items():
            row = []
            for i in range(k + 1):
                f = LocAnFunction.power(mu.p, "N", mu.level, mu.degree, i, mu.ring.modulus)
                row.append(pair(mu, f))
            out[x] = row
        return out
    ring = phi.ring
    polys = [
        {e: fraction_to_int(c, ring.p, ring.modulus) for e, c in P.items()}
        for P in restricted_representation(phi.weight)
    ]
    dim = n_dimension(n)
    functions = [LocAnFunction.polynomial(ring.p, "N", phi.level, phi.degree, dim, P, ring.modulus) for P in polys]
    for x, mu in phi.values.items():
        out[x] = [pair(mu, f) for f in functions]
    return out


def random_form(model: ClassSetModel, weight: AnyWeight, ring: RingDescriptor, level: int, degree: int, seed: int = 0) -> ModularForm:
    rng = np.random.default_rng(seed)
    size = len(_basis(model, level, degree))
    if ring.k:
        vec = [
            AffinoidScalar(ring, {deg: ring.scalar(random_zp(ring, rng)) for deg in coeff.all_multidegrees(ring.k, ring.D)})
            for _ in range(size)
        ]
    else:
        vec = [random_zp(ring, rng) for _ in range(size)]
    return form_from_vector(model, weight, ring, level, degree, vec)


# level tower: H-classes at conjugated level beta


@dataclass(frozen=True)
class TowerEntry:
    """An H-class at level beta: an H-class y of level 0 and a digit word"""

    period: HPeriod
    word: Tuple[int, ...]
    path: Tuple[MonoidMap, ...]
    final_class: int


def level_tower(model: ClassSetModel, beta: int, weight: AnyWeight, ring: RingDescriptor, W: int) -> List[TowerEntry]:
    """
    Enumerate level-beta H-classes (y, 0 w_2 ... w_beta). Each carries the
    chain of U_p coset maps from g_class(y), so summing over the last digit
    reproduces U_p.
    """
    if beta < 1:
        raise PreconditionError("autforms.level", "beta must be at least 1")
    maps = coset_maps(model, weight, ring, W)
    by_digit = {x: {c.digit: (c.target, m) for c, (_, m) in zip(model.cosets[x], maps[x])} for x in model.classes}
    entries = []
    for y in model.periods:
        for tail in product(range(model.p ** up_coset_exponent(model.n)), repeat=beta - 1):
            word = (0,) + tail
            x = y.g_class
            path = []
            for digit in word:
                target, gamma = by_digit[x][digit]
                path.append(gamma)
                x = target
            entries.append(TowerEntry(y, word, tuple(path), x))
    logger.debug("level %d tower has %d H-classes", beta, len(entries))
    return entries


def xi_map(n: int, weight: AnyWeight, ring: RingDescriptor, W: int) -> MonoidMap:
    """Left translation by (g0, 1_n); for n = 1 this is z -> 1 + z"""
    if n == 1:
        return AffineMap(ring.p, W, 1, 1, 0, 1)
    return affine_map_from_pair(base_point(n, ring_make(ring.p, W)), weight, ring)


def translate_form(phi: ModularForm, entry: TowerEntry, W: int) -> Distribution:
    """The (g0, 1) t_p^beta translate of phi at a level-beta H-class"""
    mu = phi.values[entry.final_class]
    for gamma in reversed(entry.path):
        mu = act(gamma, mu)
    return act(xi_map(phi.model.n, phi.weight, phi.ring, W), mu)


def stabilizer_weight(period: HPeriod, p: int, modulus: int) -> int:
    return fraction_to_int(Fraction(1, period.stabilizer), p, modulus)


def measure_factor(model: ClassSetModel, modulus: int) -> int:
    return fraction_to_int(model.measure, model.p, modulus)


def coset_count_check(n: int, p: int) -> Dict[str, Any]:
    """[Iw t_p Iw : Iw] = p^{n(n+1)(2n+1)/6}, counted from the contraction of each N-coordinate"""
    count = sum(contraction_exponents(n))
    expected = up_coset_exponent(n)
    return {"n": n, "exponent": count, "expected": expected, "holds": count == expected}

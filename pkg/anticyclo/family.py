"""
Coleman families: order-by-order lifting of an eigenform over a weight disc, specialization and the two-variable L-function
"""
import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

from anticyclo import coeff, padic_linalg
from anticyclo.autforms import (
    ClassSetModel,
    ModularForm,
    UpMatrix,
    check_eigen,
    form_from_vector,
    form_to_vector,
    up_matrix,
)
from anticyclo.coeff import AffinoidScalar, RingDescriptor, affinoid_inverse, ring_make
from anticyclo.dist import specialize_dist
from anticyclo.errors import PreconditionError, VerificationError
from anticyclo.lfun import PadicLFunction, period_sum
from anticyclo.padic_linalg import Matrix, unit_part, vp_mod
from anticyclo.weights import (
    AffinoidWeight,
    Weight,
    crit_set,
    interlaces,
    is_classical_point,
    slope_predicates_from_valuations,
)

logger = logging.getLogger(__name__)

MultiDegree = Tuple[int, ...]


def up_matrix_family(
    model: ClassSetModel, omega: AffinoidWeight, level: int, degree: int, N: int, D: int
) -> UpMatrix:
    """U_p(w) = sum_a U_a w^a over the disc, one integer block per multidegree"""
    ring = ring_make(model.p, N, 1, omega.k, D)
    return up_matrix(model, omega, level, degree, ring)


def _eval_poly(coeffs: Sequence[int], x: int, modulus: int) -> int:
    total = 0
    for c in reversed(coeffs):
        total = (total * x + c) % modulus
    return total


def refine_eigenvalue(M: Matrix, alpha: int, p: int, prec: int) -> int:
    """Newton refinement of a simple root of the characteristic polynomial"""
    modulus = p ** prec
    cp = padic_linalg.charpoly(M, modulus)
    deriv = [(i * c) % modulus for i, c in enumerate(cp)][1:]
    for _ in range(2 * prec + 2):
        value = _eval_poly(cp, alpha, modulus)
        if value == 0:
            return alpha % modulus
        slope = _eval_poly(deriv, alpha, modulus)
        v_value = padic_linalg.vp(value, p)
        v_slope = padic_linalg.vp_mod(slope, p, prec)
        if v_value <= 2 * v_slope:
            raise PreconditionError(
                "family.eigenvalue_collision",
                f"alpha={alpha} is not an isolated root at precision {prec}",
            )
        _, u = unit_part(slope, p)
        step = (value // p ** int(v_slope)) * pow(u, -1, modulus)
        alpha = (alpha - step) % modulus
    return alpha % modulus


@dataclass
class MatrixFamilyLift:
    """Eigenpair v(w), a(w) of a matrix family, coefficients indexed by multidegree"""

    vectors: Dict[MultiDegree, List[int]]
    eigenvalue: Dict[MultiDegree, int]
    normalization: int
    radius: int
    loss: int
    precision: int


def _bordered(U0: Matrix, a0: int, v0: Sequence[int], ell: int, modulus: int) -> Matrix:
    size = len(U0)
    B = []
    for i in range(size):
        row = [(U0[i][j] - (a0 if i == j else 0)) % modulus for j in range(size)]
        row.append((-v0[i]) % modulus)
        B.append(row)
    B.append([1 if j == ell else 0 for j in range(size)] + [0])
    return B


def _below(alpha: MultiDegree) -> List[MultiDegree]:
    return [tuple(b) for b in product(*(range(a + 1) for a in alpha))]


def lift_matrix_family(
    blocks: Dict[MultiDegree, Matrix],
    alpha0: int,
    p: int,
    prec: int,
    k: int,
    D: int,
    target: int,
) -> MatrixFamilyLift:
    """
    Solve U(w) v(w) = a(w) v(w) degree by degree with v_0[ell] = 1 and
    v_a[ell] = 0 otherwise, through the bordered system
    [[U_0 - a_0, -v_0], [e_ell, 0]] (v_a, a_a) = (R_a, 0).
    """
    zero_deg = (0,) * k
    U0 = blocks[zero_deg]
    size = len(U0)
    alpha0 = refine_eigenvalue(U0, alpha0, p, prec)
    v0, loss_v = padic_linalg.kernel_vector(padic_linalg.mat_sub_scalar(U0, alpha0, p ** prec), p, prec)
    current = prec - loss_v
    ell = next(i for i, c in enumerate(v0) if c % p)

    B = _bordered(U0, alpha0, v0, ell, p ** current)
    radius_v, exact = padic_linalg.det_valuation(B, p, current)
    if not exact:
        raise PreconditionError("family.eigenvalue_collision", "the bordered system is singular: alpha is not simple")
    radius = int(radius_v) + 1
    probe = [row[0] for row in B]
    _, loss_b = padic_linalg.solve(B, probe, p, current)

    vectors: Dict[MultiDegree, List[int]] = {zero_deg: [c % p ** current for c in v0]}
    eigen: Dict[MultiDegree, int] = {zero_deg: alpha0 % p ** current}
    degrees = coeff.all_multidegrees(k, D)
    precision_by_total = {0: current}
    for alpha in degrees:
        if alpha == zero_deg:
            continue
        t = sum(alpha)
        work = precision_by_total[t - 1]
        out_prec = work - loss_b
        if out_prec < target:
            raise PreconditionError(
                "family.precision_exhausted",
                f"degree {t} keeps {out_prec} digits, {target} requested",
            )
        mod = p ** work
        rhs = [0] * size
        for beta in _below(alpha):
            if beta == zero_deg:
                continue
            gamma = tuple(a - b for a, b in zip(alpha, beta))
            v_gamma = vectors[gamma]
            U_beta = blocks.get(beta)
            if U_beta is not None:
                Uv = padic_linalg.mat_vec(U_beta, v_gamma, mod)
                rhs = [(r - x) % mod for r, x in zip(rhs, Uv)]
            if beta != alpha:
                a_beta = eigen[beta]
                rhs = [(r + a_beta * x) % mod for r, x in zip(rhs, v_gamma)]
        sol, _ = padic_linalg.solve(
            [[x % mod for x in row] for row in B], rhs + [0], p, work, out_prec
        )
        vectors[alpha] = sol[:size]
        eigen[alpha] = sol[size]
        precision_by_total[t] = min(precision_by_total.get(t, out_prec), out_prec)
    final = min(precision_by_total.values())
    modulus = p ** target
    logger.info("family lifted to degree %d, %d digits left, radius %d", D, final, radius)
    return MatrixFamilyLift(
        {d: [c % modulus for c in v] for d, v in vectors.items()},
        {d: a % modulus for d, a in eigen.items()},
        ell,
        radius,
        prec - final,
        target,
    )


def family_residual(blocks: Dict[MultiDegree, Matrix], lift: MatrixFamilyLift, p: int, k: int, D: int) -> float:
    """min valuation of the coefficients of U(w) v(w) - a(w) v(w) through degree D"""
    mod = p ** lift.precision
    worst = math.inf
    for alpha in coeff.all_multidegrees(k, D):
        acc = [0] * len(lift.vectors[(0,) * k])
        for beta in _below(alpha):
            gamma = tuple(a - b for a, b in zip(alpha, beta))
            v_gamma = lift.vectors[gamma]
            if beta in blocks:
                Uv = padic_linalg.mat_vec(blocks[beta], v_gamma, mod)
                acc = [(x + y) % mod for x, y in zip(acc, Uv)]
            acc = [(x - lift.eigenvalue[beta] * y) % mod for x, y in zip(acc, v_gamma)]
        for x in acc:
            worst = min(worst, vp_mod(x, p, lift.precision))
    return worst


@dataclass
class FamilyEigenform:
    """A Coleman family through a classical eigenform, with its certificate"""

    model: ClassSetModel
    omega: AffinoidWeight
    ring: RingDescriptor
    level: int
    degree: int
    vector: List[AffinoidScalar]
    eigenvalue: AffinoidScalar
    alpha0: int
    radius: int
    residual: float
    provenance: Dict[str, Any] = field(default_factory=dict)

    def form(self) -> ModularForm:
        return form_from_vector(self.model, self.omega, self.ring, self.level, self.degree, self.vector)

    def to_json(self) -> Dict[str, Any]:
        return {
            "omega": self.omega.to_json(),
            "ring": self.ring.descriptor(),
            "ring_hash": self.ring.content_hash(),
            "level": self.level,
            "degree": self.degree,
            "alpha0": self.alpha0,
            "eigenvalue": coeff.encode_affinoid(self.eigenvalue),
            "radius": self.radius,
            "residual_valuation": None if self.residual == math.inf else self.residual,
            "provenance": self.provenance,
        }


def _require_noncritical(weight: Weight, alpha: int, p: int):
    v_alpha, _ = unit_part(alpha, p)
    report = slope_predicates_from_valuations(weight, v_alpha, v_alpha)
    if not report.noncritical:
        raise PreconditionError("family.critical_slope", f"slope {v_alpha} is critical at {weight.to_json()}")


def _family_guard(size: int, D: int) -> int:
    return (D + 2) * (2 * size + 12)


def lift_family(phi: ModularForm, alpha: int, omega: AffinoidWeight, D: int) -> FamilyEigenform:
    """Continue the eigenpair (phi, alpha) over omega to total degree D"""
    if not isinstance(phi.weight, Weight) or phi.weight != omega.center:
        raise PreconditionError("family.center_mismatch", "omega must be centered at the weight of phi")
    ring = phi.ring
    p, N = ring.p, ring.N
    alpha %= ring.modulus
    _require_noncritical(phi.weight, alpha, p)
    if not check_eigen(phi, alpha, N):
        raise PreconditionError("family.not_eigen", f"form is not a U_p-eigenform with eigenvalue {alpha}")

    base = form_to_vector(phi)
    size = len(base)
    prec = N + _family_guard(size, D)
    U = up_matrix_family(phi.model, omega, phi.level, phi.degree, prec, D)
    lift = lift_matrix_family(U.blocks, alpha, p, prec, omega.k, D, N)

    # rescale so the center is phi itself
    base_ints = [x.constant() for x in base]
    c = base_ints[lift.normalization]
    v0 = lift.vectors[(0,) * omega.k]
    if any((c * a - b) % ring.modulus for a, b in zip(v0, base_ints)):
        raise PreconditionError("family.not_eigen", "phi is not on the lifted eigenline")

    aff = ring_make(p, N, 1, omega.k, D)
    vector = []
    for i in range(size):
        terms = {deg: aff.scalar(c * v[i]) for deg, v in lift.vectors.items()}
        vector.append(AffinoidScalar(aff, terms))
    eigenvalue = AffinoidScalar(aff, {deg: aff.scalar(a) for deg, a in lift.eigenvalue.items()})

    residual = family_residual({d: [[x % ring.modulus for x in row] for row in M] for d, M in U.blocks.items()}, lift, p, omega.k, D)
    if residual < N - 2:
        raise VerificationError("family.residual", f"eigen residual has valuation {residual}, below {N - 2}")
    return FamilyEigenform(
        phi.model,
        omega,
        aff,
        phi.level,
        phi.degree,
        vector,
        eigenvalue,
        alpha,
        lift.radius,
        residual,
        {"model": phi.model.name, "center": phi.weight.to_json(), "alpha": alpha, "D": D},
    )


@dataclass
class Specialization:
    form: ModularForm
    eigenvalue: int
    precision: int
    weight: Weight
    dominant: bool
    classical: bool
    crit: Optional[Dict[str, Any]]

    def to_json(self) -> Dict[str, Any]:
        return {
            "weight": self.weight.to_json(),
            "eigenvalue": self.eigenvalue,
            "precision": self.precision,
            "dominant": self.dominant,
            "classical": self.classical,
            "crit": self.crit,
        }


def _point_flags(omega: AffinoidWeight, point: Sequence[int]) -> Tuple[Weight, bool, bool, Optional[Dict[str, Any]]]:
    w = omega.at(point)
    dominant = w.is_dominant()
    classical = dominant and interlaces(w) and is_classical_point(omega.center, omega.directions, point)
    crit = crit_set(w).to_json() if dominant else None
    return w, dominant, classical, crit


def specialize_family(F: FamilyEigenform, point: Sequence[int]) -> Specialization:
    """The eigenform at a point of the disc, with the precision the truncation guarantees"""
    values = [coeff.specialize(x, point) for x in F.vector]
    a = coeff.specialize(F.eigenvalue, point)
    base = ring_make(F.ring.p, F.ring.N)
    w, dominant, classical, crit = _point_flags(F.omega, point)
    form = form_from_vector(
        F.model, w, base, F.level, F.degree, [base.scalar(v.value.coeffs) for v in values]
    )
    precision = min([a.precision] + [v.precision for v in values])
    return Specialization(form, a.value.constant(), precision, w, dominant, classical, crit)


def classical_points(omega: AffinoidWeight, p: int, bound: int = 3) -> List[Dict[str, Any]]:
    """Integer points p*t of the disc with |t| <= bound, and their classical flags"""
    out = []
    for steps in product(range(-bound, bound + 1), repeat=omega.k):
        point = [p * t for t in steps]
        w, dominant, classical, crit = _point_flags(omega, point)
        out.append({"point": point, "weight": w.to_json(), "dominant": dominant, "classical": classical, "crit": crit})
    return out


def _slope_split(eigenvalue: AffinoidScalar, p: int) -> Tuple[int, AffinoidScalar]:
    """a(w) = p^v u(w) with u(0) a unit; every coefficient must carry p^v"""
    ring = eigenvalue.ring
    v = vp_mod(eigenvalue.constant_term().constant(), p, ring.N)
    if v == math.inf:
        raise PreconditionError("family.zero_alpha", "the center eigenvalue vanishes at working precision")
    if v == 0:
        return 0, eigenvalue
    v = int(v)
    terms = {}
    for deg, c in eigenvalue.terms.items():
        value = c.constant()
        if vp_mod(value, p, ring.N) < v:
            raise PreconditionError(
                "family.slope_varies", f"coefficient {deg} of a_p(w) is not divisible by {p}^{v}"
            )
        terms[deg] = ring.scalar(value // p ** v)
    return v, AffinoidScalar(ring, terms)


def family_Lp(F: FamilyEigenform, beta: int = 1) -> PadicLFunction:
    """a_p(w)^{-beta} times the level-beta period sum of the family, with p^{v beta} carried as a shift"""
    if beta < 1:
        raise PreconditionError("family.beta", "beta must be at least 1")
    v, unit = _slope_split(F.eigenvalue, F.ring.p)
    inv = affinoid_inverse(unit)
    scale = AffinoidScalar.constant(F.ring, 1)
    for _ in range(beta):
        scale = scale * inv
    dist = period_sum(F.form(), beta).scale(scale)
    if v:
        logger.info("family L-function at slope %d, shift %d", v, v * beta)
    return PadicLFunction(dist, v * beta, beta, F.omega, F.eigenvalue, F.model.name)


def specialize_Lp(L: PadicLFunction, point: Sequence[int]) -> PadicLFunction:
    """Evaluate a family L-function at a point of the weight disc"""
    if not isinstance(L.weight, AffinoidWeight):
        raise PreconditionError("family.not_affinoid", "L-function has no weight variable")
    dist = specialize_dist(L.dist, point)
    alpha = coeff.specialize(L.alpha, point).value.constant()
    return PadicLFunction(dist, L.shift, L.beta, L.weight.at(point), alpha, L.model_name)

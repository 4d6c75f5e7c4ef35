"""
Anticyclotomic p-adic L-functions: period sums over the level tower, character values and interpolation bookkeeping
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Optional

import sympy

from anticyclo import coeff
from anticyclo.autforms import (
    ModularForm,
    check_eigen,
    level_tower,
    measure_factor,
    stabilizer_weight,
    translate_form,
)
from anticyclo.coeff import PadicScalar, RingDescriptor, embed, ring_make
from anticyclo.dist import (
    AnyWeight,
    Distribution,
    GrowthReport,
    LocAnFunction,
    agree,
    coarsen,
    growth_report,
    kappa,
    pair,
    weight_series,
)
from anticyclo.errors import PreconditionError
from anticyclo.padic_linalg import unit_part
from anticyclo.weights import Weight, crit_set, up_coset_exponent

logger = logging.getLogger(__name__)

INTERPOLATION = "interpolation"
NO_SEMANTICS = "no interpolation semantics"


def character_ring(p: int, N: int, beta: int) -> RingDescriptor:
    """Z/p^N[zeta_m] with m = (p-1) p^beta, holding every character of conductor p^beta and zeta_{p^beta}"""
    return ring_make(p, N, (p - 1) * p ** beta)


@lru_cache(maxsize=None)
def _discrete_logs(p: int, beta: int) -> Dict[int, int]:
    modulus = p ** beta
    g = sympy.primitive_root(modulus)
    if g is None:
        raise PreconditionError("lfun.non_cyclic", f"(Z/{modulus})^x is not cyclic")
    logs = {}
    x = 1
    for e in range(int(sympy.totient(modulus))):
        logs[x] = e
        x = (x * g) % modulus
    return logs


@dataclass(frozen=True)
class AnticyclotomicCharacter:
    """z -> z^j * chi(z mod p^beta), chi(g^e) = zeta^(k e) for the fixed primitive root g"""

    p: int
    beta: int
    k: int
    j: int = 0

    @property
    def order_bound(self) -> int:
        """phi(p^beta)"""
        return 1 if self.beta == 0 else (self.p - 1) * self.p ** (self.beta - 1)

    @property
    def generator(self) -> Optional[int]:
        if self.beta == 0:
            return None
        return int(sympy.primitive_root(self.p ** self.beta))

    @property
    def order(self) -> int:
        return self.order_bound // math.gcd(self.k % self.order_bound, self.order_bound)

    @property
    def primitive(self) -> bool:
        """Conductor exactly p^beta"""
        if self.beta == 0:
            return True
        if self.beta == 1:
            return self.k % (self.p - 1) != 0
        return self.k % self.p != 0

    def inverse(self) -> "AnticyclotomicCharacter":
        return AnticyclotomicCharacter(self.p, self.beta, (-self.k) % self.order_bound, -self.j)

    def finite_exponent(self, a: int, m: int) -> int:
        """e with chi(a) = zeta_m^e"""
        if self.beta == 0:
            return 0
        if m % self.order_bound != 0:
            raise PreconditionError("lfun.ring_too_small", f"zeta_{m} does not hold characters mod {self.p}^{self.beta}")
        residue = a % self.p ** self.beta
        logs = _discrete_logs(self.p, self.beta)
        if residue not in logs:
            raise PreconditionError("lfun.non_unit", f"{a} is not a unit mod {self.p}")
        return (self.k * logs[residue] * (m // self.order_bound)) % m

    def value(self, a: int, ring: RingDescriptor) -> PadicScalar:
        """chi(a) for the finite-order part"""
        return ring.root_power(self.finite_exponent(a, ring.m))

    def accessible(self, weight: Weight) -> bool:
        return self.j in crit_set(weight)

    def to_json(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "beta": self.beta,
            "k": self.k,
            "j": self.j,
            "generator": self.generator,
            "primitive": self.primitive,
        }

    @classmethod
    def from_json(cls, payload: Dict[str, Any]) -> "AnticyclotomicCharacter":
        return cls(int(payload["p"]), int(payload.get("beta", 0)), int(payload.get("k", 0)), int(payload.get("j", 0)))


def enumerate_characters(p: int, beta: int, j: int = 0, primitive_only: bool = False) -> List[AnticyclotomicCharacter]:
    count = 1 if beta == 0 else (p - 1) * p ** (beta - 1)
    chars = [AnticyclotomicCharacter(p, beta, k, j) for k in range(count)]
    if primitive_only:
        chars = [c for c in chars if c.primitive]
    return chars


def character_function(chi: AnticyclotomicCharacter, level: int, degree: int, ring: RingDescriptor) -> LocAnFunction:
    """z -> chi(z) z^j on Z_p^x, expanded cosetwise at the given level"""
    if level < chi.beta:
        raise PreconditionError("lfun.insufficient_level", f"level {level} cannot resolve conductor {chi.p}^{chi.beta}")
    f = LocAnFunction.power(chi.p, "Zpx", level, degree, chi.j, ring.modulus)
    pieces = {}
    for b, row in f.pieces.items():
        value = chi.value(b, ring)
        pieces[b] = [value * c for c in row]
    return LocAnFunction(chi.p, "Zpx", level, degree, pieces)


def embed_distribution(mu: Distribution, ring: RingDescriptor) -> Distribution:
    moments = {b: [embed(x, ring.m) for x in values] for b, values in mu.moments.items()}
    return Distribution(ring, mu.domain, mu.level, mu.degree, moments, mu.n)


def gauss_sum(chi: AnticyclotomicCharacter, sign: int = 1, N: int = 8) -> PadicScalar:
    """sum over units a mod p^beta of chi(a) zeta_{p^beta}^{sign * a}"""
    if chi.beta < 1 or not chi.primitive:
        raise PreconditionError("lfun.imprimitive", f"Gauss sums need a primitive character, got {chi.to_json()}")
    ring = character_ring(chi.p, N, chi.beta)
    step = ring.m // chi.p ** chi.beta
    total = ring.zero()
    for a in range(1, chi.p ** chi.beta):
        if a % chi.p == 0:
            continue
        total = total + ring.root_power(chi.finite_exponent(a, ring.m) + sign * a * step)
    return total


def gauss_identity(chi: AnticyclotomicCharacter, N: int = 8) -> bool:
    """G(chi, psi) * G(chi^{-1}, psi^{-1}) = p^beta"""
    product = gauss_sum(chi, 1, N) * gauss_sum(chi.inverse(), -1, N)
    return product == chi.p ** chi.beta


def index_exponent(n: int) -> int:
    return n * (n + 1) * (n + 2) // 3


def _correction_rational(n: int, p: int, beta: int) -> Fraction:
    rational = Fraction(1)
    for i in range(1, n + 1):
        rational *= Fraction(p ** i, p ** i - 1) ** 2
    return rational * Fraction(1, p ** (up_coset_exponent(n) * beta))


def interpolation_value(n: int, p: int, beta: int, alpha: int) -> Fraction:
    """The full factor as an exact rational number, alpha^{-beta} included"""
    if beta < 1:
        raise PreconditionError("lfun.beta", "the interpolation factor needs beta >= 1")
    if alpha == 0:
        raise PreconditionError("lfun.zero_alpha", "alpha must be nonzero")
    return _correction_rational(n, p, beta) / Fraction(alpha) ** beta


def interpolation_factor(n: int, p: int, beta: int, alpha: int) -> Dict[str, Any]:
    """
    prod_i (1 - p^{-i})^{-2} * (p^{-n(n+1)(2n+1)/6} / alpha)^beta with the
    measure constant set to 1. The value is exact for unit and non-unit alpha alike.
    """
    value = interpolation_value(n, p, beta, alpha)
    rational = _correction_rational(n, p, beta)
    e = up_coset_exponent(n)
    v_alpha, _ = unit_part(alpha, p)
    return {
        "n": n,
        "p": p,
        "beta": beta,
        "rational": str(rational),
        "value": str(value),
        "alpha_exponent": -beta,
        "valuation": n * (n + 1) - beta * (e + v_alpha),
        "beta_valuation": -beta * (e + v_alpha),
    }


def correction_chain(n: int, p: int, beta: int, alpha: int) -> Dict[str, Any]:
    """Index factor times the Gauss-sum power against the displayed p-power, residual reported"""
    index_part = -index_exponent(n) * beta
    gauss_part = beta * n * (n + 1) // 2
    displayed = -up_coset_exponent(n) * beta
    residual = displayed - (index_part + gauss_part)
    if residual:
        logger.warning("correction chain for n=%d does not close: residual p^%d", n, residual)
    return {
        "n": n,
        "beta": beta,
        "index_exponent": index_part,
        "gauss_exponent": gauss_part,
        "displayed_exponent": displayed,
        "residual": residual,
        "consistent": residual == 0,
        "factor": interpolation_factor(n, p, beta, alpha),
    }


MAX_ENUMERATION = 10 ** 6


def index_check(n: int, p: int, beta: int) -> Dict[str, Any]:
    """
    [K_beta : K_{beta+1}] by counting entry residues mod p^M, where K_beta
    asks g_ij = 0 mod p^{beta |e_i - e_j|} with e = (n, ..., 0).

    This is a symmetric congruence model on the GL_{n+1} factor alone: both
    triangles of g carry the same p-power condition and the GL_n factor g' is
    left out of the count. The model reproduces the index of the conjugated
    level groups, whose GL_n part cancels in the quotient, without enumerating
    the conjugation itself.
    """
    if beta < 1:
        raise PreconditionError("lfun.beta", "index check needs beta >= 1")
    M = (beta + 1) * n
    modulus = p ** M
    if modulus > MAX_ENUMERATION:
        raise PreconditionError("lfun.enumeration_overflow", f"p^{M} residues per entry exceed the enumeration guard")
    e = list(range(n, -1, -1))

    def count(level: int, i: int, j: int) -> int:
        if i == j:
            return sum(1 for x in range(modulus) if x % p)
        step = p ** min(level * abs(e[i] - e[j]), M)
        return sum(1 for x in range(modulus) if x % step == 0)

    big = 1
    small = 1
    for i in range(n + 1):
        for j in range(n + 1):
            big *= count(beta, i, j)
            small *= count(beta + 1, i, j)
    enumerated = big // small
    formula = p ** index_exponent(n)
    return {
        "n": n,
        "p": p,
        "beta": beta,
        "enumerated": enumerated,
        "formula": formula,
        "holds": big % small == 0 and enumerated == formula,
    }


@dataclass
class PadicLFunction:
    """L = p^{-shift} * dist on Z_p^x, where dist = u^{-beta} times the level-beta period sum"""

    dist: Distribution
    shift: int
    beta: int
    weight: AnyWeight
    alpha: Any
    model_name: str = "class-set"

    @property
    def slope(self) -> Fraction:
        return Fraction(self.shift, self.beta)

    def to_json(self) -> Dict[str, Any]:
        weight = self.weight.to_json()
        return {
            "beta": self.beta,
            "shift": self.shift,
            "slope": str(self.slope),
            "weight": weight,
            "model": self.model_name,
            "level": self.dist.level,
            "degree": self.dist.degree,
            "ring": self.dist.ring.descriptor(),
            "ring_hash": self.dist.ring.content_hash(),
        }


def _tower_precision(phi: ModularForm, beta: int) -> int:
    return phi.ring.N + phi.level + beta + phi.degree + 4


def period_sum(phi: ModularForm, beta: int) -> Distribution:
    """mu(K) * sum over level-beta H-classes of kappa(translate of phi) / |stabilizer|"""
    model = phi.model
    if not model.periods:
        raise PreconditionError("lfun.missing_periods", "class-set model has no H-period table")
    W = _tower_precision(phi, beta)
    modulus = phi.ring.modulus
    total: Optional[Distribution] = None
    for entry in level_tower(model, beta, phi.weight, phi.ring, W):
        xi = translate_form(phi, entry, W)
        term = kappa(xi, phi.weight).scale(stabilizer_weight(entry.period, model.p, modulus))
        total = term if total is None else _add_aligned(total, term)
    logger.debug("period sum at beta=%d over %d H-classes", beta, len(model.periods) * model.p ** (beta - 1))
    return total.scale(measure_factor(model, modulus))


def _add_aligned(a: Distribution, b: Distribution) -> Distribution:
    level = min(a.level, b.level)
    return coarsen(a, level) + coarsen(b, level)


def build_Lp(phi: ModularForm, alpha: int, beta: int = 1, check: bool = True) -> PadicLFunction:
    """alpha^{-beta} times the level-beta period sum, stored as an integral distribution and a p-power shift"""
    if beta < 1:
        raise PreconditionError("lfun.beta", "beta must be at least 1")
    ring = phi.ring
    alpha %= ring.modulus
    if alpha == 0:
        raise PreconditionError("lfun.zero_alpha", "alpha vanishes at working precision")
    if check and not check_eigen(phi, alpha, ring.N):
        raise PreconditionError("lfun.not_eigen", f"form is not a U_p-eigenform with eigenvalue {alpha}")
    v, u = unit_part(alpha, ring.p)
    dist = period_sum(phi, beta).scale(pow(pow(u, -1, ring.modulus), beta, ring.modulus))
    logger.info("L-function built at beta=%d, slope %d, level %d", beta, v, dist.level)
    return PadicLFunction(dist, v * beta, beta, phi.weight, alpha, phi.model.name)


def values_ring(chi: AnticyclotomicCharacter, N: int, ring: Optional[RingDescriptor] = None) -> RingDescriptor:
    """Where the values of chi are computed: the given cyclotomic ring at precision N, or the smallest one"""
    if ring is None:
        return character_ring(chi.p, N, chi.beta)
    if ring.p != chi.p or ring.m % ((chi.p - 1) * chi.p ** chi.beta) != 0:
        raise PreconditionError(
            "lfun.ring_too_small", f"Z/{ring.p}^N[zeta_{ring.m}] does not hold characters of conductor {chi.p}^{chi.beta}"
        )
    return ring_make(ring.p, N, ring.m)


@dataclass(frozen=True)
class LValue:
    value: PadicScalar
    shift: int
    accessible: bool
    semantics: str

    def to_json(self) -> Dict[str, Any]:
        return {
            "value": coeff.encode_scalar(self.value),
            "shift": self.shift,
            "accessible": self.accessible,
            "semantics": self.semantics,
        }


def eval_character(L: PadicLFunction, chi: AnticyclotomicCharacter, ring: Optional[RingDescriptor] = None) -> LValue:
    """int chi dL, returned as an integral value and the power p^{-shift} it carries"""
    mu = L.dist
    if mu.affinoid:
        raise PreconditionError("lfun.affinoid", "specialize a family L-function before evaluating characters")
    ring = values_ring(chi, mu.ring.N, ring)
    f = character_function(chi, mu.level, mu.degree, ring)
    value = pair(embed_distribution(mu, ring), f)
    accessible = isinstance(L.weight, Weight) and L.weight.is_dominant() and chi.accessible(L.weight)
    return LValue(value, L.shift, accessible, INTERPOLATION if accessible else NO_SEMANTICS)


def twisted_period(
    phi: ModularForm, alpha: int, beta: int, chi: AnticyclotomicCharacter, values: Optional[RingDescriptor] = None
) -> PadicScalar:
    """
    u^{-beta} mu(K) sum over level-beta H-classes of the translate paired with
    chi(1/z) u_(mu, lambda + j), computed without kappa.
    """
    if not isinstance(phi.weight, Weight):
        raise PreconditionError("lfun.affinoid", "twisted periods need a classical weight")
    ring = phi.ring
    model = phi.model
    W = _tower_precision(phi, beta)
    char_ring = values_ring(chi, ring.N, values)
    shifted = phi.weight.shift(chi.j)
    total = char_ring.zero()
    for entry in level_tower(model, beta, phi.weight, ring, W):
        xi = translate_form(phi, entry, W)
        level = xi.level
        if level < chi.beta:
            raise PreconditionError("lfun.insufficient_level", "translate is too coarse for the character")
        f = LocAnFunction.from_series(
            ring.p, "N", level, xi.degree, xi.cosets(), lambda z: weight_series(shifted, z), W
        )
        pieces = {}
        for b, row in f.pieces.items():
            twist = chi.value(pow(b, -1, ring.p ** level), char_ring)
            pieces[b] = [twist * c for c in row]
        f = LocAnFunction(ring.p, "N", level, xi.degree, pieces)
        term = pair(embed_distribution(xi, char_ring), f)
        total = total + term * stabilizer_weight(entry.period, model.p, ring.modulus)
    _, u = unit_part(alpha % ring.modulus, ring.p)
    return total * measure_factor(model, ring.modulus) * pow(pow(u, -1, ring.modulus), beta, ring.modulus)


def agree_lfunctions(L1: PadicLFunction, L2: PadicLFunction, digits: int) -> bool:
    """Compare p^{-shift} dist at the common level after clearing the larger shift"""
    level = min(L1.dist.level, L2.dist.level)
    s = max(L1.shift, L2.shift)
    p = L1.dist.p
    a = coarsen(L1.dist, level).scale(p ** (s - L1.shift))
    b = coarsen(L2.dist, level).scale(p ** (s - L2.shift))
    return agree(a, b, digits)


@dataclass(frozen=True)
class GrowthCertificate:
    report: GrowthReport
    slope: Fraction
    certified: bool
    unique: Optional[bool]

    def to_json(self) -> Dict[str, Any]:
        return {
            "growth": self.report.to_json(),
            "slope": str(self.slope),
            "certified": self.certified,
            "unique": self.unique,
        }


GROWTH_TOLERANCE = Fraction(1, 4)


def certify_growth(L: PadicLFunction, r_max: Optional[int] = None) -> GrowthCertificate:
    """Measured growth order against v_p(alpha); uniqueness when v_p(alpha) < h"""
    if r_max is None:
        r_max = L.dist.level
    if r_max > L.dist.level:
        raise PreconditionError("lfun.insufficient_levels", f"moments are known up to level {L.dist.level}, not {r_max}")
    report = growth_report(L.dist, r_max, L.shift)
    slope = L.slope
    certified = report.h <= slope + GROWTH_TOLERANCE
    unique = None
    if isinstance(L.weight, Weight) and L.weight.is_dominant():
        crit = crit_set(L.weight)
        unique = (not crit.empty) and slope < crit.h
    if not certified:
        logger.warning("growth %s exceeds slope %s", report.h, slope)
    return GrowthCertificate(report, slope, certified, unique)

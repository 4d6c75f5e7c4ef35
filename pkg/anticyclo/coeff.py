"""
Finite-precision p-adic coefficient rings Z/p^N[x]/(Phi_m) and their affinoid extensions
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as cartesian
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import sympy

from anticyclo import padic_linalg
from anticyclo.errors import PreconditionError, SchemaError

logger = logging.getLogger(__name__)

INFINITY = math.inf


@dataclass(frozen=True)
class RingDescriptor:
    """Z/p^N[x]/(Phi_m), optionally with k affinoid variables truncated at total degree D"""

    p: int
    N: int
    m: int = 1
    k: int = 0
    D: int = 0
    phi: Tuple[int, ...] = field(default=(), compare=False, repr=False)
    degree: int = field(default=1, compare=False, repr=False)

    @property
    def modulus(self) -> int:
        return self.p ** self.N

    @property
    def base_key(self) -> Tuple[int, int, int]:
        """Key shared by rings whose scalars can be mixed"""
        return (self.p, self.N, self.m)

    def descriptor(self) -> Dict[str, int]:
        return {"p": self.p, "N": self.N, "m": self.m, "k": self.k, "D": self.D}

    def content_hash(self) -> str:
        """Stable hash of the descriptor, used to key stored data"""
        payload = json.dumps(self.descriptor(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def scalar(self, value: Union[int, Sequence[int], "PadicScalar"]) -> "PadicScalar":
        """Coerce an integer or coefficient list into this ring"""
        if isinstance(value, PadicScalar):
            _check_same_base(self, value.ring)
            return value
        if isinstance(value, int):
            coeffs = [value] + [0] * (self.degree - 1)
        else:
            coeffs = list(value)
        return PadicScalar(self, _reduce_poly(coeffs, self))

    def zero(self) -> "PadicScalar":
        return self.scalar(0)

    def one(self) -> "PadicScalar":
        return self.scalar(1)

    def root_power(self, e: int) -> "PadicScalar":
        """zeta_m^e"""
        return PadicScalar(self, _root_power_table(self.p, self.N, self.m)[e % self.m])

    def with_precision(self, N: int) -> "RingDescriptor":
        return ring_make(self.p, N, self.m, self.k, self.D)


def _check_same_base(a: RingDescriptor, b: RingDescriptor):
    if a.base_key != b.base_key:
        raise PreconditionError("coeff.ring_mismatch", f"cannot mix {a.base_key} with {b.base_key}")


def _conductor_split(m: int, p: int) -> Tuple[int, int]:
    s = 0
    while m % p == 0:
        m //= p
        s += 1
    return s, m


@lru_cache(maxsize=None)
def ring_make(p: int, N: int, m: int = 1, k: int = 0, D: int = 0) -> RingDescriptor:
    """Validated, cached ring descriptor with Phi_m computed once"""
    if not sympy.isprime(p):
        raise PreconditionError("coeff.composite_prime", f"p={p} is not prime")
    if N < 1:
        raise PreconditionError("coeff.precision", f"precision N={N} must be at least 1")
    if m < 1:
        raise PreconditionError("coeff.conductor", f"m={m} must be positive")
    if k < 0 or D < 0:
        raise PreconditionError("coeff.affinoid", "affinoid dimension and degree must be nonnegative")
    if k == 0 and D != 0:
        raise PreconditionError("coeff.affinoid", "a truncation degree needs at least one variable")
    _, tame = _conductor_split(m, p)
    if (p - 1) % tame != 0:
        raise PreconditionError("coeff.unsupported_conductor", f"m={m} needs a prime-to-p part dividing {p - 1}")

    x = sympy.Symbol("x")
    phi_poly = sympy.Poly(sympy.cyclotomic_poly(m, x), x)
    phi = tuple(int(c) % p ** N for c in reversed(phi_poly.all_coeffs()))
    ring = RingDescriptor(p=p, N=N, m=m, k=k, D=D, phi=phi, degree=len(phi) - 1)
    logger.debug("ring built: %s (degree %d)", ring.descriptor(), ring.degree)
    return ring


def _reduce_poly(coeffs: List[int], ring: RingDescriptor) -> Tuple[int, ...]:
    """Reduce a coefficient list modulo Phi_m and p^N"""
    deg = ring.degree
    phi = ring.phi
    modulus = ring.modulus
    work = list(coeffs)
    for i in range(len(work) - 1, deg - 1, -1):
        c = work[i]
        if c:
            base = i - deg
            for j in range(deg):
                work[base + j] -= c * phi[j]
            work[i] = 0
    work = work[:deg] + [0] * max(0, deg - len(work))
    return tuple(c % modulus for c in work)


@lru_cache(maxsize=None)
def _root_power_table(p: int, N: int, m: int) -> List[Tuple[int, ...]]:
    ring = ring_make(p, N, m)
    table = []
    for e in range(m):
        coeffs = [0] * (e + 1)
        coeffs[e] = 1
        table.append(_reduce_poly(coeffs, ring))
    return table


@dataclass(frozen=True)
class PadicScalar:
    """Element of Z/p^N[x]/(Phi_m) as a coefficient tuple"""

    ring: RingDescriptor
    coeffs: Tuple[int, ...]

    def _coerce(self, other) -> "PadicScalar":
        if isinstance(other, PadicScalar):
            _check_same_base(self.ring, other.ring)
            return other
        if isinstance(other, int):
            return self.ring.scalar(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return PadicScalar(self.ring, tuple((a + b) % self.ring.modulus for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return PadicScalar(self.ring, tuple((-a) % self.ring.modulus for a in self.coeffs))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return PadicScalar(self.ring, tuple((a * other) % self.ring.modulus for a in self.coeffs))
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.ring.degree == 1:
            return PadicScalar(self.ring, ((self.coeffs[0] * other.coeffs[0]) % self.ring.modulus,))
        prod = [0] * (2 * self.ring.degree - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    prod[i + j] += a * b
        return PadicScalar(self.ring, _reduce_poly(prod, self.ring))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return unit_inverse(self) ** (-e)
        result = self.ring.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ring.scalar(other)
        if not isinstance(other, PadicScalar):
            return NotImplemented
        return self.ring.base_key == other.ring.base_key and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ring.base_key, self.coeffs))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_constant(self) -> bool:
        return not any(self.coeffs[1:])

    def constant(self) -> int:
        """Integer representative; only valid for elements of Z/p^N"""
        if not self.is_constant():
            raise PreconditionError("coeff.not_constant", "element does not lie in Z/p^N")
        return self.coeffs[0]

    def reduce(self, N: int) -> "PadicScalar":
        """Image in the same ring at lower precision"""
        ring = self.ring.with_precision(N)
        return PadicScalar(ring, tuple(c % ring.modulus for c in self.coeffs))

    def congruent(self, other: "PadicScalar", digits: int) -> bool:
        """Agreement modulo p^digits"""
        other = self._coerce(other)
        mod = self.ring.p ** min(digits, self.ring.N)
        return all((a - b) % mod == 0 for a, b in zip(self.coeffs, other.coeffs))

    def __repr__(self):
        if self.is_constant():
            return f"PadicScalar({self.coeffs[0]} mod {self.ring.p}^{self.ring.N})"
        return f"PadicScalar({list(self.coeffs)} in Z/{self.ring.p}^{self.ring.N}[x]/Phi_{self.ring.m})"


def multiplication_matrix(x: PadicScalar) -> List[List[int]]:
    """Matrix of y -> x*y on the power basis"""
    ring = x.ring
    cols = []
    for j in range(ring.degree):
        basis = [0] * ring.degree
        basis[j] = 1
        cols.append((x * PadicScalar(ring, tuple(basis))).coeffs)
    return [[cols[j][i] for j in range(ring.degree)] for i in range(ring.degree)]


def valuation(x: PadicScalar) -> Union[Fraction, float]:
    """
    Normalized valuation with v(p) = 1, computed from the norm.
    Zero gives inf; when the norm vanishes to full precision the returned
    value is only the lower bound N/[K:Q_p].
    """
    ring = x.ring
    if x.is_zero():
        return INFINITY
    if x.is_constant():
        return Fraction(padic_linalg.vp(x.coeffs[0], ring.p))
    v_det, exact = padic_linalg.det_valuation(multiplication_matrix(x), ring.p, ring.N)
    if not exact:
        logger.debug("valuation saturated at precision %d", ring.N)
        return Fraction(ring.N, ring.degree)
    return Fraction(int(v_det), ring.degree)


def is_unit(x: PadicScalar) -> bool:
    return valuation(x) == 0


def unit_inverse(x: PadicScalar) -> PadicScalar:
    """Inverse of a unit"""
    ring = x.ring
    if x.is_constant():
        c = x.coeffs[0]
        if c % ring.p == 0:
            raise PreconditionError("coeff.non_unit", f"{c} is not a unit mod {ring.p}")
        return ring.scalar(pow(c, -1, ring.modulus))
    if valuation(x) != 0:
        raise PreconditionError("coeff.non_unit", "element is not a unit")
    rhs = [1] + [0] * (ring.degree - 1)
    sol, _ = padic_linalg.solve(multiplication_matrix(x), rhs, ring.p, ring.N, ring.N)
    return PadicScalar(ring, tuple(sol))


def embed(x: PadicScalar, m_target: int) -> PadicScalar:
    """Image under Z_p[zeta_m] -> Z_p[zeta_m'] for m | m'"""
    ring = x.ring
    if m_target % ring.m != 0:
        raise PreconditionError("coeff.embedding", f"m={ring.m} does not divide {m_target}")
    target = ring_make(ring.p, ring.N, m_target, ring.k, ring.D)
    step = m_target // ring.m
    result = target.zero()
    for i, c in enumerate(x.coeffs):
        if c:
            result = result + target.root_power(i * step) * c
    return result


def fraction_to_int(q: Union[Fraction, int], p: int, modulus: int) -> int:
    """A p-integral rational as a residue"""
    q = Fraction(q)
    if q.denominator % p == 0:
        raise PreconditionError("coeff.non_integral", f"{q} is not p-integral")
    return (q.numerator * pow(q.denominator, -1, modulus)) % modulus


# 1-unit helpers on Z_p, working at a guarded precision


def _guard(p: int, N: int) -> int:
    return int(math.log(N + 2, p)) + 2


def padic_log(x: int, p: int, N: int) -> int:
    """log of a 1-unit of Z_p, mod p^N"""
    if (x - 1) % p != 0:
        raise PreconditionError("coeff.not_one_unit", f"{x} is not congruent to 1 mod {p}")
    terms = N + 2 * _guard(p, N) + 4
    W = N + _guard(p, terms) + 1
    mod = p ** W
    y = (x - 1) % mod
    total = 0
    power = 1
    for i in range(1, terms + 1):
        power = (power * y) % mod
        v_i, u_i = padic_linalg.unit_part(i, p)
        term = (power // p ** v_i) * pow(u_i, -1, mod)
        total += term if i % 2 == 1 else -term
    return total % p ** N


def padic_exp(x: int, p: int, N: int) -> int:
    """exp of an element of pZ_p for odd p, mod p^N"""
    if p == 2 or x % p != 0:
        raise PreconditionError("coeff.exp_domain", f"exp does not converge at {x}")
    terms = (N * (p - 1)) // (p - 2) + 2
    mod = p ** N
    total = 0
    for i in range(terms + 1):
        v_f, u_f = padic_linalg.unit_part(math.factorial(i), p)
        total += (x ** i // p ** v_f) * pow(u_f, -1, mod)
    return total % mod


def teichmuller(a: int, p: int, N: int) -> int:
    """Teichmuller representative of a unit"""
    if a % p == 0:
        raise PreconditionError("coeff.non_unit", f"{a} is not a unit")
    mod = p ** N
    w = a % mod
    for _ in range(N + 1):
        w = pow(w, p, mod)
    return w


def one_unit_part(a: int, p: int, N: int) -> int:
    """<a> = a / omega(a)"""
    mod = p ** N
    return (a * pow(teichmuller(a, p, N), -1, mod)) % mod


# affinoid coefficients

MultiDegree = Tuple[int, ...]


class AffinoidScalar:
    """Truncated power series in k variables with coefficients in Z/p^N[x]/(Phi_m)"""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: RingDescriptor, terms: Optional[Dict[MultiDegree, PadicScalar]] = None):
        if ring.k < 1:
            raise PreconditionError("coeff.affinoid", "ring has no affinoid variables")
        self.ring = ring
        clean: Dict[MultiDegree, PadicScalar] = {}
        for deg, c in (terms or {}).items():
            if len(deg) != ring.k:
                raise PreconditionError("coeff.affinoid", f"multidegree {deg} has wrong arity")
            if sum(deg) > ring.D:
                continue
            c = ring.scalar(c) if isinstance(c, int) else c
            if not c.is_zero():
                clean[tuple(deg)] = c
        self.terms = clean

    @classmethod
    def constant(cls, ring: RingDescriptor, value: Union[int, PadicScalar]) -> "AffinoidScalar":
        return cls(ring, {(0,) * ring.k: ring.scalar(value)})

    @classmethod
    def variable(cls, ring: RingDescriptor, index: int) -> "AffinoidScalar":
        deg = [0] * ring.k
        deg[index] = 1
        return cls(ring, {tuple(deg): ring.one()})

    @classmethod
    def monomial(cls, ring: RingDescriptor, deg: MultiDegree, value: Union[int, PadicScalar] = 1) -> "AffinoidScalar":
        return cls(ring, {tuple(deg): ring.scalar(value)})

    def _coerce(self, other) -> "AffinoidScalar":
        if isinstance(other, AffinoidScalar):
            _check_same_base(self.ring, other.ring)
            if other.ring.k != self.ring.k:
                raise PreconditionError("coeff.ring_mismatch", "affinoid dimensions differ")
            return other
        if isinstance(other, (int, PadicScalar)):
            return AffinoidScalar.constant(self.ring, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = dict(self.terms)
        for deg, c in other.terms.items():
            terms[deg] = terms[deg] + c if deg in terms else c
        return AffinoidScalar(self.ring, terms)

    __radd__ = __add__

    def __neg__(self):
        return AffinoidScalar(self.ring, {deg: -c for deg, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, PadicScalar)):
            return AffinoidScalar(self.ring, {deg: c * other for deg, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms: Dict[MultiDegree, PadicScalar] = {}
        for d1, c1 in self.terms.items():
            for d2, c2 in other.terms.items():
                deg = tuple(a + b for a, b in zip(d1, d2))
                if sum(deg) > self.ring.D:
                    continue
                prod = c1 * c2
                terms[deg] = terms[deg] + prod if deg in terms else prod
        return AffinoidScalar(self.ring, terms)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, PadicScalar)):
            other = AffinoidScalar.constant(self.ring, other)
        if not isinstance(other, AffinoidScalar):
            return NotImplemented
        return self.ring.base_key == other.ring.base_key and self.terms == other.terms

    def __hash__(self):
        return hash((self.ring.base_key, tuple(sorted(self.terms.items(), key=lambda kv: kv[0]))))

    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self) -> PadicScalar:
        return self.terms.get((0,) * self.ring.k, self.ring.zero())

    def coefficient(self, deg: MultiDegree) -> PadicScalar:
        return self.terms.get(tuple(deg), self.ring.zero())

    def __repr__(self):
        return f"AffinoidScalar({len(self.terms)} terms, k={self.ring.k}, D={self.ring.D})"


Scalar = Union[PadicScalar, AffinoidScalar]


class SpecializedValue(NamedTuple):
    value: PadicScalar
    precision: int


def specialize(f: AffinoidScalar, point: Sequence[Union[int, PadicScalar]]) -> SpecializedValue:
    """Evaluate at a point of the closed disc v >= 1"""
    ring = f.ring
    if len(point) != ring.k:
        raise PreconditionError("coeff.point_arity", f"expected {ring.k} coordinates, got {len(point)}")
    coords = [ring.scalar(c) for c in point]
    for c in coords:
        if not c.is_zero() and valuation(c) < 1:
            raise PreconditionError("coeff.point_outside_disc", "specialization point must have valuation >= 1")

    powers: List[List[PadicScalar]] = []
    for c in coords:
        row = [ring.one()]
        for _ in range(ring.D):
            row.append(row[-1] * c)
        powers.append(row)

    total = ring.zero()
    for deg, c in f.terms.items():
        term = c
        for i, e in enumerate(deg):
            term = term * powers[i][e]
        total = total + term

    precision = ring.N if all(c.is_zero() for c in coords) else min(ring.N, ring.D + 1)
    return SpecializedValue(total, precision)


def affinoid_unit_power(u: int, e0: int, directions: Sequence[int], ring: RingDescriptor) -> AffinoidScalar:
    """
    u^(e0 + sum_i w_i * directions[i]) as a series in w, for a 1-unit u
    whenever some direction is nonzero.
    """
    base = ring.scalar(pow(u, e0, ring.modulus) if e0 >= 0 else pow(pow(u, -1, ring.modulus), -e0, ring.modulus))
    result = AffinoidScalar.constant(ring, base)
    if not any(directions):
        return result
    if (u - 1) % ring.p != 0:
        raise PreconditionError("coeff.not_one_unit", f"{u} must be a 1-unit to vary in a family")

    extra = ring.D + _guard(ring.p, ring.D + 1) + 2
    W = ring.N + extra
    mod = p_mod = ring.p ** W
    log_u = padic_log(u, ring.p, W)
    for index, d in enumerate(directions):
        if d == 0:
            continue
        a = (d * log_u) % p_mod
        terms = {}
        power = 1
        fact = 1
        for i in range(ring.D + 1):
            if i:
                power = (power * a) % mod
                fact *= i
            v_f, u_f = padic_linalg.unit_part(fact, ring.p)
            coeff = (power // ring.p ** v_f) * pow(u_f, -1, mod)
            deg = [0] * ring.k
            deg[index] = i
            terms[tuple(deg)] = ring.scalar(coeff % ring.modulus)
        result = result * AffinoidScalar(ring, terms)
    return result


# JSON encoding: base-p digits, little-endian, per coefficient


def to_digits(c: int, p: int, N: int) -> List[int]:
    """The N lowest base-p digits of c, least significant first"""
    out = []
    for _ in range(N):
        out.append(c % p)
        c //= p
    return out


def from_digits(digits: Sequence[int], p: int) -> int:
    value = 0
    for d in reversed(digits):
        if not 0 <= d < p:
            raise SchemaError("coeff.bad_digit", f"digit {d} out of range for p={p}")
        value = value * p + d
    return value


def encode_scalar(x: PadicScalar) -> Dict[str, Any]:
    ring = x.ring
    return {
        "p": ring.p,
        "N": ring.N,
        "m": ring.m,
        "coeffs": [to_digits(c, ring.p, ring.N) for c in x.coeffs],
    }


def decode_scalar(payload: Dict[str, Any]) -> PadicScalar:
    try:
        ring = ring_make(int(payload["p"]), int(payload["N"]), int(payload.get("m", 1)))
        coeffs = [from_digits(d, ring.p) for d in payload["coeffs"]]
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError("coeff.bad_scalar", f"cannot decode scalar: {e}")
    if len(coeffs) != ring.degree:
        raise SchemaError("coeff.bad_scalar", f"expected {ring.degree} coefficients, got {len(coeffs)}")
    return PadicScalar(ring, tuple(coeffs))


def encode_affinoid(f: AffinoidScalar) -> Dict[str, Any]:
    return {
        "ring": f.ring.descriptor(),
        "terms": [
            {"deg": list(deg), "value": encode_scalar(c)}
            for deg, c in sorted(f.terms.items())
        ],
    }


def decode_affinoid(payload: Dict[str, Any]) -> AffinoidScalar:
    try:
        desc = payload["ring"]
        ring = ring_make(desc["p"], desc["N"], desc.get("m", 1), desc["k"], desc["D"])
        terms = {tuple(t["deg"]): decode_scalar(t["value"]) for t in payload["terms"]}
    except (KeyError, TypeError) as e:
        raise SchemaError("coeff.bad_affinoid", f"cannot decode affinoid scalar: {e}")
    return AffinoidScalar(ring, terms)


def all_multidegrees(k: int, D: int) -> List[MultiDegree]:
    """Multidegrees of total degree <= D, graded"""
    out = [deg for deg in cartesian(range(D + 1), repeat=k) if sum(deg) <= D]
    return sorted(out, key=lambda deg: (sum(deg), deg))


def affinoid_inverse(x: AffinoidScalar) -> AffinoidScalar:
    """Inverse of a series whose constant term is a unit"""
    ring = x.ring
    c0 = x.constant_term()
    c0_inv = unit_inverse(c0)
    y = x * c0_inv - AffinoidScalar.constant(ring, 1)
    total = AffinoidScalar.constant(ring, 1)
    power = AffinoidScalar.constant(ring, 1)
    for _ in range(ring.D):
        power = power * (-y)
        total = total + power
    return total * c0_inv

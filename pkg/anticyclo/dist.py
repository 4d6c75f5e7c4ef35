"""
Locally analytic distributions as truncated moment tables, the monoid action and the pushforward kappa
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from anticyclo import coeff
from anticyclo.branching import (
    MatrixPair,
    c_ratio,
    fundamental_generators,
    random_zp,
    weight_function,
)
from anticyclo.coeff import AffinoidScalar, PadicScalar, RingDescriptor, Scalar
from anticyclo.errors import PreconditionError
from anticyclo.padic_linalg import unit_part
from anticyclo.weights import AffinoidWeight, Weight, exponent_vector, tp_exponents

logger = logging.getLogger(__name__)

DOMAINS = ("Zp", "Zpx", "N")
SUPPORTED_N = (1, 2)

AnyWeight = Union[Weight, AffinoidWeight]


def binom(j: int, i: int) -> int:
    """Binomial coefficient, valid for negative j"""
    num = 1
    for t in range(i):
        num *= j - t
    return num // math.factorial(i)


class TruncatedSeries:
    """Power series in s modulo (s^{d+1}, p^W)"""

    __slots__ = ("coeffs", "p", "W", "d")

    def __init__(self, coeffs: Sequence[int], p: int, W: int, d: int):
        mod = p ** W
        padded = list(coeffs[: d + 1]) + [0] * max(0, d + 1 - len(coeffs))
        self.coeffs = [c % mod for c in padded]
        self.p = p
        self.W = W
        self.d = d

    @property
    def modulus(self) -> int:
        return self.p ** self.W

    @classmethod
    def constant(cls, c: int, p: int, W: int, d: int) -> "TruncatedSeries":
        return cls([c], p, W, d)

    @classmethod
    def line(cls, b: int, r: int, p: int, W: int, d: int) -> "TruncatedSeries":
        """b + p^r s"""
        return cls([b, p ** r], p, W, d)

    def _like(self, coeffs: Sequence[int]) -> "TruncatedSeries":
        return TruncatedSeries(coeffs, self.p, self.W, self.d)

    def __add__(self, other):
        if isinstance(other, int):
            return self._like([self.coeffs[0] + other] + self.coeffs[1:])
        return self._like([a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return self._like([-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return self._like([a * other for a in self.coeffs])
        out = [0] * (self.d + 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j in range(self.d + 1 - i):
                    out[i + j] += a * other.coeffs[j]
        return self._like(out)

    __rmul__ = __mul__

    def is_unit(self) -> bool:
        return self.coeffs[0] % self.p != 0

    def inverse(self) -> "TruncatedSeries":
        if not self.is_unit():
            raise PreconditionError("dist.non_unit_series", "series constant term is not a unit")
        mod = self.modulus
        c0_inv = pow(self.coeffs[0], -1, mod)
        inv = [c0_inv]
        for k in range(1, self.d + 1):
            acc = sum(self.coeffs[i] * inv[k - i] for i in range(1, k + 1))
            inv.append((-acc * c0_inv) % mod)
        return self._like(inv)

    def exact_div(self, divisor: int) -> "TruncatedSeries":
        """Division by a power of p that divides every coefficient"""
        if any(c % divisor for c in self.coeffs):
            raise PreconditionError("dist.inexact_division", f"series is not divisible by {divisor}")
        return self._like([c // divisor for c in self.coeffs])

    def log(self) -> "TruncatedSeries":
        """log of a series whose constant term is a 1-unit and higher terms are divisible by p"""
        p = self.p
        mod = self.modulus
        c0 = self.coeffs[0]
        log_c0 = coeff.padic_log(c0, p, self.W)
        y = self * pow(c0, -1, mod) + (-1)
        total = self._like([log_c0])
        power = self._like([1])
        for m in range(1, self.d + 1):
            power = power * y
            v_m, u_m = unit_part(m, p)
            term = power.exact_div(p ** v_m) * pow(u_m, -1, mod)
            total = total + term if m % 2 == 1 else total - term
        return total


class LocAnFunction:
    """Function given on each coset b + p^r Z_p by a polynomial in the scaled coordinate"""

    def __init__(self, p: int, domain: str, level: int, degree: int, pieces: Dict[int, List[Any]], dim: int = 1):
        if domain not in DOMAINS:
            raise PreconditionError("dist.domain", f"unknown domain {domain}")
        self.p = p
        self.domain = domain
        self.level = level
        self.degree = degree
        self.pieces = pieces
        self.dim = dim

    @classmethod
    def from_series(
        cls,
        p: int,
        domain: str,
        level: int,
        degree: int,
        cosets: Iterable[int],
        series_at: Callable[[TruncatedSeries], Optional[TruncatedSeries]],
        W: int,
    ) -> "LocAnFunction":
        """Expand a function of z on each coset by feeding it z = b + p^r s"""
        pieces = {}
        for b in cosets:
            s = series_at(TruncatedSeries.line(b, level, p, W, degree))
            if s is not None:
                pieces[b] = list(s.coeffs)
        return cls(p, domain, level, degree, pieces)

    @classmethod
    def power(cls, p: int, domain: str, level: int, degree: int, j: int, modulus: int, cosets: Optional[Iterable[int]] = None) -> "LocAnFunction":
        """z^j, with negative j allowed on unit cosets"""
        if cosets is None:
            cosets = coset_list(p, domain, level)
        pieces = {}
        for b in cosets:
            if j < 0 and b % p == 0:
                continue
            b_inv = pow(b, -1, modulus) if b % p else None
            row = []
            for i in range(degree + 1):
                e = j - i
                bj = pow(b, e, modulus) if e >= 0 else pow(b_inv, -e, modulus)
                row.append((binom(j, i) * bj * p ** (level * i)) % modulus)
            pieces[b] = row
        return cls(p, domain, level, degree, pieces)

    @classmethod
    def indicator(cls, p: int, domain: str, level: int, degree: int, b: int) -> "LocAnFunction":
        return cls(p, domain, level, degree, {b: [1] + [0] * degree})

    @classmethod
    def polynomial(
        cls,
        p: int,
        domain: str,
        level: int,
        degree: int,
        dim: int,
        poly: Dict[Tuple[int, ...], int],
        modulus: int,
    ) -> "LocAnFunction":
        """P(b + p^r t) on every coset, truncated at total degree in t"""
        exps = multi_indices(dim, degree)
        index = {e: i for i, e in enumerate(exps)}
        origin = (0,) * dim
        pieces = {}
        for b in coset_list(p, domain, level, dim):
            base = decode_coset(b, p, level, dim) if dim > 1 else [b]
            lines = [{origin: base[i] % modulus, tuple(int(a == i) for a in range(dim)): p ** level % modulus} for i in range(dim)]
            row = [0] * len(exps)
            for k, c in poly.items():
                term = {origin: c % modulus}
                for i, ki in enumerate(k):
                    for _ in range(ki):
                        term = _poly_mul(term, lines[i], modulus)
                for e, v in term.items():
                    if e in index:
                        row[index[e]] = (row[index[e]] + v) % modulus
            pieces[b] = row
        return cls(p, domain, level, degree, pieces, dim)

    def scaled(self, c) -> "LocAnFunction":
        return LocAnFunction(
            self.p, self.domain, self.level, self.degree, {b: [c * x for x in v] for b, v in self.pieces.items()}, self.dim
        )


def coset_list(p: int, domain: str, level: int, dim: int = 1) -> List[int]:
    if domain == "Zpx" and level >= 1:
        return [b for b in range(p ** level) if b % p]
    return list(range(p ** (level * dim)))


def n1_cosets(p: int, level: int) -> List[int]:
    """Cosets of N^1 = 1 + pZ_p at the given level"""
    if level < 1:
        raise PreconditionError("dist.level", "N^1 is not a union of level-0 cosets")
    return [b for b in range(p ** level) if b % p == 1 % p]


# several N-coordinates: row-major strictly-upper entries of g, then of g'


def n_dimension(n: int) -> int:
    return n * n


@lru_cache(maxsize=None)
def multi_indices(dim: int, degree: int) -> Tuple[Tuple[int, ...], ...]:
    """Exponents of total degree <= degree, by degree and then with the leading coordinate first"""
    out = [e for e in product(range(degree + 1), repeat=dim) if sum(e) <= degree]
    return tuple(sorted(out, key=lambda e: (sum(e), tuple(-x for x in e))))


def moment_count(dim: int, degree: int) -> int:
    return math.comb(degree + dim, dim)


def encode_coset(vector: Sequence[int], p: int, level: int) -> int:
    """Mixed radix: coordinate i contributes v_i p^{level i}"""
    step = p ** level
    return sum((int(v) % step) * step ** i for i, v in enumerate(vector))


def decode_coset(b: int, p: int, level: int, dim: int) -> List[int]:
    step = p ** level
    return [(b // step ** i) % step for i in range(dim)]


def _poly_mul(a: Dict[Tuple[int, ...], int], b: Dict[Tuple[int, ...], int], mod: int) -> Dict[Tuple[int, ...], int]:
    out: Dict[Tuple[int, ...], int] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = (out.get(e, 0) + ca * cb) % mod
    return {e: c for e, c in out.items() if c}


def transfer_matrix(delta: Sequence[int], M: Sequence[Sequence[int]], degree: int, mod: int) -> List[List[int]]:
    """
    T[k][e] = coefficient of t^e in prod_i (delta_i + sum_j M_ij t_j)^{k_i}, rows and
    columns ordered by multi_indices. The product has total degree |k|, so the
    truncation at total degree is preserved.
    """
    dim = len(delta)
    exps = multi_indices(dim, degree)
    index = {e: i for i, e in enumerate(exps)}
    zero = (0,) * dim
    powers = []
    for i in range(dim):
        form = {zero: delta[i] % mod}
        for j in range(dim):
            if M[i][j] % mod:
                form[tuple(1 if a == j else 0 for a in range(dim))] = M[i][j] % mod
        row = [{zero: 1 % mod}]
        for _ in range(degree):
            row.append(_poly_mul(row[-1], form, mod))
        powers.append(row)
    rows = []
    for k in exps:
        poly = {zero: 1 % mod}
        for i, ki in enumerate(k):
            if ki:
                poly = _poly_mul(poly, powers[i][ki], mod)
        row = [0] * len(exps)
        for e, c in poly.items():
            row[index[e]] = c
        rows.append(row)
    return rows


def _transform_moments(T: List[List[int]], values: Sequence[Scalar], zero: Scalar) -> List[Scalar]:
    out = []
    for row in T:
        total = zero
        for e, c in enumerate(row):
            if c:
                total = total + values[e] * c
        out.append(total)
    return out


def _scalar_valuation(x: Any) -> Union[Fraction, float]:
    if isinstance(x, AffinoidScalar):
        if x.is_zero():
            return math.inf
        return min(coeff.valuation(c) for c in x.terms.values())
    if isinstance(x, PadicScalar):
        return coeff.valuation(x)
    raise PreconditionError("dist.scalar_type", f"cannot take the valuation of {type(x).__name__}")


def _is_zero(x: Any) -> bool:
    return x.is_zero()


class Distribution:
    """
    Moment table {coset b at level r: [int t^e d(mu) for |e| <= d]} in the scaled
    coordinate t = (z - b)/p^r. On N-coordinates with n >= 2 the coset index is
    encode_coset of the coordinate vector and the moments follow multi_indices.
    """

    def __init__(
        self,
        ring: RingDescriptor,
        domain: str,
        level: int,
        degree: int,
        moments: Optional[Dict[int, List[Scalar]]] = None,
        n: int = 1,
    ):
        if domain not in DOMAINS:
            raise PreconditionError("dist.domain", f"unknown domain {domain}")
        if domain == "N" and n not in SUPPORTED_N:
            raise PreconditionError("dist.dimension", f"N-coordinate distributions are enabled for n in {SUPPORTED_N}")
        if level < 0 or degree < 0:
            raise PreconditionError("dist.truncation", "level and degree must be nonnegative")
        self.ring = ring
        self.domain = domain
        self.level = level
        self.degree = degree
        self.n = n
        count = self.moment_count
        self.moments: Dict[int, List[Scalar]] = {}
        for b, values in (moments or {}).items():
            if len(values) != count:
                raise PreconditionError("dist.truncation", f"coset {b} has {len(values)} moments, expected {count}")
            self.moments[int(b) % self.coset_modulus] = list(values)

    @property
    def p(self) -> int:
        return self.ring.p

    @property
    def dim(self) -> int:
        return n_dimension(self.n) if self.domain == "N" else 1

    @property
    def exponents(self) -> Tuple[Tuple[int, ...], ...]:
        return multi_indices(self.dim, self.degree)

    @property
    def moment_count(self) -> int:
        return moment_count(self.dim, self.degree)

    @property
    def coset_modulus(self) -> int:
        return self.ring.p ** (self.level * self.dim)

    @property
    def affinoid(self) -> bool:
        return self.ring.k > 0

    def zero_scalar(self) -> Scalar:
        if self.affinoid:
            return AffinoidScalar(self.ring, {})
        return self.ring.zero()

    def cosets(self) -> List[int]:
        return sorted(self.moments)

    def moment(self, b: int, k: int) -> Scalar:
        values = self.moments.get(b % self.coset_modulus)
        if values is None:
            return self.zero_scalar()
        return values[k]

    def _same_shape(self, other: "Distribution"):
        if (self.domain, self.level, self.degree, self.dim) != (other.domain, other.level, other.degree, other.dim):
            raise PreconditionError("dist.truncation_mismatch", "distributions have different truncation")

    def __add__(self, other: "Distribution") -> "Distribution":
        self._same_shape(other)
        out = {b: list(v) for b, v in self.moments.items()}
        for b, v in other.moments.items():
            if b in out:
                out[b] = [x + y for x, y in zip(out[b], v)]
            else:
                out[b] = list(v)
        return Distribution(self.ring, self.domain, self.level, self.degree, out, self.n)

    def __neg__(self) -> "Distribution":
        return self.scale(-1)

    def __sub__(self, other: "Distribution") -> "Distribution":
        return self + (-other)

    def scale(self, c) -> "Distribution":
        return Distribution(
            self.ring, self.domain, self.level, self.degree,
            {b: [c * x for x in v] for b, v in self.moments.items()}, self.n,
        )

    def is_zero(self) -> bool:
        return all(_is_zero(x) for v in self.moments.values() for x in v)

    def relabel(self, domain: str) -> "Distribution":
        return Distribution(self.ring, domain, self.level, self.degree, self.moments, self.n)

    def __repr__(self):
        return f"Distribution({self.domain}, level={self.level}, degree={self.degree}, cosets={len(self.moments)})"


def pair(mu: Distribution, f: LocAnFunction):
    """mu(f)"""
    if (mu.level, mu.degree, mu.dim) != (f.level, f.degree, f.dim):
        raise PreconditionError(
            "dist.truncation_mismatch",
            f"distribution at (r={mu.level}, d={mu.degree}, dim={mu.dim}) cannot pair with function at "
            f"(r={f.level}, d={f.degree}, dim={f.dim})",
        )
    total = mu.zero_scalar()
    for b, values in mu.moments.items():
        piece = f.pieces.get(b)
        if piece is None:
            continue
        for k, x in enumerate(values):
            c = piece[k]
            if isinstance(c, int):
                if c:
                    total = total + x * c
            else:
                total = total + c * x
    return total


def coarsen(mu: Distribution, r: int) -> Distribution:
    """Exact restriction of the moment data to level r <= mu.level"""
    if r > mu.level:
        raise PreconditionError("dist.level", f"cannot refine level {mu.level} to {r}")
    if r == mu.level:
        return mu
    if mu.dim > 1:
        return _coarsen_several(mu, r)
    p = mu.p
    mod = mu.ring.modulus
    R = mu.level
    out: Dict[int, List[Scalar]] = {}
    step = p ** (R - r)
    for b, values in mu.moments.items():
        target = b % p ** r
        offset = (b - target) // p ** r
        acc = out.setdefault(target, [mu.zero_scalar() for _ in range(mu.degree + 1)])
        for k in range(mu.degree + 1):
            for i in range(k + 1):
                c = (binom(k, i) * pow(offset, k - i, mod) * pow(step, i, mod)) % mod
                if c:
                    acc[k] = acc[k] + values[i] * c
    domain = mu.domain
    return Distribution(mu.ring, domain, r, mu.degree, out, mu.n)


def _coarsen_several(mu: Distribution, r: int) -> Distribution:
    p, R, dim = mu.p, mu.level, mu.dim
    step = p ** (R - r)
    M = [[step if i == j else 0 for j in range(dim)] for i in range(dim)]
    out: Dict[int, List[Scalar]] = {}
    for b, values in mu.moments.items():
        fine = decode_coset(b, p, R, dim)
        target = [v % p ** r for v in fine]
        delta = [(v - c) // p ** r for v, c in zip(fine, target)]
        moved = _transform_moments(transfer_matrix(delta, M, mu.degree, mu.ring.modulus), values, mu.zero_scalar())
        key = encode_coset(target, p, r)
        acc = out.get(key)
        out[key] = moved if acc is None else [a + m for a, m in zip(acc, moved)]
    return Distribution(mu.ring, mu.domain, r, mu.degree, out, mu.n)


def agree(mu: Distribution, nu: Distribution, digits: int) -> bool:
    """Equality mod p^digits after coarsening to the common level and degree"""
    r = min(mu.level, nu.level)
    d = min(mu.degree, nu.degree)
    a, b = coarsen(mu, r), coarsen(nu, r)
    if a.dim != b.dim:
        raise PreconditionError("dist.truncation_mismatch", "distributions live on different coordinate spaces")
    for coset in set(a.moments) | set(b.moments):
        for k in range(moment_count(a.dim, d)):
            diff = a.moment(coset, k) - b.moment(coset, k)
            if _scalar_valuation(diff) < digits:
                return False
    return True


def dirac(ring: RingDescriptor, domain: str, a: Union[int, Sequence[int]], level: int, degree: int, n: int = 1) -> Distribution:
    """delta_a: moments ((a - b)/p^r)^k on the coset b of a; a is a coordinate vector when n >= 2"""
    p = ring.p
    if domain == "N" and n > 1:
        point = [int(v) for v in a]
        base = [v % p ** level for v in point]
        scaled = [(v - c) // p ** level for v, c in zip(point, base)]
        row = []
        for e in multi_indices(len(point), degree):
            row.append(ring.scalar(math.prod(t ** k for t, k in zip(scaled, e))))
        return Distribution(ring, domain, level, degree, {encode_coset(base, p, level): row}, n)
    b = a % p ** level
    t = (a - b) // p ** level
    moments = {b: [ring.scalar(t ** k) for k in range(degree + 1)]}
    return Distribution(ring, domain, level, degree, moments)


def random_distribution(
    ring: RingDescriptor,
    domain: str,
    level: int,
    degree: int,
    rng: np.random.Generator,
    cosets: Optional[Iterable[int]] = None,
    n: int = 1,
) -> Distribution:
    p = ring.p
    dim = n_dimension(n) if domain == "N" else 1
    count = moment_count(dim, degree)
    if cosets is None:
        cosets = coset_list(p, domain, level, dim)
    moments: Dict[int, List[Scalar]] = {}
    for b in cosets:
        if ring.k:
            values = []
            for _ in range(count):
                terms = {deg: ring.scalar(random_zp(ring, rng)) for deg in coeff.all_multidegrees(ring.k, ring.D)}
                values.append(AffinoidScalar(ring, terms))
        else:
            values = [ring.scalar(random_zp(ring, rng)) for _ in range(count)]
        moments[b] = values
    return Distribution(ring, domain, level, degree, moments, n)


def specialize_dist(mu: Distribution, point: Sequence[int]) -> Distribution:
    """Evaluate every affinoid moment at a point of the disc"""
    if not mu.affinoid:
        raise PreconditionError("dist.not_affinoid", "distribution has no affinoid variables")
    base = coeff.ring_make(mu.ring.p, mu.ring.N, mu.ring.m)
    moments = {
        b: [base.scalar(coeff.specialize(x, point).value.coeffs) for x in values]
        for b, values in mu.moments.items()
    }
    return Distribution(base, mu.domain, mu.level, mu.degree, moments, mu.n)


# growth


def growth_valuation(mu: Distribution, r: int) -> Union[Fraction, float]:
    """min valuation of the level-r moments, i.e. -log_p |mu|_r"""
    coarse = coarsen(mu, r)
    vals = [_scalar_valuation(x) for v in coarse.moments.values() for x in v]
    return min(vals) if vals else math.inf


def growth_norm(mu: Distribution, r: int) -> Union[Fraction, float]:
    """sup_b,k p^{-v(moment)} at level r"""
    v = growth_valuation(mu, r)
    if v == math.inf:
        return Fraction(0)
    if Fraction(v).denominator == 1:
        return Fraction(1, mu.p ** int(v)) if v >= 0 else Fraction(mu.p ** int(-v))
    return float(mu.p) ** (-float(v))


@dataclass(frozen=True)
class GrowthReport:
    """Level valuations and the fitted order h with |mu|_r <= p^c * p^{r h}"""

    valuations: Tuple[Any, ...]
    h: Fraction
    constant_exponent: Fraction

    def to_json(self) -> Dict[str, Any]:
        return {
            "valuations": [None if v == math.inf else str(v) for v in self.valuations],
            "h": str(self.h),
            "constant_exponent": str(self.constant_exponent),
        }


def fit_growth(valuations: Sequence[Union[Fraction, float]], shift: int = 0) -> GrowthReport:
    """
    Fit the growth order from valuations at levels 0..R. The constant is taken
    as max(1, |mu|_0); shift subtracts a global p-power from every level.
    """
    sizes = [None if v == math.inf else Fraction(shift) - Fraction(v) for v in valuations]
    base = max(sizes[0], Fraction(0)) if sizes and sizes[0] is not None else Fraction(0)
    h = Fraction(0)
    for r, s in enumerate(sizes):
        if r == 0 or s is None:
            continue
        h = max(h, (s - base) / r)
    return GrowthReport(tuple(valuations), h, base)


def growth_report(mu: Distribution, r_max: int, shift: int = 0) -> GrowthReport:
    if r_max > mu.level:
        raise PreconditionError("dist.level", f"growth up to level {r_max} needs moments at that level")
    vals = [growth_valuation(mu, r) for r in range(r_max + 1)]
    return fit_growth(vals, shift)


# the monoid action on N-coordinates


@dataclass(frozen=True)
class AffineMap:
    """z -> b + p^s * a * z with a unit, and a scalar cocycle; b, a known mod p^W"""

    p: int
    W: int
    b: int
    a: int
    s: int
    cocycle: Any

    def __call__(self, z: int) -> int:
        return (self.b + self.p ** self.s * self.a * z) % self.p ** self.W


@dataclass(frozen=True)
class UnipotentAffineMap:
    """
    z -> shift + linear z on the n^2 N-coordinates, with a scalar cocycle.
    Every entry of linear is divisible by p^s, so the image of a level-r
    coset lies in a level-(r + s) coset.
    """

    p: int
    W: int
    shift: Tuple[int, ...]
    linear: Tuple[Tuple[int, ...], ...]
    s: int
    cocycle: Any

    @property
    def dim(self) -> int:
        return len(self.shift)

    def __call__(self, z: Sequence[int]) -> List[int]:
        mod = self.p ** self.W
        return [(c + sum(a * x for a, x in zip(row, z))) % mod for c, row in zip(self.shift, self.linear)]

    def contracted(self) -> List[List[int]]:
        """linear / p^s"""
        scale = self.p ** self.s
        return [[c // scale for c in row] for row in self.linear]


MonoidMap = Union[AffineMap, UnipotentAffineMap]


def _block_parts(M: Sequence[Sequence[int]], p: int, mod: int) -> Tuple[List[int], List[List[int]], List[int]]:
    """
    Write an upper triangular block as U tau with tau diagonal and U unipotent.
    U tau n(z) = n(z') tau with z'_ij = U_ij + sum_{i<=k<j} U_ik tau_k z_kj / tau_j.
    """
    size = len(M)
    if any(M[i][j] % mod for i in range(size) for j in range(i)):
        raise PreconditionError("dist.outside_monoid", "element is not upper triangular")
    vals, units = [], []
    for i in range(size):
        if M[i][i] % mod == 0:
            raise PreconditionError("dist.outside_monoid", "diagonal entry vanishes")
        v, u = unit_part(M[i][i], p)
        vals.append(v)
        units.append(u % mod)

    def u_entry(i: int, k: int) -> int:
        if i == k:
            return 1
        if M[i][k] % p ** vals[k]:
            raise PreconditionError("dist.outside_monoid", f"entry ({i}, {k}) is not divisible by its diagonal")
        return (M[i][k] // p ** vals[k]) * pow(units[k], -1, mod) % mod

    def ratio(k: int, j: int) -> int:
        if vals[k] < vals[j]:
            raise PreconditionError("dist.outside_monoid", "diagonal valuations must not increase down the block")
        return p ** (vals[k] - vals[j]) * units[k] * pow(units[j], -1, mod) % mod

    coords = [(i, j) for i in range(size) for j in range(i + 1, size)]
    index = {c: a for a, c in enumerate(coords)}
    shift = [u_entry(i, j) for i, j in coords]
    linear = [[0] * len(coords) for _ in coords]
    for (i, j), a in index.items():
        for k in range(i, j):
            linear[a][index[(k, j)]] = (u_entry(i, k) * ratio(k, j)) % mod
    return shift, linear, units


def unipotent_parts(gamma: MatrixPair) -> Tuple[List[int], List[List[int]], List[int]]:
    """Shift, linear part and diagonal units of an upper triangular pair acting on N-coordinates"""
    p = gamma.ring.p
    mod = gamma.ring.modulus
    shift_g, linear_g, units_g = _block_parts(gamma.g, p, mod)
    shift_s, linear_s, units_s = _block_parts(gamma.gp, p, mod)
    a, b = len(shift_g), len(shift_s)
    linear = [row + [0] * b for row in linear_g] + [[0] * a + row for row in linear_s]
    return shift_g + shift_s, linear, units_g + units_s


def _level_shift(linear: Sequence[Sequence[int]], p: int) -> int:
    return min(unit_part(c, p)[0] for row in linear for c in row if c)


def tp_map(ring: RingDescriptor, s: int = 1, W: Optional[int] = None, n: int = 1) -> MonoidMap:
    """t_p^s: contracts the coordinate (i, j) by p^{s(e_i - e_j)}; trivial normalized cocycle"""
    W = W or ring.N
    if n == 1:
        return AffineMap(ring.p, W, 0, 1, s, 1)
    p = ring.p

    def diag(exps: Sequence[int]) -> List[List[int]]:
        return [[p ** (s * e) if i == j else 0 for j in range(len(exps))] for i, e in enumerate(exps)]

    big, small = tp_exponents(n)
    shift, linear, _ = unipotent_parts(MatrixPair.of(coeff.ring_make(p, W), diag(big), diag(small)))
    return UnipotentAffineMap(p, W, tuple(shift), tuple(tuple(r) for r in linear), _level_shift(linear, p), 1)


def _unit_power(u: int, e0: int, directions: Sequence[int], ring: RingDescriptor, mod: int):
    if ring.k:
        return coeff.affinoid_unit_power(u, e0, directions, ring)
    if e0 >= 0:
        return pow(u, e0, mod)
    return pow(pow(u, -1, mod), -e0, mod)


def weight_exponents(weight: AnyWeight) -> Tuple[List[int], List[List[int]]]:
    """(mu, lambda^vee) exponents at the center and along each direction"""
    if isinstance(weight, AffinoidWeight):
        center = weight.center
        dirs = [list(d.mu) + list(d.dual_lambda()) for d in weight.directions]
    else:
        center = weight
        dirs = []
    return list(center.mu) + list(center.dual_lambda()), dirs


def _cocycle(units: Sequence[int], weight: AnyWeight, ring: RingDescriptor, mod: int):
    """Normalized (mu, lambda^vee)-character of the diagonal units"""
    center_exps, dir_exps = weight_exponents(weight)
    cocycle: Any = AffinoidScalar.constant(ring, 1) if ring.k else 1
    for idx, u in enumerate(units):
        dirs = [e[idx] for e in dir_exps]
        cocycle = cocycle * _unit_power(u, center_exps[idx], dirs, ring, mod)
    if isinstance(cocycle, int):
        cocycle %= mod
    return cocycle


def unipotent_affine_map(gamma: MatrixPair, weight: AnyWeight, ring: RingDescriptor) -> UnipotentAffineMap:
    """Left action of an upper triangular pair on N-coordinates, for any n"""
    p = gamma.ring.p
    W = gamma.ring.N
    shift, linear, units = unipotent_parts(gamma)
    cocycle = _cocycle(units, weight, ring, p ** W)
    return UnipotentAffineMap(p, W, tuple(shift), tuple(tuple(r) for r in linear), _level_shift(linear, p), cocycle)


def affine_map_from_pair(gamma: MatrixPair, weight: AnyWeight, ring: RingDescriptor) -> MonoidMap:
    """
    Left action of an upper triangular element on N-coordinates:
    gamma n(z) = n(z') b_bar with cocycle the normalized (mu, lambda^vee)-character
    of b_bar. For n = 1 this is z' = (B + A z)/D.
    """
    if gamma.n not in SUPPORTED_N:
        raise PreconditionError("dist.dimension", f"the monoid action is enabled for n in {SUPPORTED_N}")
    if gamma.n > 1:
        return unipotent_affine_map(gamma, weight, ring)
    p = gamma.ring.p
    W = gamma.ring.N
    mod = p ** W
    (A, B), (C, D) = gamma.g
    small = gamma.gp[0][0]
    if C % mod != 0:
        raise PreconditionError("dist.outside_monoid", "element is not upper triangular")
    s, a_unit = unit_part(A, p)
    s_small, small_unit = unit_part(small, p)
    if D % p == 0:
        raise PreconditionError("dist.outside_monoid", "lower-right entry must be a unit")
    d_inv = pow(D, -1, mod)
    b = (B * d_inv) % mod
    a = (a_unit * d_inv) % mod
    cocycle = _cocycle([a_unit % mod, D % mod, small_unit % mod], weight, ring, mod)
    return AffineMap(p, W, b, a, s, cocycle)


def act(gamma: MonoidMap, mu: Distribution) -> Distribution:
    """Pushforward gamma * mu; raises the level by s"""
    if mu.domain != "N":
        raise PreconditionError("dist.domain", "the monoid acts on N-coordinate distributions")
    if isinstance(gamma, UnipotentAffineMap):
        return _act_several(gamma, mu)
    p = mu.p
    R = mu.level + gamma.s
    modW = p ** gamma.W
    out: Dict[int, List[Scalar]] = {}
    a_pows = [pow(gamma.a, i, modW) for i in range(mu.degree + 1)]
    for e, values in mu.moments.items():
        full = gamma(e)
        c = full % p ** R
        delta = (full - c) // p ** R
        acc = out.setdefault(c, [mu.zero_scalar() for _ in range(mu.degree + 1)])
        for k in range(mu.degree + 1):
            total = mu.zero_scalar()
            for i in range(k + 1):
                w = (binom(k, i) * pow(delta, k - i, modW) * a_pows[i]) % modW
                if w:
                    total = total + values[i] * w
            acc[k] = acc[k] + total * gamma.cocycle
    return Distribution(mu.ring, "N", R, mu.degree, out, mu.n)


def _act_several(gamma: UnipotentAffineMap, mu: Distribution) -> Distribution:
    if gamma.dim != mu.dim:
        raise PreconditionError("dist.dimension", f"map on {gamma.dim} coordinates cannot act on {mu.dim}")
    p, r, dim = mu.p, mu.level, mu.dim
    R = r + gamma.s
    modW = p ** gamma.W
    M = gamma.contracted()
    zero = mu.zero_scalar()
    out: Dict[int, List[Scalar]] = {}
    for e, values in mu.moments.items():
        full = gamma(decode_coset(e, p, r, dim))
        target = [v % p ** R for v in full]
        delta = [(v - c) // p ** R for v, c in zip(full, target)]
        moved = [x * gamma.cocycle for x in _transform_moments(transfer_matrix(delta, M, mu.degree, modW), values, zero)]
        key = encode_coset(target, p, R)
        acc = out.get(key)
        out[key] = moved if acc is None else [a + m for a, m in zip(acc, moved)]
    return Distribution(mu.ring, "N", R, mu.degree, out, mu.n)


def monoid_act(gamma: MonoidMap, f: LocAnFunction) -> LocAnFunction:
    """(gamma . f)(z) = cocycle * f(gamma z); lowers the level by s"""
    if isinstance(gamma, UnipotentAffineMap):
        return _monoid_act_several(gamma, f)
    p = f.p
    r = f.level
    r_new = max(r - gamma.s, 0)
    modW = p ** gamma.W
    pieces: Dict[int, List[Any]] = {}
    for e in coset_list(p, "Zp", r_new):
        full = (gamma.b + p ** gamma.s * gamma.a * e) % modW
        c = full % p ** r
        piece = f.pieces.get(c)
        if piece is None:
            continue
        delta = (full - c) // p ** r
        q = (p ** (gamma.s + r_new - r) * gamma.a) % modW
        out = []
        for j in range(f.degree + 1):
            acc = 0
            for i in range(j, f.degree + 1):
                acc += piece[i] * binom(i, j) * pow(delta, i - j, modW)
            value = acc * pow(q, j, modW) * gamma.cocycle
            out.append(value % modW if isinstance(value, int) else value)
        pieces[e] = out
    return LocAnFunction(p, f.domain, r_new, f.degree, pieces)


def _monoid_act_several(gamma: UnipotentAffineMap, f: LocAnFunction) -> LocAnFunction:
    if gamma.dim != f.dim:
        raise PreconditionError("dist.dimension", f"map on {gamma.dim} coordinates cannot act on {f.dim}")
    p, r, dim = f.p, f.level, f.dim
    r_new = max(r - gamma.s, 0)
    modW = p ** gamma.W
    q = p ** (gamma.s + r_new - r)
    M = [[(c * q) % modW for c in row] for row in gamma.contracted()]
    pieces: Dict[int, List[Any]] = {}
    for e in coset_list(p, "N", r_new, dim):
        full = gamma(decode_coset(e, p, r_new, dim))
        base = [v % p ** r for v in full]
        piece = f.pieces.get(encode_coset(base, p, r))
        if piece is None:
            continue
        delta = [(v - c) // p ** r for v, c in zip(full, base)]
        T = transfer_matrix(delta, M, f.degree, modW)
        out = []
        for j in range(len(T)):
            acc = 0
            for i, row in enumerate(T):
                if row[j]:
                    acc += piece[i] * row[j]
            value = acc * gamma.cocycle
            out.append(value % modW if isinstance(value, int) else value)
        pieces[e] = out
    return LocAnFunction(p, f.domain, r_new, f.degree, pieces, dim)


# kappa: N^1 distributions to Z_p^x distributions


def _n1_values(z: TruncatedSeries) -> List[TruncatedSeries]:
    """Flat entries of ([[1, z], [0, 1]], [[1]])"""
    one = TruncatedSeries.constant(1, z.p, z.W, z.d)
    zero = TruncatedSeries.constant(0, z.p, z.W, z.d)
    return [one, z, zero, one, one]


def weight_series(weight: Weight, z: TruncatedSeries, ring: Optional[RingDescriptor] = None) -> TruncatedSeries:
    """u_(mu,lambda) along the line z of N^1 (n = 1)"""
    one = TruncatedSeries.constant(1, z.p, z.W, z.d)
    return weight_function(weight, ring).evaluate_values(_n1_values(z), z.p, z.modulus, one, TruncatedSeries.inverse)


def _family_factor(weight: AffinoidWeight, z: TruncatedSeries, ring: RingDescriptor) -> Dict[Tuple[int, ...], TruncatedSeries]:
    """prod_t exp(w_t * sum_gen e_{t,gen} log gen(z)) truncated at total degree D"""
    p, W, d = z.p, z.W, z.d
    gens = fundamental_generators(weight.n, ring)
    values = _n1_values(z)
    one = TruncatedSeries.constant(1, p, W, d)
    logs: List[TruncatedSeries] = []
    for direction in weight.directions:
        ev = exponent_vector(direction)
        total = TruncatedSeries.constant(0, p, W, d)
        for f, e in zip(gens.as_list(), list(ev.c) + list(ev.d)):
            if e == 0:
                continue
            g = f.evaluate_values(values, p, z.modulus, one)
            if (g.coeffs[0] - 1) % p != 0:
                raise PreconditionError("dist.not_one_unit", "generator is not a 1-unit on N^1")
            total = total + g.log() * e
        logs.append(total)

    result: Dict[Tuple[int, ...], TruncatedSeries] = {(0,) * weight.k: one}
    for t, L in enumerate(logs):
        exp_terms = [one]
        power = one
        for a in range(1, ring.D + 1):
            power = power * L
            v_f, u_f = unit_part(math.factorial(a), p)
            exp_terms.append(power.exact_div(p ** v_f) * pow(u_f, -1, z.modulus))
        new: Dict[Tuple[int, ...], TruncatedSeries] = {}
        for deg, series in result.items():
            for a, term in enumerate(exp_terms):
                if sum(deg) + a > ring.D:
                    break
                nd = list(deg)
                nd[t] += a
                key = tuple(nd)
                prod = series * term
                new[key] = new[key] + prod if key in new else prod
        result = new
    return result


def kappa(xi: Distribution, weight: AnyWeight) -> Distribution:
    """
    Pushforward along N^1 -> Z_p^x, z -> c(z), twisted by u_(mu,lambda):
    int f d kappa(xi) = xi(u_(mu,lambda)(z) f(c(z))). Moments are exact up to
    O(p^{r(d+1)}).
    """
    n = weight.n
    if n != 1:
        raise PreconditionError(
            "dist.c_non_unit",
            "the generators v_ii with i < n vanish on N^1, so c is not a unit there",
        )
    if xi.domain != "N":
        raise PreconditionError("dist.domain", "kappa needs an N-coordinate distribution")
    ring = xi.ring
    affinoid = isinstance(weight, AffinoidWeight)
    if affinoid and ring.k != weight.k:
        raise PreconditionError("dist.ring_mismatch", "affinoid weight and distribution have different variables")
    r, d = xi.level, xi.degree
    if r < 1:
        raise PreconditionError("dist.missing_support", "N^1 support needs level >= 1")

    p = ring.p
    W = ring.N + r + d + ring.D + 4
    mod = p ** W
    center = weight.center if affinoid else weight
    c_func = c_ratio(1, ring)
    one = TruncatedSeries.constant(1, p, W, d)
    zero = xi.zero_scalar()

    out: Dict[int, List[Scalar]] = {}
    for B, moments in xi.moments.items():
        if all(_is_zero(x) for x in moments):
            continue
        if B % p != 1 % p:
            raise PreconditionError("dist.missing_support", f"coset {B} lies outside N^1")
        z = TruncatedSeries.line(B, r, p, W, d)
        U = weight_series(center, z, ring)
        C = c_func.evaluate_values(_n1_values(z), p, mod, one, TruncatedSeries.inverse)
        target = C.coeffs[0] % p ** r
        T = (C + (-target)).exact_div(p ** r)
        factors = _family_factor(weight, z, ring) if affinoid else {(): one}

        acc = out.setdefault(target, [zero for _ in range(d + 1)])
        Tk = one
        for k in range(d + 1):
            base = U * Tk
            for deg, E in factors.items():
                series = base * E
                val = zero
                for i, x in enumerate(moments):
                    c = series.coeffs[i]
                    if c:
                        val = val + x * c
                if affinoid and any(deg):
                    val = AffinoidScalar.monomial(ring, deg, 1) * val
                acc[k] = acc[k] + val
            Tk = Tk * T
    logger.debug("kappa pushed %d cosets at level %d", len(xi.moments), r)
    return Distribution(ring, "Zpx", r, d, out)

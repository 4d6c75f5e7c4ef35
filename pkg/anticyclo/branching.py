"""
Branching-law generators in the induced model of U_{n+1} x U_n

Functions on G = GL_{n+1} x GL_n are polynomials in the entries x_ij of g and
y_ij of g', times powers of det(g) and det(g'). They transform on the left
under the lower Borel by (mu, lambda^vee) and are invariant under the right
translation of H = GL_n embedded by h -> (diag(h, 1), h).
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, product
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from anticyclo.coeff import PadicScalar, RingDescriptor, fraction_to_int, unit_inverse
from anticyclo.errors import PreconditionError, VerificationError
from anticyclo.weights import (
    ExponentVector,
    Weight,
    basis_weight_big,
    basis_weight_small,
    exponent_vector,
    interlaces,
)

logger = logging.getLogger(__name__)

IntMatrix = Tuple[Tuple[int, ...], ...]

DEFAULT_DEGREE_CAP = 12


@lru_cache(maxsize=None)
def coordinate_symbols(n: int):
    """Entry symbols of g (size n+1) and g' (size n), plus the flat generator tuple"""
    X = [[sympy.Symbol(f"x{i + 1}{j + 1}") for j in range(n + 1)] for i in range(n + 1)]
    Y = [[sympy.Symbol(f"y{i + 1}{j + 1}") for j in range(n)] for i in range(n)]
    gens = tuple(s for row in X for s in row) + tuple(s for row in Y for s in row)
    return X, Y, gens


def g0_matrix(n: int) -> IntMatrix:
    """[[1_n, (1,...,1)^T], [0, 1]]"""
    rows = []
    for i in range(n + 1):
        row = [1 if i == j else 0 for j in range(n + 1)]
        if i < n:
            row[n] = 1
        rows.append(tuple(row))
    return tuple(rows)


def identity_matrix(size: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(size)) for i in range(size))


def _to_array(M: IntMatrix) -> np.ndarray:
    return np.array([list(row) for row in M], dtype=object).reshape(len(M), len(M))


def _from_array(A: np.ndarray, modulus: int) -> IntMatrix:
    return tuple(tuple(int(x) % modulus for x in row) for row in A)


def _det(M: IntMatrix) -> int:
    if not M:
        return 1
    return int(sympy.Matrix([list(r) for r in M]).det())


def _is_upper_unipotent(M: IntMatrix, modulus: int) -> bool:
    size = len(M)
    for i in range(size):
        for j in range(i + 1):
            x = M[i][j] % modulus
            if (i == j and x != 1) or (j < i and x != 0):
                return False
    return True


@dataclass(frozen=True)
class MatrixPair:
    """(g, g') in GL_{n+1}(Z/p^N) x GL_n(Z/p^N)"""

    ring: RingDescriptor
    g: IntMatrix
    gp: IntMatrix

    def __post_init__(self):
        if len(self.g) != len(self.gp) + 1:
            raise PreconditionError("branching.shape", "g must have one more row than g'")

    @property
    def n(self) -> int:
        return len(self.gp)

    @classmethod
    def of(cls, ring: RingDescriptor, g: Sequence[Sequence[int]], gp: Sequence[Sequence[int]]) -> "MatrixPair":
        mod = ring.modulus
        return cls(ring, tuple(tuple(int(x) % mod for x in r) for r in g), tuple(tuple(int(x) % mod for x in r) for r in gp))

    def __matmul__(self, other: "MatrixPair") -> "MatrixPair":
        mod = self.ring.modulus
        g = _from_array(_to_array(self.g).dot(_to_array(other.g)), mod)
        if self.n:
            gp = _from_array(_to_array(self.gp).dot(_to_array(other.gp)), mod)
        else:
            gp = ()
        return MatrixPair(self.ring, g, gp)

    def det_big(self) -> int:
        return _det(self.g) % self.ring.modulus

    def det_small(self) -> int:
        return _det(self.gp) % self.ring.modulus

    def inverse(self) -> "MatrixPair":
        mod = self.ring.modulus
        g = sympy.Matrix([list(r) for r in self.g]).inv_mod(mod)
        gp = sympy.Matrix([list(r) for r in self.gp]).inv_mod(mod)
        return MatrixPair.of(self.ring, g.tolist(), gp.tolist())

    def diagonal(self) -> Tuple[List[PadicScalar], List[PadicScalar]]:
        return (
            [self.ring.scalar(self.g[i][i]) for i in range(self.n + 1)],
            [self.ring.scalar(self.gp[i][i]) for i in range(self.n)],
        )

    def in_N(self, beta: int = 1) -> bool:
        """g upper unipotent with g' = [g]_n and g = g0 mod p^beta"""
        mod = self.ring.modulus
        if not _is_upper_unipotent(self.g, mod):
            return False
        n = self.n
        if any(self.g[i][j] != self.gp[i][j] for i in range(n) for j in range(n)):
            return False
        cong = self.ring.p ** beta
        base = g0_matrix(n)
        return all((self.g[i][j] - base[i][j]) % cong == 0 for i in range(n + 1) for j in range(n + 1))

    def in_iwahori(self) -> bool:
        """Both components upper triangular mod p with unit diagonal"""
        p = self.ring.p
        for M in (self.g, self.gp):
            size = len(M)
            for i in range(size):
                if M[i][i] % p == 0:
                    return False
                for j in range(i):
                    if M[i][j] % p != 0:
                        return False
        return True

    def to_json(self) -> Dict[str, Any]:
        return {"g": [list(r) for r in self.g], "gp": [list(r) for r in self.gp]}


def base_point(n: int, ring: RingDescriptor) -> MatrixPair:
    """(g0, 1_n)"""
    return MatrixPair.of(ring, g0_matrix(n), identity_matrix(n))


def iota(h: Sequence[Sequence[int]], ring: RingDescriptor) -> MatrixPair:
    """h -> (diag(h, 1), h)"""
    n = len(h)
    g = [list(h[i]) + [0] for i in range(n)] + [[0] * n + [1]]
    return MatrixPair.of(ring, g, h)


def n_point(n: int, ring: RingDescriptor, A: Sequence[Sequence[int]], column: Sequence[int]) -> MatrixPair:
    """([[A, column], [0, 1]], A)"""
    g = [list(A[i]) + [column[i]] for i in range(n)] + [[0] * n + [1]]
    return MatrixPair.of(ring, g, A)


def n_coordinates(n: int) -> List[Tuple[str, int, int]]:
    """Row-major strictly-upper positions of g, then of g'"""
    big = [("g", i, j) for i in range(n + 1) for j in range(i + 1, n + 1)]
    small = [("gp", i, j) for i in range(n) for j in range(i + 1, n)]
    return big + small


def unipotent_matrices(n: int, coords: Sequence[int]) -> Tuple[List[List[int]], List[List[int]]]:
    """(n(x), n(y)) over the integers"""
    g = [list(r) for r in identity_matrix(n + 1)]
    gp = [list(r) for r in identity_matrix(n)]
    for (block, i, j), v in zip(n_coordinates(n), coords):
        (g if block == "g" else gp)[i][j] = int(v)
    return g, gp


def unipotent_pair(n: int, coords: Sequence[int], ring: RingDescriptor) -> MatrixPair:
    return MatrixPair.of(ring, *unipotent_matrices(n, coords))


def unipotent_coordinates(n: int, g: Sequence[Sequence[int]], gp: Sequence[Sequence[int]]) -> List[int]:
    return [(g if block == "g" else gp)[i][j] for block, i, j in n_coordinates(n)]


# polynomial evaluation


def _exact_coeff(c) -> Fraction:
    return Fraction(int(c.p), int(c.q))


def _poly_value(poly: sympy.Poly, values: Sequence, p: int, modulus: int, one):
    """Evaluate with coefficients reduced to residues; values need + and *"""
    cache: Dict[Tuple[int, int], Any] = {}
    total = one * 0
    for monom, coeff in poly.terms():
        c = fraction_to_int(_exact_coeff(coeff), p, modulus)
        if c == 0:
            continue
        term = one * c
        for idx, e in enumerate(monom):
            if e:
                key = (idx, e)
                if key not in cache:
                    power = values[idx]
                    for _ in range(e - 1):
                        power = power * values[idx]
                    cache[key] = power
                term = term * cache[key]
        total = total + term
    return total


def _poly_value_exact(poly: sympy.Poly, values: Sequence[int]) -> Fraction:
    total = Fraction(0)
    for monom, coeff in poly.terms():
        term = _exact_coeff(coeff)
        for idx, e in enumerate(monom):
            if e:
                term *= Fraction(values[idx]) ** e
        total += term
    return total


def _flat_values(pair: MatrixPair) -> List[int]:
    return [x for row in pair.g for x in row] + [x for row in pair.gp for x in row]


@dataclass(frozen=True)
class InducedFunction:
    """det(g)^det_big * det(g')^det_small * poly(g, g')"""

    weight: Weight
    poly: sympy.Poly
    det_big: int
    det_small: int
    anchored: bool = False

    def value_at_base(self) -> Fraction:
        n = self.weight.n
        values = [x for row in g0_matrix(n) for x in row] + [x for row in identity_matrix(n) for x in row]
        return _poly_value_exact(self.poly, values)

    def __mul__(self, other: "InducedFunction") -> "InducedFunction":
        return InducedFunction(
            self.weight + other.weight,
            self.poly * other.poly,
            self.det_big + other.det_big,
            self.det_small + other.det_small,
            self.anchored and other.anchored,
        )

    def __pow__(self, e: int) -> "InducedFunction":
        if e < 0 and not self.poly.is_ground:
            raise PreconditionError("branching.negative_power", "only determinant characters can be inverted")
        if e < 0:
            base = self.poly.as_expr()
            poly = sympy.Poly(base ** e, *self.poly.gens, domain="QQ")
        else:
            poly = self.poly ** e
        return InducedFunction(self.weight.scale(e), poly, self.det_big * e, self.det_small * e, self.anchored)

    def evaluate(self, pair: MatrixPair) -> PadicScalar:
        """Value at a point of G(Z_p) with unit determinants"""
        ring = pair.ring
        if pair.n != self.weight.n:
            raise PreconditionError("branching.shape", "point and function have different n")
        value = _poly_value(self.poly, _flat_values(pair), ring.p, ring.modulus, 1) % ring.modulus
        result = ring.scalar(value)
        if self.det_big:
            result = result * ring.scalar(pair.det_big()) ** self.det_big
        if self.det_small:
            result = result * ring.scalar(pair.det_small()) ** self.det_small
        return result

    def evaluate_values(self, values: Sequence, p: int, modulus: int, one):
        """Polynomial part on arbitrary ring-like entries; determinant factors must be trivial there"""
        return _poly_value(self.poly, values, p, modulus, one)

    def to_json(self) -> Dict[str, Any]:
        return {
            "weight": self.weight.to_json(),
            "det_big": self.det_big,
            "det_small": self.det_small,
            "anchored": self.anchored,
            "poly": str(self.poly.as_expr()),
        }


# spanning sets and the invariant line


def _minors(M, size: int, k: int) -> List[sympy.Expr]:
    rows = range(k)
    out = []
    for cols in combinations(range(size), k):
        out.append(sympy.Matrix([[M[r][c] for c in cols] for r in rows]).det())
    return out


def leading_minor(n: int, component: str, k: int) -> InducedFunction:
    """Top-left k x k minor of g ("big", weight beta_k) or of g' ("small", lambda^vee = alpha_k)"""
    X, Y, gens = coordinate_symbols(n)
    if component == "big":
        size, M = n + 1, X
        weight = Weight.of(basis_weight_big(n, k) if 1 <= k <= size else (0,) * size, (0,) * n)
    elif component == "small":
        size, M = n, Y
        alpha = basis_weight_small(n, k) if 1 <= k <= size else (0,) * n
        weight = Weight.of((0,) * (n + 1), tuple(-a for a in reversed(alpha)))
    else:
        raise PreconditionError("branching.component", f"component must be big or small, got {component}")
    if not 1 <= k <= size:
        raise PreconditionError("branching.minor_index", f"k={k} is outside 1..{size}")
    det = sympy.Matrix([[M[i][j] for j in range(k)] for i in range(k)]).det()
    return InducedFunction(weight, sympy.Poly(det, *gens, domain="QQ"), 0, 0)


def _equivariant_products(M, nu: Sequence[int], size: int, gens) -> List[sympy.Poly]:
    """Products of top-row minors realizing the left character nu (last entry zero)"""
    factors = []
    for k in range(1, size):
        mult = nu[k - 1] - nu[k]
        if mult < 0:
            raise PreconditionError("branching.not_dominant", f"reduced weight {list(nu)} is not dominant")
        if mult == 0:
            continue
        minors = _minors(M, size, k)
        factors.append([sympy.Mul(*choice) for choice in combinations_with_replacement(minors, mult)])
    out = []
    for choice in product(*factors):
        out.append(sympy.Poly(sympy.Mul(*choice), *gens, domain="QQ"))
    if not factors:
        out.append(sympy.Poly(1, *gens, domain="QQ"))
    return out


def _reduced_weights(w: Weight) -> Tuple[int, List[int], int, List[int]]:
    n = w.n
    det_big = w.mu[n]
    nu_big = [a - det_big for a in w.mu]
    dual = w.dual_lambda()
    det_small = dual[-1]
    nu_small = [a - det_small for a in dual]
    return det_big, nu_big, det_small, nu_small


@lru_cache(maxsize=None)
def restricted_representation(w: Weight) -> Tuple[Dict[Tuple[int, ...], Fraction], ...]:
    """
    A basis of the functions of weight w restricted to N = {(n(x), n(y))}, as
    polynomials in the N-coordinates {exponent vector: coefficient}. For n = 1
    this is 1, z, ..., z^{mu_1 - mu_2}.
    """
    n = w.n
    X, Y, gens = coordinate_symbols(n)
    _, nu_big, _, nu_small = _reduced_weights(w)
    spanning = [a * b for a in _equivariant_products(X, nu_big, n + 1, gens) for b in _equivariant_products(Y, nu_small, n, gens)]

    coords = n_coordinates(n)
    t = sympy.symbols(f"t0:{len(coords)}")
    subs = {}
    for size, M, block in ((n + 1, X, "g"), (n, Y, "gp")):
        for i in range(size):
            for j in range(size):
                if i == j:
                    subs[M[i][j]] = 1
                elif i > j:
                    subs[M[i][j]] = 0
        for a, (b, i, j) in enumerate(coords):
            if b == block:
                subs[M[i][j]] = t[a]
    restricted = [sympy.Poly(f.as_expr().subs(subs), *t, domain="QQ") for f in spanning]

    monomials = sorted({m for f in restricted for m in f.as_dict()})
    index = {m: i for i, m in enumerate(monomials)}
    rows = sympy.zeros(len(restricted), len(monomials))
    for r, f in enumerate(restricted):
        for m, c in f.as_dict().items():
            rows[r, index[m]] = c
    reduced, pivots = rows.rref()
    basis = []
    for r in range(len(pivots)):
        row = {monomials[c]: _exact_coeff(reduced[r, c]) for c in range(len(monomials)) if reduced[r, c] != 0}
        denom = math.lcm(*(c.denominator for c in row.values()))
        content = math.gcd(*(int(c * denom) for c in row.values()))
        basis.append({m: c * denom / content for m, c in row.items()})
    logger.debug("weight %s restricts to N with dimension %d", w.to_json(), len(basis))
    return tuple(basis)


def _derivation(poly: sympy.Poly, a: int, b: int, n: int) -> sympy.Poly:
    """sum_i x_ia d/dx_ib + sum_i y_ia d/dy_ib"""
    X, Y, gens = coordinate_symbols(n)
    out = sympy.Poly(0, *gens, domain="QQ")
    for i in range(n + 1):
        out = out + sympy.Poly(X[i][a], *gens, domain="QQ") * poly.diff(X[i][b])
    for i in range(n):
        out = out + sympy.Poly(Y[i][a], *gens, domain="QQ") * poly.diff(Y[i][b])
    return out


def _coefficient_matrix(polys: Sequence[sympy.Poly]) -> Tuple[sympy.Matrix, List[Tuple[int, ...]]]:
    monomials = sorted({m for f in polys for m in f.as_dict()})
    index = {m: i for i, m in enumerate(monomials)}
    M = sympy.zeros(len(monomials), len(polys))
    for j, f in enumerate(polys):
        for m, c in f.as_dict().items():
            M[index[m], j] = c
    return M, monomials


def _primitive(poly: sympy.Poly) -> sympy.Poly:
    """Integral, content one, positive leading coefficient"""
    coeffs = [_exact_coeff(c) for c in poly.coeffs()]
    denom = 1
    for c in coeffs:
        denom = denom * c.denominator // math.gcd(denom, c.denominator)
    nums = [int(c * denom) for c in coeffs]
    content = 0
    for x in nums:
        content = math.gcd(content, x)
    scale = Fraction(denom, content)
    if coeffs[0] < 0:
        scale = -scale
    return _scale_poly(poly, scale)


def _scale_poly(poly: sympy.Poly, scale: Fraction) -> sympy.Poly:
    factor = sympy.Rational(scale.numerator, scale.denominator)
    return sympy.Poly.from_dict({m: c * factor for m, c in poly.as_dict().items()}, *poly.gens, domain="QQ")


def canonical(f: InducedFunction, p: Optional[int] = None) -> InducedFunction:
    """Scale to value 1 at (g0, 1_n) when possible, otherwise to primitive form"""
    value = f.value_at_base()
    if value != 0:
        poly = _scale_poly(f.poly, 1 / value)
        if p is not None:
            for c in poly.coeffs():
                if _exact_coeff(c).denominator % p == 0:
                    raise PreconditionError(
                        "branching.non_unit_base_value",
                        "normalized generator is not p-integral",
                    )
        return InducedFunction(f.weight, poly, f.det_big, f.det_small, True)
    return InducedFunction(f.weight, _primitive(f.poly), f.det_big, f.det_small, False)


def build_u_direct(w: Weight, degree_cap: int = DEFAULT_DEGREE_CAP) -> InducedFunction:
    """The H-invariant line of weight w, solved as a kernel in the induced model"""
    if not w.is_dominant():
        raise PreconditionError("branching.not_dominant", f"{w.to_json()} is not dominant")
    n = w.n
    X, Y, gens = coordinate_symbols(n)
    det_big, nu_big, det_small, nu_small = _reduced_weights(w)
    degree = sum(k * (nu_big[k - 1] - nu_big[k]) for k in range(1, n + 1))
    degree += sum(k * (nu_small[k - 1] - nu_small[k]) for k in range(1, n))
    if degree > degree_cap:
        raise PreconditionError("branching.degree_cap", f"degree {degree} exceeds cap {degree_cap}")

    big = _equivariant_products(X, nu_big, n + 1, gens)
    small = _equivariant_products(Y, nu_small, n, gens)
    spanning = [a * b for a in big for b in small]

    # independent subset of the spanning products
    span_matrix, _ = _coefficient_matrix(spanning)
    _, pivots = span_matrix.rref()
    basis = [spanning[i] for i in pivots]
    logger.debug("weight %s: %d spanning products, %d independent", w.to_json(), len(spanning), len(basis))

    shift = det_big + det_small
    constraints = []
    for a in range(n):
        for b in range(n):
            row = []
            for f in basis:
                g = _derivation(f, a, b, n)
                if a == b and shift:
                    g = g + f * shift
                row.append(g)
            constraints.append(row)

    monomials = sorted({m for row in constraints for g in row for m in g.as_dict()})
    index = {m: i for i, m in enumerate(monomials)}
    C = sympy.zeros(len(monomials) * len(constraints), len(basis))
    for r, row in enumerate(constraints):
        offset = r * len(monomials)
        for j, g in enumerate(row):
            for m, c in g.as_dict().items():
                C[offset + index[m], j] = c

    kernel = C.nullspace() if len(monomials) else [sympy.eye(len(basis))[:, j] for j in range(len(basis))]
    if len(kernel) != 1:
        raise VerificationError(
            "branching.invariant_dimension",
            f"H-invariants of weight {w.to_json()} have dimension {len(kernel)}",
        )
    vec = kernel[0]
    poly = sympy.Poly(0, *gens, domain="QQ")
    for coeff, f in zip(vec, basis):
        if coeff != 0:
            poly = poly + f * sympy.Poly(coeff, *gens, domain="QQ")
    return InducedFunction(w, poly, det_big, det_small)


@dataclass(frozen=True)
class GeneratorSet:
    """u[i] = u_{i+1,i} for i = 0..n and v[i-1] = v_{i,i} for i = 1..n"""

    n: int
    u: Tuple[InducedFunction, ...]
    v: Tuple[InducedFunction, ...]

    def as_list(self) -> List[InducedFunction]:
        return list(self.u) + list(self.v)

    def names(self) -> List[str]:
        return [f"u{i + 1}{i}" for i in range(self.n + 1)] + [f"v{i}{i}" for i in range(1, self.n + 1)]


def generator_weights(n: int) -> List[Weight]:
    ws = [Weight(n, basis_weight_big(n, i + 1), basis_weight_small(n, i)) for i in range(n + 1)]
    ws += [Weight(n, basis_weight_big(n, i), basis_weight_small(n, i)) for i in range(1, n + 1)]
    return ws


@lru_cache(maxsize=None)
def _solved_generators(n: int) -> Tuple[InducedFunction, ...]:
    funcs = tuple(canonical(build_u_direct(w)) for w in generator_weights(n))
    logger.info("built %d fundamental generators for n=%d", len(funcs), n)
    return funcs


@lru_cache(maxsize=None)
def fundamental_generators(n: int, ring: Optional[RingDescriptor] = None) -> GeneratorSet:
    """
    u_{i+1,i} and v_{i,i}, each the normalized invariant of its weight. With a
    ring, every generator must take a p-adic unit value at (g0, 1_n).
    """
    funcs = _solved_generators(n)
    gens = GeneratorSet(n, funcs[: n + 1], funcs[n + 1:])
    if ring is not None:
        for name, f in zip(gens.names(), funcs):
            value = f.value_at_base()
            if value == 0 or value.numerator % ring.p == 0 or value.denominator % ring.p == 0:
                raise PreconditionError(
                    "branching.non_unit_base_value",
                    f"{name} has non-unit value {value} at (g0, 1_{n}) for p={ring.p}",
                )
    return gens


def build_u(w: Weight) -> InducedFunction:
    """u_(mu,lambda) as the product of generators along the exponent vector"""
    if not interlaces(w):
        raise PreconditionError("branching.not_interlacing", f"{w.to_json()} does not interlace")
    gens = fundamental_generators(w.n)
    ev = exponent_vector(w)
    result: Optional[InducedFunction] = None
    for f, e in zip(gens.as_list(), list(ev.c) + list(ev.d)):
        if e == 0:
            continue
        term = f ** e
        result = term if result is None else result * term
    if result is None:
        X, Y, all_gens = coordinate_symbols(w.n)
        result = InducedFunction(w, sympy.Poly(1, *all_gens, domain="QQ"), 0, 0, True)
    if result.weight != w:
        raise VerificationError("branching.weight_mismatch", "generator product has the wrong weight")
    return canonical(result)


def same_line(f: InducedFunction, g: InducedFunction) -> bool:
    """Proportional with equal determinant twists"""
    return (
        f.weight == g.weight
        and f.det_big == g.det_big
        and f.det_small == g.det_small
        and canonical(f).poly == canonical(g).poly
    )


@dataclass(frozen=True)
class GeneratorProduct:
    """prod u_{i+1,i}^{c_i} v_{i,i}^{d_i} with arbitrary integer exponents"""

    n: int
    exponents: ExponentVector
    ring: Optional[RingDescriptor] = None

    def _factors(self) -> List[Tuple[InducedFunction, int]]:
        gens = fundamental_generators(self.n, self.ring)
        exps = list(self.exponents.c) + list(self.exponents.d)
        return [(f, e) for f, e in zip(gens.as_list(), exps) if e != 0]

    def evaluate(self, pair: MatrixPair, zero_extension: bool = False) -> PadicScalar:
        """Value where the inverted generators are units, or 0 off that locus if zero_extension"""
        ring = pair.ring
        result = ring.one()
        for f, e in self._factors():
            value = f.evaluate(pair)
            if e < 0:
                if value.is_zero() or value.constant() % ring.p == 0:
                    if zero_extension:
                        return ring.zero()
                    raise PreconditionError("branching.c_non_unit", "an inverted generator is not a unit here")
                value = unit_inverse(value)
                e = -e
            result = result * value ** e
        return result

    def evaluate_values(self, values: Sequence, p: int, modulus: int, one, invert: Callable):
        """Same product over ring-like entries on a unipotent locus"""
        result = one
        for f, e in self._factors():
            value = f.evaluate_values(values, p, modulus, one)
            if e < 0:
                value = invert(value)
                e = -e
            for _ in range(e):
                result = result * value
        return result


def weight_function(w: Weight, ring: Optional[RingDescriptor] = None) -> GeneratorProduct:
    """u_(mu,lambda) extended to every weight as a generator product"""
    return GeneratorProduct(w.n, exponent_vector(w), ring)


def c_ratio(n: int, ring: Optional[RingDescriptor] = None) -> GeneratorProduct:
    """u_(mu,lambda+1) / u_(mu,lambda) = prod_{i<n} u_{i+1,i}^{-1} prod_i v_{i,i}"""
    return GeneratorProduct(n, ExponentVector(c=tuple([-1] * n + [0]), d=tuple([1] * n)), ring)


# group-theoretic witnesses


@dataclass(frozen=True)
class FactorizationWitness:
    """x = b_bar * (g0, 1_n) * iota(h)"""

    target: MatrixPair
    b_bar: MatrixPair
    h: IntMatrix

    def reconstruct(self) -> MatrixPair:
        ring = self.target.ring
        return self.b_bar @ base_point(self.target.n, ring) @ iota(self.h, ring)

    def holds(self) -> bool:
        return self.reconstruct() == self.target


def factor_N1(x: MatrixPair) -> FactorizationWitness:
    """Explicit lower-Borel / H factorization of a point of N^1"""
    if not x.in_N(1):
        raise PreconditionError("branching.not_in_N1", "point is not in N^1")
    ring = x.ring
    n = x.n
    mod = ring.modulus
    col = [x.g[i][n] for i in range(n)]

    L = [[1 if i == j else 0 for j in range(n + 1)] for i in range(n + 1)]
    L[0][0] = col[0]
    for i in range(1, n):
        L[i][0] = col[i] - 1
    inv_lead = pow(col[0], -1, mod)
    L_inv = [[1 if i == j else 0 for j in range(n + 1)] for i in range(n + 1)]
    L_inv[0][0] = inv_lead
    for i in range(1, n):
        L_inv[i][0] = (-(col[i] - 1) * inv_lead) % mod

    A = [list(r) for r in x.gp]
    ell = [row[:n] for row in L_inv[:n]]
    h = _from_array(_to_array(tuple(map(tuple, ell))).dot(_to_array(tuple(map(tuple, A)))), mod)
    b_bar = MatrixPair.of(ring, L, [row[:n] for row in L[:n]])
    witness = FactorizationWitness(x, b_bar, h)
    if not witness.holds():
        raise VerificationError("branching.factorization_failed", "b_bar (g0,1) iota(h) does not reproduce x")
    return witness


def long_element(n: int) -> IntMatrix:
    """Antidiagonal permutation matrix of size n"""
    return tuple(tuple(1 if i + j == n - 1 else 0 for j in range(n)) for i in range(n))


def xi_matrix(n: int) -> IntMatrix:
    """[[w_n, (1,...,1)^T], [0, 1]]"""
    w = long_element(n)
    rows = [tuple(list(w[i]) + [1]) for i in range(n)]
    rows.append(tuple([0] * n + [1]))
    return tuple(rows)


def orbit_witness(n: int) -> Dict[str, Any]:
    """g0 * diag(w_n, 1) == xi, exactly over Z"""
    if n < 1:
        raise PreconditionError("branching.rank", "n must be positive")
    block = [list(r) + [0] for r in long_element(n)] + [[0] * n + [1]]
    lhs = np.array([list(r) for r in g0_matrix(n)], dtype=object).dot(np.array(block, dtype=object))
    lhs_t = tuple(tuple(int(v) for v in row) for row in lhs)
    xi = xi_matrix(n)
    return {
        "n": n,
        "g0": [list(r) for r in g0_matrix(n)],
        "w_block": block,
        "xi": [list(r) for r in xi],
        "holds": lhs_t == xi,
        "det_xi": _det(xi),
    }


def support_defects(n: int, ring: RingDescriptor, samples: int = 3, seed: int = 0) -> List[str]:
    """Generators that vanish identically on sampled points of N^1"""
    gens = fundamental_generators(n)
    rng = np.random.default_rng(seed)
    points = [random_N1(n, ring, rng) for _ in range(samples)]
    out = []
    for name, f in zip(gens.names(), gens.as_list()):
        if all(f.evaluate(x).is_zero() for x in points):
            out.append(name)
    return out


# samplers for invariance tests


def random_zp(ring: RingDescriptor, rng: np.random.Generator) -> int:
    digits = rng.integers(0, ring.p, size=ring.N)
    return sum(int(d) * ring.p ** i for i, d in enumerate(digits))


def random_unit(ring: RingDescriptor, rng: np.random.Generator) -> int:
    while True:
        x = random_zp(ring, rng)
        if x % ring.p:
            return x


def random_gl(size: int, ring: RingDescriptor, rng: np.random.Generator) -> IntMatrix:
    while True:
        M = tuple(tuple(random_zp(ring, rng) for _ in range(size)) for _ in range(size))
        if _det(M) % ring.p:
            return M


def random_group_element(n: int, ring: RingDescriptor, rng: np.random.Generator) -> MatrixPair:
    return MatrixPair.of(ring, random_gl(n + 1, ring, rng), random_gl(n, ring, rng))


def random_lower_borel(n: int, ring: RingDescriptor, rng: np.random.Generator) -> MatrixPair:
    def lower(size):
        return [[random_unit(ring, rng) if i == j else (random_zp(ring, rng) if j < i else 0) for j in range(size)] for i in range(size)]

    return MatrixPair.of(ring, lower(n + 1), lower(n))


def random_N1(n: int, ring: RingDescriptor, rng: np.random.Generator) -> MatrixPair:
    p = ring.p
    A = [[1 if i == j else (p * random_zp(ring, rng) if j > i else 0) for j in range(n)] for i in range(n)]
    column = [1 + p * random_zp(ring, rng) for _ in range(n)]
    return n_point(n, ring, A, column)

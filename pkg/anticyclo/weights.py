"""
Weights of U_{n+1} x U_n, critical twists, exponent vectors and slope conditions
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import sympy

from anticyclo.coeff import PadicScalar, valuation
from anticyclo.errors import PreconditionError, SchemaError, VerificationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Weight:
    """A pair (mu, lambda) with mu in Z^{n+1} and lambda in Z^n"""

    n: int
    mu: Tuple[int, ...]
    lam: Tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError("weights.rank", f"n={self.n} must be at least 1")
        if len(self.mu) != self.n + 1 or len(self.lam) != self.n:
            raise PreconditionError("weights.shape", f"mu needs {self.n + 1} entries and lambda {self.n}")

    @classmethod
    def of(cls, mu: Sequence[int], lam: Sequence[int]) -> "Weight":
        return cls(len(lam), tuple(int(a) for a in mu), tuple(int(b) for b in lam))

    def is_dominant(self) -> bool:
        return all(a >= b for a, b in zip(self.mu, self.mu[1:])) and all(
            a >= b for a, b in zip(self.lam, self.lam[1:])
        )

    def shift(self, j: int) -> "Weight":
        """(mu, lambda + j)"""
        return Weight(self.n, self.mu, tuple(b + j for b in self.lam))

    def __add__(self, other: "Weight") -> "Weight":
        if other.n != self.n:
            raise PreconditionError("weights.shape", "weights of different rank")
        return Weight(
            self.n,
            tuple(a + b for a, b in zip(self.mu, other.mu)),
            tuple(a + b for a, b in zip(self.lam, other.lam)),
        )

    def scale(self, c: int) -> "Weight":
        return Weight(self.n, tuple(c * a for a in self.mu), tuple(c * b for b in self.lam))

    def dual_lambda(self) -> Tuple[int, ...]:
        """lambda^vee = (-lambda_n, ..., -lambda_1)"""
        return tuple(-b for b in reversed(self.lam))

    def as_vector(self) -> List[int]:
        return list(self.mu) + list(self.lam)

    def to_json(self) -> Dict[str, Any]:
        return {"mu": list(self.mu), "lambda": list(self.lam)}

    @classmethod
    def from_json(cls, payload: Dict[str, Any]) -> "Weight":
        try:
            mu = [int(a) for a in payload["mu"]]
            lam = [int(b) for b in payload["lambda"]]
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError("weights.bad_weight", f"cannot read weight: {e}")
        if len(mu) != len(lam) + 1:
            raise SchemaError("weights.bad_weight", "mu must have one more entry than lambda")
        return cls.of(mu, lam)


def basis_weight_big(n: int, k: int) -> Tuple[int, ...]:
    """beta_k = (1^k, 0^{n+1-k})"""
    return tuple([1] * k + [0] * (n + 1 - k))


def basis_weight_small(n: int, k: int) -> Tuple[int, ...]:
    """alpha_k = (1^k, 0^{n-k})"""
    return tuple([1] * k + [0] * (n - k))


def interlaces(w: Weight) -> bool:
    """mu_1 >= lambda_1 >= mu_2 >= ... >= lambda_n >= mu_{n+1}"""
    return all(w.mu[i] >= w.lam[i] >= w.mu[i + 1] for i in range(w.n))


def interlacing_weights(n: int, bound: int) -> Iterator[Weight]:
    """Every interlacing (mu, lambda) with entries in [-bound, bound]"""
    values = range(bound, -bound - 1, -1)

    def descending(length: int, top: int) -> Iterator[Tuple[int, ...]]:
        if length == 0:
            yield ()
            return
        for v in values:
            if v <= top:
                for rest in descending(length - 1, v):
                    yield (v,) + rest

    for mu in descending(n + 1, bound):
        ranges = [range(mu[i + 1], mu[i] + 1) for i in range(n)]
        for lam in product(*ranges):
            yield Weight(n, mu, tuple(lam))


def _dual_chain(w: Weight, j: int) -> List[int]:
    chain: List[int] = []
    for i in range(w.n):
        chain += [-w.mu[w.n - i], w.lam[i] + j]
    chain.append(-w.mu[0])
    return chain


def dual_chain_holds(w: Weight, j: int = 0) -> bool:
    """-mu_{n+1} >= lambda_1 + j >= -mu_n >= ... >= lambda_n + j >= -mu_1"""
    chain = _dual_chain(w, j)
    return all(a >= b for a, b in zip(chain, chain[1:]))


@dataclass(frozen=True)
class CritSet:
    """Interval of critical twists, possibly empty"""

    j_min: int
    j_max: int

    @property
    def empty(self) -> bool:
        return self.j_min > self.j_max

    @property
    def count(self) -> int:
        return 0 if self.empty else self.j_max - self.j_min + 1

    @property
    def h(self) -> Optional[int]:
        return None if self.empty else self.j_max - self.j_min

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.j_min, self.j_max + 1))

    def __contains__(self, j: int) -> bool:
        return self.j_min <= j <= self.j_max

    def to_json(self) -> Dict[str, Any]:
        if self.empty:
            return {"crit": [], "h": None}
        return {"crit": [self.j_min, self.j_max], "h": self.h}


def crit_set(w: Weight) -> CritSet:
    """All j with -mu_{n+1} >= lambda_1 + j >= -mu_n >= ... >= lambda_n + j >= -mu_1, empty off the dominant cone"""
    if not w.is_dominant():
        logger.debug("crit set of non-dominant %s is empty", w.to_json())
        return CritSet(0, -1)
    n = w.n
    j_min = max(-w.mu[n - i - 1] - w.lam[i] for i in range(n))
    j_max = min(-w.mu[n - i] - w.lam[i] for i in range(n))
    result = CritSet(j_min, j_max)
    logger.debug("crit set of %s: %s", w.to_json(), result.to_json())
    return result


@dataclass(frozen=True)
class ExponentVector:
    """Exponents on the generators u_{i+1,i} (c_0..c_n) and v_{i,i} (d_1..d_n)"""

    c: Tuple[int, ...]
    d: Tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.d)

    def to_json(self) -> Dict[str, Any]:
        return {"c": list(self.c), "d": list(self.d)}


def _basis_matrix(n: int) -> sympy.Matrix:
    cols = []
    for i in range(n + 1):
        cols.append(list(basis_weight_big(n, i + 1)) + list(basis_weight_small(n, i)))
    for i in range(1, n + 1):
        cols.append(list(basis_weight_big(n, i)) + list(basis_weight_small(n, i)))
    return sympy.Matrix(cols).T


def exponent_vector(w: Weight) -> ExponentVector:
    """Coordinates of w in the basis (beta_{i+1}, alpha_i), (beta_i, alpha_i)"""
    n = w.n
    basis = _basis_matrix(n)
    if abs(basis.det()) != 1:
        raise VerificationError("weights.basis_not_unimodular", f"generator weights do not span for n={n}")
    sol = basis.LUsolve(sympy.Matrix(w.as_vector()))
    values = [int(x) for x in sol]
    ev = ExponentVector(c=tuple(values[: n + 1]), d=tuple(values[n + 1:]))

    closed_c = tuple(w.mu[i] - w.lam[i] for i in range(n)) + (w.mu[n],)
    closed_d = tuple(w.lam[i] - w.mu[i + 1] for i in range(n))
    if ev.c != closed_c or ev.d != closed_d:
        raise VerificationError("weights.exponent_mismatch", "linear solve disagrees with the closed form")
    return ev


def weight_from_exponents(n: int, ev: ExponentVector) -> Weight:
    mu = [0] * (n + 1)
    lam = [0] * n
    for i, c in enumerate(ev.c):
        for k in range(i + 1):
            mu[k] += c
        for k in range(i):
            lam[k] += c
    for i, d in enumerate(ev.d, start=1):
        for k in range(i):
            mu[k] += d
            lam[k] += d
    return Weight.of(mu, lam)


def torus_character(w: Weight, big: Sequence, small: Sequence):
    """
    (mu, lambda^vee) on a torus element given by diagonal entries.
    Entries may be ints or ring elements; negative exponents need units.
    """
    if len(big) != w.n + 1 or len(small) != w.n:
        raise PreconditionError("weights.shape", "torus element has the wrong size")
    result = 1
    for t, e in zip(list(big) + list(small), list(w.mu) + list(w.dual_lambda())):
        result = result * (t ** e)
    return result


def tp_exponents(n: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Diagonal p-exponents of t_p = (diag(p^n,...,p,1), diag(p^n,...,p))"""
    big = tuple(range(n, -1, -1))
    small = tuple(range(n, 0, -1))
    return big, small


def contraction_exponents(n: int) -> Tuple[int, ...]:
    """How far t_p contracts each N-coordinate: e_i - e_j at (i, j), g entries then g' entries"""
    big, small = tp_exponents(n)
    out = []
    for diag in (big, small):
        for i in range(len(diag)):
            for j in range(i + 1, len(diag)):
                out.append(diag[i] - diag[j])
    return tuple(out)


def tp_normalization_exponents(w: Weight) -> Tuple[int, int]:
    """Exponents of p in mu(t_p big) and lambda(t_p small)"""
    big, small = tp_exponents(w.n)
    return sum(a * e for a, e in zip(w.mu, big)), sum(b * e for b, e in zip(w.lam, small))


def up_coset_exponent(n: int) -> int:
    """log_p of the number of U_p cosets: n(n+1)(2n+1)/6"""
    return n * (n + 1) * (2 * n + 1) // 6


@dataclass(frozen=True)
class Refinement:
    """Normalized U_p data beta, gamma with alpha = beta * gamma"""

    weight: Weight
    beta_norm: PadicScalar
    gamma_norm: PadicScalar

    @property
    def alpha_norm(self) -> PadicScalar:
        return self.beta_norm * self.gamma_norm

    def valuations(self) -> Dict[str, Union[Fraction, float]]:
        e_mu, e_lam = tp_normalization_exponents(self.weight)
        v_beta = valuation(self.beta_norm)
        v_gamma = valuation(self.gamma_norm)
        return {
            "beta_norm": v_beta,
            "gamma_norm": v_gamma,
            "alpha_norm": v_beta + v_gamma,
            "beta_p": v_beta - e_mu,
            "gamma_p": v_gamma - e_lam,
            "alpha_p": v_beta + v_gamma - e_mu - e_lam,
        }


def make_refinement(
    w: Weight,
    beta_norm: PadicScalar,
    gamma_norm: Optional[PadicScalar] = None,
    alpha_norm: Optional[PadicScalar] = None,
) -> Refinement:
    """Build refinement data; a given alpha must equal beta * gamma"""
    if gamma_norm is None:
        gamma_norm = beta_norm.ring.one()
    r = Refinement(w, beta_norm, gamma_norm)
    if alpha_norm is not None and alpha_norm != r.alpha_norm:
        raise PreconditionError("weights.refinement_mismatch", "alpha must equal beta * gamma")
    return r


@dataclass(frozen=True)
class SlopeReport:
    noncritical: bool
    very_small: bool
    small_by_count: bool

    def to_json(self) -> Dict[str, bool]:
        return {
            "noncritical": self.noncritical,
            "very_small": self.very_small,
            "small_by_count": self.small_by_count,
        }


def slope_predicates_from_valuations(
    w: Weight,
    v_alpha_p: Union[Fraction, float, int],
    v_beta_norm: Union[Fraction, float, int],
    v_gamma_norm: Union[Fraction, float, int] = 0,
) -> SlopeReport:
    """Noncritical slope and the two uniqueness conditions"""
    n = w.n
    beta_bound = min(w.mu[i] - w.mu[i + 1] + 1 for i in range(n))
    noncritical = v_beta_norm < beta_bound
    if n >= 2:
        gamma_bound = min(w.lam[i] - w.lam[i + 1] + 1 for i in range(n - 1))
        noncritical = noncritical and v_gamma_norm < gamma_bound

    crit = crit_set(w)
    if crit.empty:
        very_small = False
        small_by_count = False
    else:
        very_small = v_alpha_p < crit.h
        small_by_count = v_alpha_p < crit.count

    if very_small and not noncritical:
        raise VerificationError(
            "weights.slope_inconsistency",
            f"very small slope {v_alpha_p} at {w.to_json()} must be noncritical",
        )
    return SlopeReport(noncritical, very_small, small_by_count)


def slope_predicates(r: Refinement) -> SlopeReport:
    vals = r.valuations()
    return slope_predicates_from_valuations(r.weight, vals["alpha_p"], vals["beta_norm"], vals["gamma_norm"])


def is_classical_point(center: Weight, directions: Sequence[Weight], point: Sequence[int]) -> bool:
    """A point of the weight disc is classical when it lands on an integral dominant weight"""
    w = center
    for d, t in zip(directions, point):
        if t != int(t):
            return False
        w = w + d.scale(int(t))
    return w.is_dominant() and not crit_set(w).empty


def point_weight(center: Weight, directions: Sequence[Weight], point: Sequence[int]) -> Weight:
    w = center
    for d, t in zip(directions, point):
        w = w + d.scale(int(t))
    return w


@dataclass(frozen=True)
class AffinoidWeight:
    """center + sum_t w_t * directions[t] for w in the closed disc v >= 1"""

    center: Weight
    directions: Tuple[Weight, ...]

    def __post_init__(self):
        if not self.directions:
            raise PreconditionError("weights.affinoid", "an affinoid weight needs at least one direction")
        if any(d.n != self.center.n for d in self.directions):
            raise PreconditionError("weights.shape", "directions must have the rank of the center")

    @property
    def n(self) -> int:
        return self.center.n

    @property
    def k(self) -> int:
        return len(self.directions)

    def at(self, point: Sequence[int]) -> Weight:
        if len(point) != self.k:
            raise PreconditionError("weights.point_arity", f"expected {self.k} coordinates")
        return point_weight(self.center, self.directions, point)

    def to_json(self) -> Dict[str, Any]:
        return {"center": self.center.to_json(), "directions": [d.to_json() for d in self.directions]}

    @classmethod
    def from_json(cls, payload: Dict[str, Any]) -> "AffinoidWeight":
        try:
            center = Weight.from_json(payload["center"])
            directions = tuple(Weight.from_json(d) for d in payload["directions"])
        except (KeyError, TypeError) as e:
            raise SchemaError("weights.bad_affinoid", f"cannot read affinoid weight: {e}")
        return cls(center, directions)


def lambda_direction(n: int) -> Weight:
    """The direction (0, (1,...,1)) of cyclotomic twisting"""
    return Weight(n, tuple([0] * (n + 1)), tuple([1] * n))

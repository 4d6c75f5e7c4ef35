"""
Linear algebra over Z/p^W with valuation pivoting and precision tracking
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import sympy

from anticyclo.errors import PreconditionError

logger = logging.getLogger(__name__)

Matrix = List[List[int]]
Vector = List[int]


def vp(x: int, p: int) -> float:
    """p-adic valuation of an integer (inf for zero)"""
    if x == 0:
        return math.inf
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def unit_part(x: int, p: int) -> Tuple[int, int]:
    """Split a nonzero integer as p^v * u"""
    if x == 0:
        raise PreconditionError("padic_linalg.zero_unit_part", "zero has no unit part")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v, x


def vp_mod(x: int, p: int, prec: int) -> float:
    """Valuation of x known modulo p^prec (inf when x vanishes there)"""
    x %= p ** prec
    if x == 0:
        return math.inf
    return vp(x, p)


def identity(size: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(size)] for i in range(size)]


def mat_mul(A: Matrix, B: Matrix, modulus: int) -> Matrix:
    """Matrix product reduced mod modulus"""
    cols = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) % modulus for col in cols] for row in A]


def mat_vec(A: Matrix, v: Sequence[int], modulus: int) -> Vector:
    return [sum(a * b for a, b in zip(row, v)) % modulus for row in A]


def mat_sub_scalar(A: Matrix, c: int, modulus: int) -> Matrix:
    """A - c*I"""
    return [[(x - c if i == j else x) % modulus for j, x in enumerate(row)] for i, row in enumerate(A)]


def _min_valuation_pivot(M: Matrix, start: int, p: int, prec: int, full: bool) -> Optional[Tuple[int, int, float]]:
    best = None
    size_r = len(M)
    size_c = len(M[0]) if M else 0
    col_range = range(start, size_c) if full else range(start, start + 1)
    for j in col_range:
        for i in range(start, size_r):
            v = vp_mod(M[i][j], p, prec)
            if v == math.inf:
                continue
            if best is None or v < best[2]:
                best = (i, j, v)
                if v == 0:
                    return best
    return best


def echelon(A: Matrix, p: int, prec: int) -> Tuple[Matrix, List[int], List[int], int]:
    """
    Row echelon form with full minimal-valuation pivoting.
    Returns the reduced matrix, the pivot valuations, the column order and the
    remaining precision after the exact divisions.
    """
    M = [list(row) for row in A]
    rows = len(M)
    cols = len(M[0]) if M else 0
    order = list(range(cols))
    pivots: List[int] = []
    remaining = prec

    for t in range(min(rows, cols)):
        found = _min_valuation_pivot(M, t, p, remaining, full=True)
        if found is None:
            break
        i, j, v = found
        M[t], M[i] = M[i], M[t]
        if j != t:
            for row in M:
                row[t], row[j] = row[j], row[t]
            order[t], order[j] = order[j], order[t]

        modulus = p ** remaining
        _, u = unit_part(M[t][t] % modulus, p)
        u_inv = pow(u, -1, modulus)
        scale = p ** int(v)
        for r in range(t + 1, rows):
            entry = M[r][t] % modulus
            if entry == 0:
                continue
            factor = (entry // scale) * u_inv
            M[r] = [(a - factor * b) for a, b in zip(M[r], M[t])]
        pivots.append(int(v))
        remaining -= int(v)
        if remaining <= 0:
            raise PreconditionError("padic_linalg.precision_exhausted", "pivot valuations used up the working precision")
        modulus = p ** remaining
        M = [[x % modulus for x in row] for row in M]

    return M, pivots, order, remaining


def rank(A: Matrix, p: int, prec: int) -> int:
    """Rank over Q_p as far as the working precision can tell"""
    if not A:
        return 0
    _, pivots, _, _ = echelon(A, p, prec)
    return len(pivots)


def det_valuation(A: Matrix, p: int, prec: int) -> Tuple[float, bool]:
    """Valuation of det(A); the flag is False when only a lower bound is known"""
    size = len(A)
    if size == 0:
        return 0, True
    try:
        _, pivots, _, remaining = echelon(A, p, prec)
    except PreconditionError:
        return prec, False
    if len(pivots) < size:
        return sum(pivots) + remaining, False
    return sum(pivots), True


def solve(A: Matrix, b: Sequence[int], p: int, prec: int, target: Optional[int] = None) -> Tuple[Vector, int]:
    """
    Solve A x = b for square A nonsingular over Q_p with an integral solution.
    Returns x mod p^target and the digits lost to pivoting.
    """
    size = len(A)
    aug = [list(row) + [b[i]] for i, row in enumerate(A)]
    M = [list(row) for row in aug]
    order = list(range(size))
    remaining = prec
    pivots: List[int] = []

    for t in range(size):
        found = _min_valuation_pivot([row[:size] for row in M], t, p, remaining, full=True)
        if found is None:
            raise PreconditionError("padic_linalg.singular", "matrix is singular at working precision")
        i, j, v = found
        M[t], M[i] = M[i], M[t]
        if j != t:
            for row in M:
                row[t], row[j] = row[j], row[t]
            order[t], order[j] = order[j], order[t]
        modulus = p ** remaining
        _, u = unit_part(M[t][t] % modulus, p)
        u_inv = pow(u, -1, modulus)
        scale = p ** int(v)
        for r in range(t + 1, size):
            entry = M[r][t] % modulus
            if entry == 0:
                continue
            factor = (entry // scale) * u_inv
            M[r] = [(a - factor * c) for a, c in zip(M[r], M[t])]
        pivots.append(int(v))
        remaining -= int(v)
        if remaining <= 0:
            raise PreconditionError("padic_linalg.precision_exhausted", "pivot valuations used up the working precision")
        modulus = p ** remaining
        M = [[x % modulus for x in row] for row in M]

    # back substitution; each division by a pivot costs its valuation again
    x_perm = [0] * size
    for t in range(size - 1, -1, -1):
        modulus = p ** remaining
        acc = (M[t][size] - sum(M[t][k] * x_perm[k] for k in range(t + 1, size))) % modulus
        v = pivots[t]
        if v:
            if acc % (p ** v) != 0:
                raise PreconditionError("padic_linalg.non_integral", "solution is not integral at this precision")
            acc //= p ** v
            remaining -= v
            if remaining <= 0:
                raise PreconditionError("padic_linalg.precision_exhausted", "back substitution used up the working precision")
            modulus = p ** remaining
        _, u = unit_part(M[t][t] % (p ** (remaining + v)), p)
        x_perm[t] = (acc * pow(u, -1, modulus)) % modulus

    loss = prec - remaining
    if target is None:
        target = remaining
    if remaining < target:
        raise PreconditionError("padic_linalg.precision_exhausted", f"only {remaining} digits survive, {target} requested")

    x = [0] * size
    for t, col in enumerate(order):
        x[col] = x_perm[t] % (p ** target)
    return x, loss


def kernel_vector(A: Matrix, p: int, prec: int, target: Optional[int] = None) -> Tuple[Vector, int]:
    """
    Generator of a one-dimensional kernel, scaled so that its first unit entry
    is 1. Returns the vector mod p^target and the digits lost.
    """
    size = len(A)
    M, pivots, order, remaining = echelon(A, p, prec)
    if len(pivots) != size - 1:
        raise PreconditionError(
            "padic_linalg.kernel_dimension",
            f"expected corank 1, found rank {len(pivots)} of {size}",
        )

    # free coordinate p^(sum of pivots) keeps every division exact
    x_perm = [0] * size
    x_perm[size - 1] = p ** sum(pivots)
    for t in range(size - 2, -1, -1):
        modulus = p ** remaining
        acc = (-sum(M[t][k] * x_perm[k] for k in range(t + 1, size))) % modulus
        v = pivots[t]
        _, u = unit_part(M[t][t] % modulus, p)
        if v:
            if acc % (p ** v) != 0:
                raise PreconditionError("padic_linalg.precision_exhausted", "kernel back substitution lost exactness")
            acc //= p ** v
            remaining -= v
            if remaining <= 0:
                raise PreconditionError("padic_linalg.precision_exhausted", "kernel computation used up the working precision")
            modulus = p ** remaining
        x_perm[t] = (acc * pow(u, -1, modulus)) % modulus
        x_perm = [c % modulus for c in x_perm]

    x = [0] * size
    for t, col in enumerate(order):
        x[col] = x_perm[t]

    vmin = min(vp_mod(c, p, remaining) for c in x)
    if vmin == math.inf:
        raise PreconditionError("padic_linalg.kernel_dimension", "kernel vector vanished at working precision")
    vmin = int(vmin)
    remaining -= vmin
    if remaining <= 0:
        raise PreconditionError("padic_linalg.precision_exhausted", "kernel normalization used up the working precision")
    modulus = p ** remaining
    x = [(c // p ** vmin) % modulus for c in x]
    pivot_index = next(i for i, c in enumerate(x) if c % p != 0)
    inv = pow(x[pivot_index], -1, modulus)
    x = [(c * inv) % modulus for c in x]

    if target is None:
        target = remaining
    if remaining < target:
        raise PreconditionError("padic_linalg.precision_exhausted", f"only {remaining} digits survive, {target} requested")
    logger.debug("kernel vector found with %d digits lost", prec - remaining)
    return [c % (p ** target) for c in x], prec - remaining


def newton_slopes(coeffs: Sequence[int], p: int, prec: int) -> List[float]:
    """
    Slopes of the Newton polygon of sum coeffs[i] x^i (constant term first),
    one entry per root, ascending. Roots with valuation beyond the precision
    are reported as inf.
    """
    degree = len(coeffs) - 1
    points = []
    for i, c in enumerate(coeffs):
        v = vp_mod(c, p, prec)
        if v != math.inf:
            points.append((i, v))
    if not points:
        return [math.inf] * degree

    zero_roots = points[0][0]
    slopes: List[float] = [math.inf] * zero_roots

    # lower convex hull from the leftmost finite point
    hull = []
    for pt in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)

    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slope = (y1 - y2) / (x2 - x1)
        slopes.extend([slope] * (x2 - x1))
    return sorted(slopes)


def charpoly(A: Matrix, modulus: int) -> List[int]:
    """Characteristic polynomial det(xI - A) mod modulus, constant term first (Berkowitz via sympy)"""
    if not A:
        return [1]
    M = sympy.Matrix(A)
    coeffs_high = M.charpoly().all_coeffs()
    return [int(c) % modulus for c in reversed(coeffs_high)]

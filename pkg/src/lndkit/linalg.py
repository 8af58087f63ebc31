"""Exact linear algebra over Q and over the rational-function field Q(X).

A ``RatMatrix`` is a list of rows, each a list of RatFn (Poly entries are
accepted and lifted).
"""

from __future__ import annotations

import random
from typing import Sequence

import numpy as np
from gmpy2 import mpq

from lndkit.errors import EvaluationError
from lndkit.poly import Poly, RatFn, divide_exact, evaluate_at

RatMatrix = list  # list[list[RatFn]]

# prime for the modular generic-rank bound; p^2 fits in int64
PRIME = 2147483647


def _lift_rows(m) -> list[list[RatFn]]:
    return [[RatFn.of(x) for x in row] for row in m]


def _clear_row(row: list[RatFn]) -> list[Poly]:
    """Multiply a row by the lcm of its denominators."""
    from lndkit.poly import _gcd

    l = None
    for x in row:
        if x.den.is_one():
            continue
        if l is None:
            l = x.den
        else:
            g = _gcd(l, x.den)
            l = l * divide_exact(x.den, g)
    if l is None:
        return [x.num for x in row]
    return [x.num * divide_exact(l, x.den) for x in row]


def _pivot_weight(p: Poly):
    return (p.total_degree(), len(p))


def symbolic_rank(m: RatMatrix) -> int:
    """Rank over Q(X) by fraction-free (Bareiss) elimination.

    Denominators are cleared row by row first; pivots are chosen with the
    smallest total degree to limit intermediate growth.
    """
    rows = [_clear_row(r) for r in _lift_rows(m)]
    rows = [r for r in rows if any(not x.is_zero() for x in r)]
    if not rows:
        return 0
    nrows, ncols = len(rows), len(rows[0])
    a = [list(r) for r in rows]
    prev = None
    rank = 0
    for k in range(min(nrows, ncols)):
        best = None
        for i in range(k, nrows):
            for j in range(k, ncols):
                if not a[i][j].is_zero():
                    w = _pivot_weight(a[i][j])
                    if best is None or w < best[0]:
                        best = (w, i, j)
        if best is None:
            break
        _, pi, pj = best
        a[k], a[pi] = a[pi], a[k]
        if pj != k:
            for r in a:
                r[k], r[pj] = r[pj], r[k]
        piv = a[k][k]
        for i in range(k + 1, nrows):
            for j in range(k + 1, ncols):
                val = piv * a[i][j] - a[i][k] * a[k][j]
                a[i][j] = val if prev is None else divide_exact(val, prev)
            a[i][k] = Poly.zero(piv.varset)
        prev = piv
        rank += 1
    return rank


def solve_in_span(rows: RatMatrix, target: Sequence) -> list[RatFn] | None:
    """Find c with sum_j c_j * rows[j] == target over Q(X), or None.

    Returns the unique solution when the rows are independent; otherwise the
    particular solution with free coefficients set to zero.
    """
    rows = _lift_rows(rows)
    target = [RatFn.of(x) for x in target]
    k = len(rows)
    if k == 0:
        return None if any(not t.is_zero() for t in target) else []
    n = len(target)
    vs = target[0].varset if n else rows[0][0].varset
    # augmented system: n equations in k unknowns
    aug = [[rows[j][i] for j in range(k)] + [target[i]] for i in range(n)]
    pivots = []
    r = 0
    for c in range(k):
        best = None
        for i in range(r, n):
            x = aug[i][c]
            if not x.is_zero():
                w = (x.num.total_degree() + x.den.total_degree(), len(x.num) + len(x.den))
                if best is None or w < best[0]:
                    best = (w, i)
        if best is None:
            continue
        i = best[1]
        aug[r], aug[i] = aug[i], aug[r]
        inv = aug[r][c].inverse()
        aug[r] = [x * inv for x in aug[r]]
        for i2 in range(n):
            if i2 != r and not aug[i2][c].is_zero():
                f = aug[i2][c]
                aug[i2] = [a - f * b for a, b in zip(aug[i2], aug[r])]
        pivots.append(c)
        r += 1
        if r == n:
            break
    for i in range(r, n):
        if not aug[i][k].is_zero():
            return None
    sol = [RatFn(Poly.zero(vs), reduced=True) for _ in range(k)]
    for i, c in enumerate(pivots):
        sol[c] = aug[i][k]
    return sol


# ---------------------------------------------------------------------------
# linear algebra over Q


def rref_rational(mat: list[list[mpq]]):
    """Reduced row echelon form over Q; returns (rows, pivot columns)."""
    a = [list(r) for r in mat]
    if not a:
        return a, []
    nrows, ncols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(ncols):
        i = next((i for i in range(r, nrows) if a[i][c]), None)
        if i is None:
            continue
        a[r], a[i] = a[i], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i2 in range(nrows):
            if i2 != r and a[i2][c]:
                f = a[i2][c]
                a[i2] = [x - f * y for x, y in zip(a[i2], a[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a[:r], pivots


def nullspace_rational(mat: list[list[mpq]], ncols: int) -> list[list[mpq]]:
    """Basis of {v : mat @ v = 0} over Q."""
    red, pivots = rref_rational(mat) if mat else ([], [])
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [mpq(0)] * ncols
        v[f] = mpq(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def solve_rational(columns: list[list[mpq]], target: list[mpq]):
    """Solve sum_j c_j * columns[j] == target over Q, or return None."""
    n = len(target)
    k = len(columns)
    aug = [[columns[j][i] for j in range(k)] + [target[i]] for i in range(n)]
    red, pivots = rref_rational(aug)
    if k in pivots:
        return None
    sol = [mpq(0)] * k
    for row, p in zip(red, pivots):
        sol[p] = row[k]
    return sol


# ---------------------------------------------------------------------------
# modular generic-rank bound


def rank_at_random_point(m: RatMatrix, rng: random.Random | None = None, tries: int = 3) -> int:
    """Rank of m reduced mod a prime at a random point.

    This is a lower bound for the symbolic rank (a specialization never
    increases rank), so it can confirm full rank cheaply.
    """
    from lndkit import _kernels

    rng = rng or random.Random(0)
    rows = _lift_rows(m)
    if not rows or not rows[0]:
        return 0
    vs = rows[0][0].varset
    best = 0
    for _ in range(tries):
        point = {nm: rng.randrange(1, PRIME) for nm in vs.names}
        try:
            vals = [[_mod_value(x, point) for x in r] for r in rows]
        except EvaluationError:
            continue
        arr = np.array(vals, dtype=np.int64)
        best = max(best, int(_kernels.rank_mod_p(arr, PRIME)))
        if best == min(len(rows), len(rows[0])):
            break
    return best


def _mod_poly(p: Poly, point, names):
    total = 0
    for e, c in p.terms.items():
        num = int(c.numerator) % PRIME
        den = int(c.denominator) % PRIME
        if den == 0:
            raise EvaluationError("coefficient denominator divisible by the prime")
        t = num * pow(den, PRIME - 2, PRIME)
        for nm, k in zip(names, e):
            if k:
                t = t * pow(point[nm], k, PRIME) % PRIME
        total = (total + t) % PRIME
    return total


def _mod_value(x: RatFn, point) -> int:
    names = x.varset.names
    d = _mod_poly(x.den, point, names)
    if d == 0:
        raise EvaluationError("denominator vanishes at point")
    return _mod_poly(x.num, point, names) * pow(d, PRIME - 2, PRIME) % PRIME


def evaluate_matrix(m: RatMatrix, point) -> list[list[mpq]]:
    return [[evaluate_at(x, point) for x in row] for row in _lift_rows(m)]

"""Locally free commuting LND families and their dJ-like calculus.

For an ordered family (d_1, ..., d_k) the annihilator tower is
A_i = ker d_i ∩ ... ∩ ker d_k.  Indices in reports (levels, witnesses, pairs)
are 1-based to match that tower.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial
from typing import Sequence

from gmpy2 import mpq

from lndkit.derivation import (
    DEFAULT_CAP,
    Deriv,
    apply,
    bracket,
    certify_lnd,
    check_commuting,
    is_certified,
    is_locally_free,
)
from lndkit.errors import CapExceeded, FamilyError
from lndkit.linalg import nullspace_rational, rref_rational, solve_in_span, solve_rational, symbolic_rank
from lndkit.poly import Poly, RatFn, divide_exact, poly_gcd

DEFAULT_DEGREE_CAP = 12
DEFAULT_REDUCTION_CAP = 1000


class Family:
    """An ordered, pairwise commuting, locally free family of certified LNDs."""

    __slots__ = ("gens", "certs")

    def __init__(self, gens: Sequence[Deriv], certs=None, cap: int = DEFAULT_CAP):
        gens = tuple(gens)
        if not gens:
            raise FamilyError("a family needs at least one derivation")
        vs = gens[0].varset
        if any(g.varset != vs for g in gens):
            raise FamilyError("family members live in different variable sets")
        if certs is None:
            certs = tuple(certify_lnd(g, cap) for g in gens)
        certs = tuple(certs)
        for i, c in enumerate(certs, 1):
            if not is_certified(c):
                raise FamilyError(f"generator {i} is not certified locally nilpotent ({c})")
        bad = check_commuting(gens)
        if bad:
            raise FamilyError(f"generators do not commute: pairs {bad}")
        if not is_locally_free(gens):
            raise FamilyError("generators are not locally free")
        self.gens = gens
        self.certs = certs

    @property
    def varset(self):
        return self.gens[0].varset

    def __len__(self):
        return len(self.gens)

    def __iter__(self):
        return iter(self.gens)

    def __getitem__(self, i):
        return self.gens[i]

    def reordered(self, order: Sequence[int]) -> "Family":
        """Explicit reordering by 0-based positions."""
        return Family([self.gens[i] for i in order], [self.certs[i] for i in order])

    def tail(self, start: int) -> "Family":
        """The subfamily (d_start, ..., d_k), start 1-based."""
        return Family(self.gens[start - 1:], self.certs[start - 1:])

    def rows(self):
        return [g.row() for g in self.gens]

    def __repr__(self):
        return f"Family({list(self.gens)!r})"


def annihilated_by_all(f, gens: Sequence[Deriv]) -> bool:
    return all(apply(g, f).is_zero() for g in gens)


def annihilated_level(f, fam: Family) -> int:
    """Smallest i in 1..k+1 with d_l(f) == 0 for every l >= i."""
    for l in range(len(fam), 0, -1):
        if not apply(fam.gens[l - 1], f).is_zero():
            return l + 1
    return 1


# ---------------------------------------------------------------------------
# slice systems


@dataclass(frozen=True)
class SliceSys:
    family: Family
    y: tuple  # Poly per generator
    x: tuple  # RatFn per generator, d_i(x_j) = delta_ij
    h: Poly


def _monomials_desc(vs, degree):
    """Exponent tuples of total degree <= degree in the non-parameter variables,
    descending graded lex."""
    idx = vs.var_indices
    n = len(vs)
    out = []
    for combo_deg in range(degree + 1):
        for c in itertools.combinations_with_replacement(idx, combo_deg):
            e = [0] * n
            for i in c:
                e[i] += 1
            out.append(tuple(e))
    out = sorted(set(out), key=lambda e: (sum(e), e), reverse=True)
    return out


def _joint_kernel_basis(gens: Sequence[Deriv], vs, degree):
    """RREF basis (leading monomial first) of polys of degree <= degree killed by gens."""
    monos = _monomials_desc(vs, degree)
    if not gens:
        return [Poly(vs, {m: mpq(1)}, _clean=True) for m in monos]
    row_index = {}
    columns = []
    for m in monos:
        col = {}
        p = Poly(vs, {m: mpq(1)}, _clean=True)
        for j, g in enumerate(gens):
            for e, c in apply(g, p).terms.items():
                key = (j, e)
                if key not in row_index:
                    row_index[key] = len(row_index)
                col[row_index[key]] = c
        columns.append(col)
    mat = [[mpq(0)] * len(monos) for _ in range(len(row_index))]
    for ci, col in enumerate(columns):
        for ri, c in col.items():
            mat[ri][ci] = c
    null = nullspace_rational(mat, len(monos))
    if not null:
        return []
    red, _ = rref_rational(null)
    return [Poly(vs, {monos[c]: v for c, v in enumerate(row) if v}) for row in red]


def build_slice_system(fam: Family, degree_cap: int = DEFAULT_DEGREE_CAP) -> SliceSys:
    """Find slice data y_i, x_i = y_i / d_i(y_i), h = prod d_i(y_i).

    For each i the search escalates the degree bound and takes the
    graded-lex-smallest reduced kernel element of the other generators that
    d_i does not kill; then y_i is replaced by d_i(y_i) until d_i(y_i) lies in
    ker d_i.
    """
    if degree_cap < 1:
        raise ValueError("degree_cap must be at least 1")
    vs = fam.varset
    ys = []
    for i, di in enumerate(fam.gens):
        others = [g for j, g in enumerate(fam.gens) if j != i]
        found = None
        for degree in range(1, degree_cap + 1):
            cands = [p for p in _joint_kernel_basis(others, vs, degree) if not apply(di, p).is_zero()]
            if cands:
                found = cands[-1]
                break
        if found is None:
            raise CapExceeded(f"no slice candidate for generator {i + 1}", degree_cap)
        y = found
        while not apply(di, apply(di, y)).is_zero():
            y = apply(di, y)
        ys.append(y)
    dys = [apply(d, y) for d, y in zip(fam.gens, ys)]
    xs = tuple(RatFn(y, dy) for y, dy in zip(ys, dys))
    h = Poly.one(vs)
    for dy in dys:
        h = h * dy
    return SliceSys(fam, tuple(ys), xs, h)


def check_slice_system(s: SliceSys) -> bool:
    gens = s.family.gens
    for i, di in enumerate(gens):
        for j in range(len(gens)):
            v = apply(di, s.x[j])
            if v != (1 if i == j else 0):
                return False
            if i != j and not apply(di, s.y[j]).is_zero():
                return False
        if not annihilated_by_all(apply(di, s.y[i]), gens):
            return False
    return not s.h.is_zero() and annihilated_by_all(s.h, gens)


def _dixmier(f: RatFn, d: Deriv, s: RatFn, cap: int) -> RatFn:
    """sum_m (-s)^m/m! d^m(f): projection onto ker d along the slice s."""
    acc = f
    term = f
    power = RatFn.of(Poly.one(f.varset))
    for m in range(1, cap + 1):
        term = apply(d, term)
        if term.is_zero():
            return acc
        power = power * (-s)
        acc = acc + term * power * mpq(1, factorial(m))
    raise CapExceeded("derivation not nilpotent on projection input", cap)


def kernel_project(g, s: SliceSys, cap: int = 256) -> RatFn:
    """Image of g under prod_i exp(-x_i d_i), annihilated by every generator."""
    value = RatFn.of(g)
    for d, x in zip(reversed(s.family.gens), reversed(s.x)):
        value = _dixmier(value, d, x, cap)
    return value


def slice_expand(g, s: SliceSys, cap: int = 256) -> dict:
    """Coefficients c_alpha in the joint kernel with g = sum c_alpha x^alpha."""
    gens = s.family.gens
    k = len(gens)
    out = {}

    def rec(i, alpha, value):
        if i == k:
            c = kernel_project(value, s, cap)
            if not c.is_zero():
                out[alpha] = c
            return
        cur = value
        m = 0
        while not cur.is_zero():
            if m > cap:
                raise CapExceeded("derivation not nilpotent on expansion input", cap)
            rec(i + 1, alpha + (m,), cur * mpq(1, factorial(m)))
            cur = apply(gens[i], cur)
            m += 1

    rec(0, (), RatFn.of(g))
    return dict(sorted(out.items()))


def slice_reconstruct(expansion: dict, s: SliceSys) -> RatFn:
    vs = s.family.varset
    total = RatFn.of(Poly.zero(vs))
    for alpha, c in expansion.items():
        term = c
        for x, a in zip(s.x, alpha):
            if a:
                term = term * x ** a
        total = total + term
    return total


# ---------------------------------------------------------------------------
# membership


@dataclass(frozen=True)
class Witness:
    """Why a membership test failed.

    kind "derivative": d_l(f_j) = value != 0; kind "denominator": d_l kills
    neither the reduced denominator of f_j (value is d_l(den)); kind "span":
    the derivation is not in the Q(X)-span of the family; kind "level": the
    level differs from the required one (value is the found level).
    """

    kind: str
    j: int | None = None
    l: int | None = None
    value: object = None


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    level: int | None
    coeffs: tuple | None
    witness: Witness | None = None


def _span_coeffs(d: Deriv, fam: Family):
    if d.varset != fam.varset:
        raise ValueError("derivation and family live in different variable sets")
    return solve_in_span(fam.rows(), d.row())


def _first_nonzero_level(coeffs, k):
    return next((j for j, c in enumerate(coeffs, 1) if not c.is_zero()), k + 1)


def dj_membership(d: Deriv, fam: Family) -> MembershipReport:
    """Membership of a polynomial derivation in the dJ-like algebra of fam.

    d = sum f_j d_j is a member iff d_l(f_j) == 0 for all l >= j and each
    reduced denominator is annihilated by every generator.
    """
    coeffs = _span_coeffs(d, fam)
    if coeffs is None:
        return MembershipReport(False, None, None, Witness("span"))
    coeffs = tuple(coeffs)
    gens = fam.gens
    k = len(gens)
    for j, f in enumerate(coeffs, 1):
        if f.is_zero():
            continue
        for l in range(j, k + 1):
            v = apply(gens[l - 1], f)
            if not v.is_zero():
                return MembershipReport(False, None, coeffs, Witness("derivative", j, l, v))
        if not f.den.is_constant():
            for l in range(1, k + 1):
                v = apply(gens[l - 1], f.den)
                if not v.is_zero():
                    return MembershipReport(False, None, coeffs, Witness("denominator", j, l, v))
    return MembershipReport(True, _first_nonzero_level(coeffs, k), coeffs)


def rx_membership(d: Deriv, fam: Family) -> MembershipReport:
    """Membership in the Frac(A_1)-span of the family: every coefficient is
    annihilated by every generator."""
    coeffs = _span_coeffs(d, fam)
    if coeffs is None:
        return MembershipReport(False, None, None, Witness("span"))
    coeffs = tuple(coeffs)
    for j, f in enumerate(coeffs, 1):
        for l, g in enumerate(fam.gens, 1):
            v = apply(g, f)
            if not v.is_zero():
                return MembershipReport(False, None, coeffs, Witness("derivative", j, l, v))
    return MembershipReport(True, _first_nonzero_level(coeffs, len(fam)), coeffs)


@dataclass(frozen=True)
class InclusionReport:
    included: bool
    coeffs: tuple = ()  # one row of big-family coefficients per small generator
    failed_generator: int | None = None  # 1-based index into small
    witness: Witness | None = None
    strict: bool = False  # coefficients also killed by d_start..d_k

    def __bool__(self):
        return self.included


def family_includes(big: Family, small: Family) -> InclusionReport:
    """Whether the dJ-like group of small lies in that of big.

    small = (d'_l, ..., d'_k) is aligned with the tail of big: each d'_i must
    lie in the dJ-like algebra of big at level exactly i.  The kernel flags
    then agree and every element of the algebra of small expands over big
    with coefficients in the right localized kernels.  ``strict`` records the
    stronger condition that every coefficient is killed by d_l, ..., d_k; it
    is sufficient but not necessary (the twisted pair (d_y + y d_z, d_z)
    spans the same algebra as (d_y, d_z) and fails it).
    """
    k, m = len(big), len(small)
    if big.varset != small.varset:
        raise ValueError("families live in different variable sets")
    if m > k:
        return InclusionReport(False, (), None, Witness("level"))
    start = k - m + 1
    rows = []
    strict = True
    for s, dprime in enumerate(small.gens):
        i = start + s
        rep = dj_membership(dprime, big)
        if not rep.member:
            return InclusionReport(False, tuple(rows), s + 1, rep.witness)
        if rep.level != i:
            return InclusionReport(False, tuple(rows), s + 1, Witness("level", i, None, rep.level))
        strict = strict and all(
            apply(big.gens[l - 1], f).is_zero() for f in rep.coeffs for l in range(start, k + 1))
        rows.append(rep.coeffs[start - 1:])
    return InclusionReport(True, tuple(rows), strict=strict)


def family_equivalent(f1: Family, f2: Family) -> bool:
    if len(f1) != len(f2):
        raise ValueError("families of different lengths")
    return bool(family_includes(f1, f2)) and bool(family_includes(f2, f1))


# ---------------------------------------------------------------------------
# commuting reduction


def _flatten(d: Deriv) -> dict:
    out = {}
    for i, c in enumerate(d.coeffs):
        for e, v in c.terms.items():
            out[(i, e)] = v
    return out


def in_linear_span(d: Deriv, basis: Sequence[Deriv]):
    """Rational coefficients expressing d over basis, or None."""
    flats = [_flatten(b) for b in basis]
    target = _flatten(d)
    keys = sorted(set(target).union(*flats)) if flats else sorted(target)
    cols = [[f.get(key, mpq(0)) for key in keys] for f in flats]
    return solve_rational(cols, [target.get(key, mpq(0)) for key in keys])


def commuting_reduction(
    basis: Sequence[Deriv], k: int | None = None, cap: int = DEFAULT_REDUCTION_CAP
) -> Family:
    """k commuting, locally free derivations inside the Lie algebra spanned by basis.

    Pairs with a nonzero bracket b have one member replaced by b (the later
    one first) as long as the rank stays k.
    """
    basis = list(basis)
    if not basis:
        raise FamilyError("empty basis")
    for i, j in itertools.combinations(range(len(basis)), 2):
        b = bracket(basis[i], basis[j])
        if not b.is_zero() and in_linear_span(b, basis) is None:
            raise FamilyError(f"basis is not bracket-closed: [b{i + 1}, b{j + 1}] leaves the span")
    full = symbolic_rank([b.row() for b in basis])
    if k is None:
        k = full
    if full < k:
        raise FamilyError(f"span has rank {full} < {k}")
    chosen = []
    for b in basis:
        if len(chosen) == k:
            break
        if symbolic_rank([c.row() for c in chosen + [b]]) == len(chosen) + 1:
            chosen.append(b)
    steps = 0
    while True:
        pair = next(
            ((i, j, b) for i, j in itertools.combinations(range(k), 2)
             if not (b := bracket(chosen[i], chosen[j])).is_zero()),
            None,
        )
        if pair is None:
            break
        if steps >= cap:
            i, j, _ = pair
            raise CapExceeded(f"no commuting family yet; surviving pair ({i + 1}, {j + 1})", cap)
        i, j, b = pair
        for pos in (j, i):
            trial = chosen[:pos] + [b] + chosen[pos + 1:]
            if symbolic_rank([c.row() for c in trial]) == k:
                chosen = trial
                break
        else:
            raise FamilyError(f"cannot replace either member of pair ({i + 1}, {j + 1}) keeping rank {k}")
        steps += 1
    return Family(chosen)


# ---------------------------------------------------------------------------
# cylinder presentation


@dataclass(frozen=True)
class CylPres:
    slicesys: SliceSys
    f: Poly
    coord_table: dict = field(default_factory=dict)  # variable name -> {alpha: RatFn}


def divides_power(g: Poly, f: Poly) -> bool:
    """Whether g divides some power of f."""
    if g.is_zero():
        return False
    while not g.is_constant():
        c = poly_gcd(g, f)
        if c.is_constant():
            return False
        g = divide_exact(g, c)
    return True


def cylinder_presentation(fam: Family, s: SliceSys) -> CylPres:
    """Express every ambient variable as a polynomial in the slice coordinates
    over the joint kernel localized at f = h * (extra denominators)."""
    vs = fam.varset
    f = s.h
    table = {}
    for nm in vs.variables:
        exp = slice_expand(Poly.var(vs, nm), s)
        table[nm] = exp
        for c in exp.values():
            if not divides_power(c.den, f):
                f = f * c.den
    return CylPres(s, f, table)


def check_cylinder(cp: CylPres) -> bool:
    s = cp.slicesys
    gens = s.family.gens
    vs = s.family.varset
    for nm, exp in cp.coord_table.items():
        for c in exp.values():
            if not divides_power(c.den, cp.f) or not annihilated_by_all(c, gens):
                return False
        if slice_reconstruct(exp, s) != Poly.var(vs, nm):
            return False
    return True

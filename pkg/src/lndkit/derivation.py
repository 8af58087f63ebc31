"""Derivations of Q[X]: application, brackets, and local-nilpotency certificates."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

from lndkit.linalg import rank_at_random_point, symbolic_rank
from lndkit.poly import Poly, RatFn, VarSet, Q

DEFAULT_CAP = 64


class Deriv:
    """A derivation given by its values on the non-parameter variables.

    Parameter variables are always sent to 0.
    """

    __slots__ = ("varset", "coeffs", "_hash")

    def __init__(self, varset: VarSet, coeffs: Sequence[Poly] | dict):
        if isinstance(coeffs, dict):
            zero = Poly.zero(varset)
            by_name = dict(coeffs)
            unknown = set(by_name) - set(varset.names)
            if unknown:
                raise KeyError(f"unknown variables {sorted(unknown)}")
            coeffs = [by_name.get(nm, zero) for nm in varset.names]
        coeffs = tuple(coeffs)
        if len(coeffs) != len(varset):
            raise ValueError("need one coefficient per variable")
        for nm, flag, c in zip(varset.names, varset.param_flags, coeffs):
            if c.varset != varset:
                raise ValueError("coefficient lives in a different variable set")
            if flag and not c.is_zero():
                raise ValueError(f"derivations must vanish on parameter {nm!r}")
        self.varset = varset
        self.coeffs = coeffs
        self._hash = None

    @classmethod
    def zero(cls, varset):
        return cls(varset, [Poly.zero(varset)] * len(varset))

    @classmethod
    def partial(cls, varset, name, coeff=None):
        """coeff * d/d(name); coeff defaults to 1."""
        c = Poly.one(varset) if coeff is None else coeff
        return cls(varset, {name: c})

    def coeff(self, name: str) -> Poly:
        return self.coeffs[self.varset.index(name)]

    def is_zero(self):
        return all(c.is_zero() for c in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, Deriv):
            return NotImplemented
        return self.varset == other.varset and self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.varset, self.coeffs))
        return self._hash

    def __add__(self, other):
        return Deriv(self.varset, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        return Deriv(self.varset, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return Deriv(self.varset, [-a for a in self.coeffs])

    def scale(self, f) -> "Deriv":
        """Multiply by a rational number or a polynomial."""
        if isinstance(f, Poly):
            return Deriv(self.varset, [f * a for a in self.coeffs])
        q = Q(f)
        return Deriv(self.varset, [a.scale(q) for a in self.coeffs])

    def __mul__(self, f):
        return self.scale(f)

    __rmul__ = __mul__

    def embed(self, varset: VarSet) -> "Deriv":
        by_name = dict(zip(self.varset.names, self.coeffs))
        return Deriv(varset, {nm: c.embed(varset) for nm, c in by_name.items() if not c.is_zero()})

    def row(self) -> list[Poly]:
        """Coefficients on the non-parameter variables."""
        return [self.coeffs[i] for i in self.varset.var_indices]

    def __call__(self, f):
        return apply(self, f)

    def __repr__(self):
        from lndkit.poly import canonical_string

        parts = [
            f"({canonical_string(c)})*d/d{nm}"
            for nm, c in zip(self.varset.names, self.coeffs)
            if not c.is_zero()
        ]
        return "Deriv(" + (" + ".join(parts) if parts else "0") + ")"


def _apply_poly(d: Deriv, f: Poly) -> Poly:
    acc = Poly.zero(f.varset)
    used = f.used_indices()
    for i, c in enumerate(d.coeffs):
        if i in used and not c.is_zero():
            acc = acc + c * f.diff(i)
    return acc


def apply(d: Deriv, f):
    """d(f) for a Poly or RatFn (quotient rule on RatFn)."""
    if f.varset != d.varset:
        raise ValueError("derivation and argument live in different variable sets")
    if isinstance(f, Poly):
        return _apply_poly(d, f)
    if isinstance(f, RatFn):
        if f.den.is_constant():
            return RatFn(_apply_poly(d, f.num), f.den, reduced=True)
        dn = _apply_poly(d, f.num)
        dd = _apply_poly(d, f.den)
        if dd.is_zero():
            return RatFn(dn, f.den)
        return RatFn(dn * f.den - f.num * dd, f.den * f.den)
    raise TypeError(f"cannot apply a derivation to {type(f).__name__}")


def bracket(d1: Deriv, d2: Deriv) -> Deriv:
    """[d1, d2] with coefficients d1(d2(x_i)) - d2(d1(x_i))."""
    if d1.varset != d2.varset:
        raise ValueError("derivations live in different variable sets")
    return Deriv(d1.varset, [apply(d1, b) - apply(d2, a) for a, b in zip(d1.coeffs, d2.coeffs)])


def nilpotency_index(d: Deriv, f, cap: int = DEFAULT_CAP) -> int | None:
    """Smallest m with d^m(f) == 0, or None if m would exceed cap."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if f.is_zero():
        return 0
    g = f
    for m in range(1, cap + 1):
        g = apply(d, g)
        if g.is_zero():
            return m
    return None


@dataclass(frozen=True)
class Triangular:
    """d(x_order[i]) involves only x_order[:i] and parameters."""

    order: tuple[str, ...]

    def __str__(self):
        return f"Triangular({','.join(self.order)})"


@dataclass(frozen=True)
class IteratedZero:
    """d^bounds[v](v) == 0 and d^(bounds[v]-1)(v) != 0 for every variable v."""

    bounds: tuple[tuple[str, int], ...]

    def bound(self, name):
        return dict(self.bounds)[name]

    def __str__(self):
        return "IteratedZero(" + ",".join(f"{v}:{b}" for v, b in self.bounds) + ")"


@dataclass(frozen=True)
class Unknown:
    cap: int

    def __str__(self):
        return f"Unknown(cap={self.cap})"


LndCert = Triangular | IteratedZero | Unknown


def is_certified(cert) -> bool:
    return isinstance(cert, (Triangular, IteratedZero))


def triangular_order(d: Deriv) -> tuple[str, ...] | None:
    """Topological order of the variable dependency graph, or None if cyclic.

    Edge u -> v when u occurs in d(v).  Ties go to the declared order.
    """
    vs = d.varset
    idx = vs.var_indices
    succ = {i: set() for i in idx}
    indeg = {i: 0 for i in idx}
    for v in idx:
        for u in d.coeffs[v].used_indices():
            if vs.param_flags[u]:
                continue
            if u == v:
                return None
            if v not in succ[u]:
                succ[u].add(v)
                indeg[v] += 1
    heap = [i for i in idx if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) != len(idx):
        return None
    return tuple(vs.names[i] for i in order)


def certify_lnd(d: Deriv, cap: int = DEFAULT_CAP) -> LndCert:
    """Prove local nilpotency if possible.

    Tries the triangular shape first, then bounded iteration on each
    generator; anything else is Unknown (not a disproof).
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    order = triangular_order(d)
    if order is not None:
        return Triangular(order)
    bounds = []
    for nm in d.varset.variables:
        m = nilpotency_index(d, Poly.var(d.varset, nm), cap)
        if m is None:
            return Unknown(cap)
        bounds.append((nm, m))
    return IteratedZero(tuple(bounds))


def check_cert(d: Deriv, cert) -> bool:
    """Re-verify that cert proves d locally nilpotent."""
    if isinstance(cert, Triangular):
        vs = d.varset
        if sorted(cert.order) != sorted(vs.variables):
            return False
        seen = set(vs.params)
        for nm in cert.order:
            if not d.coeff(nm).used_names() <= seen:
                return False
            seen.add(nm)
        return True
    if isinstance(cert, IteratedZero):
        for nm, b in cert.bounds:
            if nilpotency_index(d, Poly.var(d.varset, nm), b) != b:
                return False
        return {nm for nm, _ in cert.bounds} == set(d.varset.variables)
    return False


def coefficient_matrix(family: Sequence[Deriv]) -> list[list[Poly]]:
    return [d.row() for d in family]


def is_locally_free(family: Sequence[Deriv]) -> bool:
    """True iff the k coefficient rows have rank k over Q(X)."""
    family = list(family)
    if not family:
        return True
    k = len(family)
    if k > len(family[0].varset.variables):
        return False
    m = coefficient_matrix(family)
    # a specialization at full rank already proves full symbolic rank
    if rank_at_random_point(m) == k:
        return True
    return symbolic_rank(m) == k


def check_commuting(family: Sequence[Deriv]) -> list[tuple[int, int]]:
    """1-based index pairs (i, j), i < j, whose bracket is nonzero."""
    family = list(family)
    bad = []
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            if not bracket(family[i], family[j]).is_zero():
                bad.append((i + 1, j + 1))
    return bad

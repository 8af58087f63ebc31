"""Weighted degree functions on a cylinder split Z x A^k and the bounding-weights recursion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from lndkit.automorphism import Auto, apply_auto, compose, is_unitriangular
from lndkit.errors import NotTriangularError, VerificationError
from lndkit.poly import NEG_INF, Poly, VarSet, weighted_total_degree


class WeightFn:
    """omega(f) = max over monomials of sum(e_v * weight(v)).

    Base variables carry base_weights (default 1); the cylinder variables
    x_1..x_k carry d_1..d_k.  Parameters have weight 0.
    """

    __slots__ = ("varset", "base_weights", "cyl_vars", "d")

    def __init__(self, varset: VarSet, base_weights: dict | None, cyl_vars: Sequence[str], d: Sequence[int]):
        cyl_vars = tuple(cyl_vars)
        d = tuple(int(v) for v in d)
        if len(cyl_vars) != len(d):
            raise ValueError("one weight per cylinder variable")
        if len(set(cyl_vars)) != len(cyl_vars):
            raise ValueError("repeated cylinder variable")
        for nm in cyl_vars:
            if nm not in varset.variables:
                raise ValueError(f"{nm!r} is not a variable")
        base = [nm for nm in varset.variables if nm not in cyl_vars]
        base_weights = dict(base_weights or {})
        extra = set(base_weights) - set(base)
        if extra:
            raise ValueError(f"base weights given for non-base variables {sorted(extra)}")
        weights = {nm: int(base_weights.get(nm, 1)) for nm in base}
        if any(w < 1 for w in weights.values()) or any(v < 1 for v in d):
            raise ValueError("weights must be positive integers")
        self.varset = varset
        self.base_weights = weights
        self.cyl_vars = cyl_vars
        self.d = d

    def weight(self, name: str) -> int:
        if name in self.base_weights:
            return self.base_weights[name]
        if name in self.cyl_vars:
            return self.d[self.cyl_vars.index(name)]
        return 0

    def weights(self) -> dict:
        return {nm: self.weight(nm) for nm in self.varset.names}

    def cylinder(self) -> dict:
        return dict(zip(self.cyl_vars, self.d))

    def __eq__(self, other):
        if not isinstance(other, WeightFn):
            return NotImplemented
        return (self.varset, self.base_weights, self.cyl_vars, self.d) == (
            other.varset, other.base_weights, other.cyl_vars, other.d)

    def __repr__(self):
        return f"WeightFn(base={self.base_weights}, cylinder={list(zip(self.cyl_vars, self.d))})"


def eval_degree(w: WeightFn, f: Poly):
    """omega(f) as an int, or -inf for the zero polynomial."""
    if f.varset != w.varset:
        raise ValueError("polynomial lives in a different variable set")
    if f.is_zero():
        return NEG_INF
    return int(weighted_total_degree(f, w.weights()))


@dataclass(frozen=True)
class DegreeViolation:
    variable: str
    degree: int
    bound: int
    inverse: bool  # True when the inverse map violates

    def __str__(self):
        side = "inverse " if self.inverse else ""
        return f"{side}{self.variable}: {self.degree} > {self.bound}"


def is_degree_preserving(a: Auto, a_inv: Auto, w: WeightFn):
    """(ok, violation): omega(g*(v)) <= omega(v) for both maps and every variable v."""
    vs = w.varset
    for inverse, g in ((False, a), (True, a_inv)):
        for nm in vs.variables:
            deg = eval_degree(w, g.image(nm))
            bound = w.weight(nm)
            if deg > bound:
                return False, DegreeViolation(nm, int(deg), bound, inverse)
    return True, None


def bounding_weights(
    autos: Sequence[tuple[Auto, Auto]],
    order: Sequence[str],
    base_weights: dict | None = None,
) -> WeightFn:
    """Smallest cylinder weights, chosen left to right, that every pair preserves.

    d_i = max(1, max over both maps g of omega(g*(x_i) - x_i)), with omega using
    d_1..d_{i-1}; each difference only involves base and earlier cylinder
    variables so later weights do not enter.
    """
    autos = list(autos)
    if not autos:
        raise ValueError("need at least one automorphism pair")
    order = tuple(order)
    vs = autos[0][0].varset
    base = [nm for nm in vs.variables if nm not in order]
    for a, a_inv in autos:
        if a.varset != vs or a_inv.varset != vs:
            raise ValueError("automorphisms live in different variable sets")
        for g in (a, a_inv):
            for nm in base:
                if g.image(nm) != Poly.var(vs, nm):
                    raise NotTriangularError(f"base variable {nm!r} is not fixed")
            if not is_unitriangular(g, base + list(order)):
                raise NotTriangularError(f"automorphism is not unitriangular in the order {order}")
        if not compose(a, a_inv).is_identity():
            raise ValueError("automorphism pair is not mutually inverse")
    d: list[int] = []
    for i, nm in enumerate(order):
        # later cylinder variables do not occur, so any placeholder weight works
        partial = WeightFn(vs, base_weights, order, d + [1] * (len(order) - i))
        x = Poly.var(vs, nm)
        best = 1
        for pair in autos:
            for g in pair:
                diff = g.image(nm) - x
                best = max(best, eval_degree(partial, diff))
        d.append(int(best))
    w = WeightFn(vs, base_weights, order, d)
    for a, a_inv in autos:
        ok, bad = is_degree_preserving(a, a_inv, w)
        if not ok:
            raise VerificationError(f"bounding weights postcondition failed: {bad}")
    return w


def preserves(a: Auto, a_inv: Auto, w: WeightFn) -> bool:
    return is_degree_preserving(a, a_inv, w)[0]


def image_degree(a: Auto, f: Poly, w: WeightFn):
    return eval_degree(w, apply_auto(a, f))

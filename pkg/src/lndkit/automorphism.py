"""Polynomial automorphisms as pullback tuples, and the exp/log correspondence.

An ``Auto`` stores a*(x_i) for every non-parameter variable.  ``compose(a, b)``
is "a then b" on points, so its pullback images are a*(b*(x_i)).  For the
usual map composition f∘g use ``circ(f, g)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

from gmpy2 import mpq

from lndkit.derivation import (
    DEFAULT_CAP,
    Deriv,
    IteratedZero,
    Triangular,
    Unknown,
    apply,
    bracket,
    certify_lnd,
)
from lndkit.errors import (
    EvaluationError,
    NotLndError,
    NotTriangularError,
    NotUnipotentError,
    VerificationError,
)
from lndkit.poly import Poly, RatFn, VarSet, Q


class Auto:
    __slots__ = ("varset", "images", "_hash")

    def __init__(self, varset: VarSet, images: Sequence[Poly] | dict):
        if isinstance(images, dict):
            unknown = set(images) - set(varset.names)
            if unknown:
                raise KeyError(f"unknown variables {sorted(unknown)}")
            images = [images.get(nm) or Poly.var(varset, nm) for nm in varset.names]
        images = tuple(images)
        if len(images) != len(varset):
            raise ValueError("need one image per variable")
        for nm, flag, img in zip(varset.names, varset.param_flags, images):
            if img.varset != varset:
                raise ValueError("image lives in a different variable set")
            if flag and img != Poly.var(varset, nm):
                raise ValueError(f"parameter {nm!r} must map to itself")
        self.varset = varset
        self.images = images
        self._hash = None

    @classmethod
    def identity(cls, varset):
        return cls(varset, [Poly.var(varset, nm) for nm in varset.names])

    def image(self, name) -> Poly:
        return self.images[self.varset.index(name)]

    def is_identity(self):
        return all(img == Poly.var(self.varset, nm) for nm, img in zip(self.varset.names, self.images))

    def __eq__(self, other):
        if not isinstance(other, Auto):
            return NotImplemented
        return self.varset == other.varset and self.images == other.images

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.varset, self.images))
        return self._hash

    def specialize(self, values: dict) -> "Auto":
        """Substitute rational values for parameters (they stay in the varset)."""
        vs = self.varset
        subs = [Poly.constant(vs, values[nm]) if nm in values else None for nm in vs.names]
        return Auto(vs, [
            img.substitute(subs) if not flag else img
            for img, flag in zip(self.images, vs.param_flags)
        ])

    def __repr__(self):
        from lndkit.poly import canonical_string

        body = ", ".join(f"{nm} -> {canonical_string(img)}" for nm, img in zip(self.varset.names, self.images))
        return f"Auto({body})"


def apply_auto(a: Auto, f):
    """Pullback a*(f): substitute the images into f."""
    if f.varset != a.varset:
        raise ValueError("automorphism and argument live in different variable sets")
    if isinstance(f, Poly):
        return f.substitute(a.images)
    if isinstance(f, RatFn):
        num = f.num.substitute(a.images)
        den = f.den.substitute(a.images)
        if den.is_zero():
            raise EvaluationError("denominator maps to zero")
        return RatFn(num, den)
    raise TypeError(f"cannot apply an automorphism to {type(f).__name__}")


def compose(a: Auto, b: Auto) -> Auto:
    """a then b on points; pullback images a*(b*(x_i))."""
    if a.varset != b.varset:
        raise ValueError("automorphisms live in different variable sets")
    return Auto(a.varset, [apply_auto(a, img) for img in b.images])


def circ(*maps: Auto) -> Auto:
    """Usual composition of maps: circ(f, g, h) = f∘g∘h (h acts first)."""
    if not maps:
        raise ValueError("need at least one automorphism")
    out = maps[-1]
    for f in reversed(maps[:-1]):
        out = compose(out, f)
    return out


def _require_cert(d: Deriv, cert):
    if cert is None:
        cert = certify_lnd(d)
    if isinstance(cert, Unknown):
        raise NotLndError(f"no LND certificate (cap {cert.cap})")
    if not isinstance(cert, (Triangular, IteratedZero)):
        raise TypeError("expected an LND certificate")
    return cert


def _exp_series(d: Deriv, f: Poly) -> Poly:
    """sum_m d^m(f)/m!, terminating because d is locally nilpotent."""
    acc = f
    term = f
    m = 0
    while True:
        term = apply(d, term)
        if term.is_zero():
            return acc
        m += 1
        acc = acc + term.scale(mpq(1, factorial(m)))


def exp_derivation(d: Deriv, cert=None) -> Auto:
    """exp(d) for a certified locally nilpotent derivation."""
    _require_cert(d, cert)
    vs = d.varset
    return Auto(vs, [
        Poly.var(vs, nm) if flag else _exp_series(d, Poly.var(vs, nm))
        for nm, flag in zip(vs.names, vs.param_flags)
    ])


def one_parameter(d: Deriv, cert=None, t=1) -> Auto:
    """exp(t*d) for a rational t."""
    _require_cert(d, cert)
    t = Q(t)
    if not t:
        return Auto.identity(d.varset)
    return exp_derivation(d.scale(t), cert)


def log_automorphism(a: Auto, cap: int = DEFAULT_CAP) -> Deriv:
    """The LND D with exp(D) == a, via the log series of a* - id on generators.

    Raises NotUnipotentError when a* - id is not nilpotent on some generator
    within cap steps.
    """
    vs = a.varset
    coeffs = []
    for nm, flag in zip(vs.names, vs.param_flags):
        if flag:
            coeffs.append(Poly.zero(vs))
            continue
        x = Poly.var(vs, nm)
        g = x
        acc = Poly.zero(vs)
        for m in range(1, cap + 1):
            g = apply_auto(a, g) - g
            if g.is_zero():
                break
            acc = acc + g.scale(mpq(1 if m % 2 else -1, m))
        else:
            raise NotUnipotentError(f"a* - id is not nilpotent on {nm} within cap", cap)
        coeffs.append(acc)
    result = Deriv(vs, coeffs)
    cert = certify_lnd(result, max(cap, DEFAULT_CAP))
    if isinstance(cert, Unknown) or exp_derivation(result, cert) != a:
        raise VerificationError("log failed to reproduce the automorphism")
    return result


def bch(d1: Deriv, d2: Deriv, cert1=None, cert2=None, cap: int = DEFAULT_CAP) -> Deriv:
    """z with exp(z) == exp(d1)∘exp(d2) as operators, i.e. z = d1 + d2 + [d1,d2]/2 + ..."""
    e1 = exp_derivation(d1, cert1)
    e2 = exp_derivation(d2, cert2)
    target = compose(e1, e2)
    z = log_automorphism(target, cap)
    if exp_derivation(z) != target:
        raise VerificationError("bch postcondition failed")
    return z


@dataclass(frozen=True)
class CommutatorLog:
    log: Deriv
    bracket: Deriv

    @property
    def matches_bracket(self) -> bool:
        return self.log == self.bracket

    @property
    def difference(self) -> Deriv:
        return self.log - self.bracket


def group_commutator_log(d1: Deriv, d2: Deriv, cert1=None, cert2=None, cap: int = DEFAULT_CAP) -> CommutatorLog:
    """log(exp(d1) exp(d2) exp(-d1) exp(-d2)) next to [d1, d2]."""
    c1 = _require_cert(d1, cert1)
    c2 = _require_cert(d2, cert2)
    e1, e2 = exp_derivation(d1, c1), exp_derivation(d2, c2)
    f1, f2 = exp_derivation(-d1, c1), exp_derivation(-d2, c2)
    c = compose(e1, compose(e2, compose(f1, f2)))
    return CommutatorLog(log_automorphism(c, cap), bracket(d1, d2))


def is_unitriangular(a: Auto, order: Sequence[str]) -> bool:
    vs = a.varset
    if sorted(order) != sorted(vs.variables):
        return False
    seen = set(vs.params)
    for nm in order:
        diff = a.image(nm) - Poly.var(vs, nm)
        if not diff.used_names() <= seen:
            return False
        seen.add(nm)
    return True


def triangular_inverse(a: Auto, order: Sequence[str]) -> Auto:
    """Back-substitution inverse of a unitriangular automorphism."""
    order = tuple(order)
    if not is_unitriangular(a, order):
        raise NotTriangularError(f"automorphism is not unitriangular for order {order}")
    vs = a.varset
    inv = [Poly.var(vs, nm) for nm in vs.names]
    for nm in order:
        i = vs.index(nm)
        p = a.images[i] - Poly.var(vs, nm)
        # p only involves earlier variables, whose inverse images are final
        inv[i] = Poly.var(vs, nm) - p.substitute(inv)
    result = Auto(vs, inv)
    if not compose(a, result).is_identity():
        raise VerificationError("triangular inverse failed")
    return result


def automorphism_degree(a: Auto, a_inv: Auto) -> int:
    """max total degree of the images of a and its inverse."""
    if not compose(a, a_inv).is_identity() or not compose(a_inv, a).is_identity():
        raise ValueError("the automorphisms are not mutually inverse")
    vs = a.varset
    return max(
        int(img.total_degree())
        for b in (a, a_inv)
        for img, flag in zip(b.images, vs.param_flags)
        if not flag
    )


def conjugate(tau: Auto, d: Deriv, tau_inv: Auto) -> Deriv:
    """The derivation tau* d (tau*)^-1, so exp of it is tau∘exp(d)∘tau^-1 as pullbacks."""
    vs = d.varset
    return Deriv(vs, [
        Poly.zero(vs) if flag else apply_auto(tau, apply(d, tau_inv.images[i]))
        for i, flag in enumerate(vs.param_flags)
    ])


def unitriangular_order(a: Auto) -> tuple[str, ...] | None:
    """A variable order in which a is unitriangular, or None.

    Same dependency graph as for triangular derivations, built from the
    differences a*(x) - x; ties go to the declared order.
    """
    from lndkit.derivation import triangular_order

    vs = a.varset
    diffs = Deriv(vs, [
        Poly.zero(vs) if flag else img - Poly.var(vs, nm)
        for nm, flag, img in zip(vs.names, vs.param_flags, a.images)
    ])
    return triangular_order(diffs)

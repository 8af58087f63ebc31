"""Exact multivariate polynomials and rational functions over Q.

Polynomials are sparse maps from exponent tuples to nonzero ``gmpy2.mpq``
coefficients.  All values are immutable; every operation returns a new value.
The single monomial order is graded lex in the declared variable order.
"""

from __future__ import annotations

import itertools
import math
import operator
import re
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
from gmpy2 import mpq

from lndkit.errors import EvaluationError

NEG_INF = float("-inf")

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

# products with at least this many term pairs go through the grouped kernel
KERNEL_THRESHOLD = 400


def Q(value) -> mpq:
    """Coerce an int, Fraction, mpq or "p/q" string to mpq."""
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        return mpq(Fraction(value.strip()))
    return mpq(value)


def _glex_key(e):
    return (sum(e), e)


class VarSet:
    """Ordered variable names; some may be flagged as parameters."""

    __slots__ = ("names", "param_flags", "_index", "_hash")

    def __init__(self, names: Iterable[str], params: Iterable[str] = ()):
        names = tuple(names)
        params = set(params)
        if not names:
            raise ValueError("a VarSet needs at least one variable")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        for nm in names:
            if not _IDENT.match(nm):
                raise ValueError(f"invalid variable name {nm!r}")
        unknown = params - set(names)
        if unknown:
            raise ValueError(f"parameters {sorted(unknown)} are not variables")
        self.names = names
        self.param_flags = tuple(nm in params for nm in names)
        self._index = {nm: i for i, nm in enumerate(names)}
        self._hash = hash((names, self.param_flags))

    @classmethod
    def of(cls, variables, params=()):
        """Variables first, then parameters, in the given orders."""
        return cls(list(variables) + [p for p in params if p not in variables], params)

    def __len__(self):
        return len(self.names)

    def __eq__(self, other):
        return (
            isinstance(other, VarSet)
            and self.names == other.names
            and self.param_flags == other.param_flags
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        ps = self.params
        return f"VarSet({list(self.names)!r}, params={list(ps)!r})" if ps else f"VarSet({list(self.names)!r})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def __contains__(self, name):
        return name in self._index

    @property
    def params(self):
        return tuple(n for n, f in zip(self.names, self.param_flags) if f)

    @property
    def variables(self):
        """Non-parameter names."""
        return tuple(n for n, f in zip(self.names, self.param_flags) if not f)

    @property
    def var_indices(self):
        return tuple(i for i, f in enumerate(self.param_flags) if not f)

    def with_params(self, extra: Iterable[str]) -> "VarSet":
        extra = [p for p in extra if p not in self._index]
        return VarSet(self.names + tuple(extra), set(self.params) | set(extra))


class Poly:
    __slots__ = ("varset", "terms", "_hash")

    def __init__(self, varset: VarSet, terms=None, *, _clean=False):
        self.varset = varset
        if terms is None:
            terms = {}
        elif not _clean:
            n = len(varset)
            cleaned = {}
            for e, c in terms.items():
                e = tuple(int(x) for x in e)
                if len(e) != n or min(e, default=0) < 0:
                    raise ValueError(f"bad exponent vector {e} for {varset!r}")
                c = Q(c)
                if c:
                    cleaned[e] = cleaned.get(e, 0) + c
            terms = {e: c for e, c in cleaned.items() if c}
        self.terms = terms
        self._hash = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, varset):
        return cls(varset, {}, _clean=True)

    @classmethod
    def constant(cls, varset, c):
        c = Q(c)
        return cls(varset, {(0,) * len(varset): c} if c else {}, _clean=True)

    @classmethod
    def one(cls, varset):
        return cls.constant(varset, 1)

    @classmethod
    def var(cls, varset, name):
        e = [0] * len(varset)
        e[varset.index(name)] = 1
        return cls(varset, {tuple(e): mpq(1)}, _clean=True)

    @classmethod
    def monomial(cls, varset, exps, c=1):
        return cls(varset, {tuple(exps): Q(c)})

    # -- basic queries ------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_value(self) -> mpq:
        if not self.is_constant():
            raise ValueError("not a constant polynomial")
        return next(iter(self.terms.values())) if self.terms else mpq(0)

    def __len__(self):
        return len(self.terms)

    def total_degree(self):
        if not self.terms:
            return NEG_INF
        return max(sum(e) for e in self.terms)

    def degree_in(self, i: int) -> int:
        """Degree in variable index i (-1 for the zero polynomial)."""
        return max((e[i] for e in self.terms), default=-1)

    def used_indices(self):
        used = set()
        for e in self.terms:
            used.update(i for i, x in enumerate(e) if x)
        return used

    def used_names(self):
        return {self.varset.names[i] for i in self.used_indices()}

    def leading(self):
        """(exponent, coefficient) of the graded-lex leading term."""
        e = max(self.terms, key=_glex_key)
        return e, self.terms[e]

    def leading_coefficient(self) -> mpq:
        return self.leading()[1] if self.terms else mpq(0)

    def sorted_terms(self):
        """Terms in descending graded-lex order."""
        return sorted(self.terms.items(), key=lambda t: _glex_key(t[0]), reverse=True)

    # -- equality and hashing -------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.varset == other.varset and self.terms == other.terms
        if isinstance(other, RatFn):
            return other.den.is_one() and other.num == self
        if isinstance(other, (int, Fraction, type(mpq(0)))):
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.varset, frozenset(self.terms.items())))
        return self._hash

    def is_one(self):
        return len(self.terms) == 1 and self.terms.get((0,) * len(self.varset)) == 1

    # -- arithmetic -----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.varset != self.varset:
                raise ValueError("polynomials live in different variable sets")
            return other
        if isinstance(other, (int, Fraction, type(mpq(0)))):
            return Poly.constant(self.varset, other)
        return None

    def __neg__(self):
        return Poly(self.varset, {e: -c for e, c in self.terms.items()}, _clean=True)

    def __add__(self, other):
        if isinstance(other, RatFn):
            return NotImplemented
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if len(other.terms) > len(self.terms):
            big, small = other.terms, self.terms
        else:
            big, small = self.terms, other.terms
        out = dict(big)
        for e, c in small.items():
            s = out.get(e)
            if s is None:
                out[e] = c
            else:
                s = s + c
                if s:
                    out[e] = s
                else:
                    del out[e]
        return Poly(self.varset, out, _clean=True)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RatFn):
            return NotImplemented
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def scale(self, c) -> "Poly":
        c = Q(c)
        if not c:
            return Poly.zero(self.varset)
        return Poly(self.varset, {e: v * c for e, v in self.terms.items()}, _clean=True)

    def __mul__(self, other):
        if isinstance(other, RatFn):
            return NotImplemented
        if not isinstance(other, Poly):
            if isinstance(other, (int, Fraction, type(mpq(0)))):
                return self.scale(other)
            return NotImplemented
        if other.varset != self.varset:
            raise ValueError("polynomials live in different variable sets")
        return Poly(self.varset, _mul_terms(self.terms, other.terms), _clean=True)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers need a nonnegative integer exponent")
        result = Poly.one(self.varset)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, type(mpq(0)))):
            other = Q(other)
            if not other:
                raise ZeroDivisionError("division by zero")
            return self.scale(1 / other)
        if isinstance(other, (Poly, RatFn)):
            return RatFn.of(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction, type(mpq(0)))):
            return RatFn(Poly.constant(self.varset, other), self)
        return NotImplemented

    def diff(self, i: int) -> "Poly":
        """Partial derivative in variable index i."""
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                e2 = e[:i] + (k - 1,) + e[i + 1:]
                out[e2] = c * k
        return Poly(self.varset, out, _clean=True)

    def monic(self) -> "Poly":
        """Scale so the graded-lex leading coefficient is 1 (zero stays zero)."""
        if not self.terms:
            return self
        lc = self.leading()[1]
        return self if lc == 1 else self.scale(1 / lc)

    def denominator_lcm(self) -> int:
        den = 1
        for c in self.terms.values():
            d = int(c.denominator)
            den = den * d // math.gcd(den, d)
        return den

    def substitute(self, images) -> "Poly":
        """Replace variable i by images[i] (a Poly, possibly in another varset).

        ``images`` may be a sequence indexed like the varset; entries that are
        None keep the variable (which requires the target varset to be ours).
        """
        images = list(images)
        target = next((p.varset for p in images if p is not None), self.varset)
        imgs = [Poly.var(target, self.varset.names[i]) if p is None else p for i, p in enumerate(images)]
        cache = [dict() for _ in imgs]

        def power(i, k):
            got = cache[i].get(k)
            if got is None:
                if k == 1:
                    got = imgs[i]
                elif k % 2 == 0:
                    h = power(i, k // 2)
                    got = h * h
                else:
                    got = power(i, k - 1) * imgs[i]
                cache[i][k] = got
            return got

        def rec(terms, start):
            # terms: dict exponent -> coeff, with exponents before `start` zero
            n = len(imgs)
            j = start
            while j < n and not any(e[j] for e in terms):
                j += 1
            if j == n:
                c = sum(terms.values(), mpq(0))
                return Poly.constant(target, c)
            groups = {}
            for e, c in terms.items():
                k = e[j]
                groups.setdefault(k, {})[e[:j] + (0,) + e[j + 1:]] = c
            acc = Poly.zero(target)
            for k, sub in groups.items():
                part = rec(sub, j + 1)
                if k:
                    part = part * power(j, k)
                acc = acc + part
            return acc

        if not self.terms:
            return Poly.zero(target)
        return rec(self.terms, 0)

    def embed(self, varset: VarSet) -> "Poly":
        """Re-express in a varset containing all used variable names."""
        if varset == self.varset:
            return self
        pos = []
        for nm in self.varset.names:
            pos.append(varset.index(nm) if nm in varset else None)
        n = len(varset)
        out = {}
        for e, c in self.terms.items():
            e2 = [0] * n
            for i, k in enumerate(e):
                if k:
                    if pos[i] is None:
                        raise ValueError(f"variable {self.varset.names[i]!r} missing from target varset")
                    e2[pos[i]] = k
            out[tuple(e2)] = c
        return Poly(varset, out, _clean=True)

    # -- printing -------------------------------------------------------------

    def __str__(self):
        return canonical_string(self)

    def __repr__(self):
        return f"Poly({canonical_string(self)!r})"


def _mul_terms(a: dict, b: dict) -> dict:
    if not a or not b:
        return {}
    if len(a) < len(b):
        a, b = b, a
    if len(b) == 1:
        (eb, cb), = b.items()
        if not any(eb):
            return {e: c * cb for e, c in a.items()}
        return {tuple(map(operator.add, e, eb)): c * cb for e, c in a.items()}
    if len(a) * len(b) >= KERNEL_THRESHOLD:
        out = _mul_terms_kernel(a, b)
        if out is not None:
            return out
    out = {}
    add = operator.add
    get = out.get
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(map(add, ea, eb))
            s = get(e)
            out[e] = ca * cb if s is None else s + ca * cb
    return {e: c for e, c in out.items() if c}


def _mul_terms_kernel(a: dict, b: dict):
    from lndkit import _kernels

    ea = np.array(list(a.keys()), dtype=np.int64)
    eb = np.array(list(b.keys()), dtype=np.int64)
    radix = ea.max(axis=0) + eb.max(axis=0) + 1
    total = 1
    for r in radix.tolist():
        total *= r
    if total >= _kernels.KEY_LIMIT:
        return None
    strides = np.ones(len(radix), dtype=np.int64)
    for i in range(len(radix) - 2, -1, -1):
        strides[i] = strides[i + 1] * radix[i + 1]
    order, starts, uniq = _kernels.group_product_keys(ea @ strides, eb @ strides)
    ca = np.empty(len(a), dtype=object)
    ca[:] = list(a.values())
    cb = np.empty(len(b), dtype=object)
    cb[:] = list(b.values())
    prods = np.multiply.outer(ca, cb).ravel()[order]
    sums = np.add.reduceat(prods, starts)
    exps = (uniq[:, None] // strides[None, :]) % radix[None, :]
    return {tuple(e): c for e, c in zip(exps.tolist(), sums.tolist()) if c}


# ---------------------------------------------------------------------------
# exact division and gcd


def divide_exact(p: Poly, q: Poly) -> Poly:
    """Return p / q, raising ValueError if q does not divide p."""
    if q.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if q.is_constant():
        return p.scale(1 / q.constant_value())
    quot = _divide_terms(p.terms, q.terms)
    if quot is None:
        raise ValueError("inexact polynomial division")
    return Poly(p.varset, quot, _clean=True)


def _divide_terms(a: dict, b: dict):
    """Exact quotient a / b on term dicts, or None when b does not divide a."""
    eb = max(b, key=_glex_key)
    cb = b[eb]
    rest = [(e, c) for e, c in b.items() if e != eb]
    r = dict(a)
    quot = {}
    while r:
        er = max(r, key=_glex_key)
        diff = tuple(x - y for x, y in zip(er, eb))
        if min(diff) < 0:
            return None
        c = r.pop(er) / cb
        quot[diff] = c
        for e, cq in rest:
            k = tuple(x + y for x, y in zip(e, diff))
            v = r.get(k, 0) - c * cq
            if v:
                r[k] = v
            else:
                r.pop(k, None)
    return quot


def _coeffs_in(p: Poly, i: int) -> dict:
    """Split p = sum_k c_k * x_i^k; returns {k: c_k} with c_k free of x_i."""
    groups = {}
    for e, c in p.terms.items():
        k = e[i]
        groups.setdefault(k, {})[e[:i] + (0,) + e[i + 1:]] = c
    return {k: Poly(p.varset, t, _clean=True) for k, t in groups.items()}


def _lc_in(p: Poly, i: int) -> Poly:
    d = p.degree_in(i)
    return Poly(p.varset, {e[:i] + (0,) + e[i + 1:]: c for e, c in p.terms.items() if e[i] == d}, _clean=True)


def _shift(p: Poly, i: int, k: int) -> Poly:
    if k == 0:
        return p
    return Poly(p.varset, {e[:i] + (e[i] + k,) + e[i + 1:]: c for e, c in p.terms.items()}, _clean=True)


def _prem(a: Poly, b: Poly, i: int) -> Poly:
    """Pseudo-remainder lc(b)^(deg a - deg b + 1) * a mod b, in variable i."""
    db = b.degree_in(i)
    lb = _lc_in(b, i)
    e = a.degree_in(i) - db + 1
    r = a
    while r.terms and r.degree_in(i) >= db:
        t = _shift(_lc_in(r, i), i, r.degree_in(i) - db)
        r = lb * r - t * b
        e -= 1
    return r * (lb ** e) if e > 0 else r


def _content_in(p: Poly, i: int) -> Poly:
    g = None
    for c in sorted(_coeffs_in(p, i).values(), key=len):
        g = c.monic() if g is None else _gcd(g, c)
        if g.is_constant():
            return Poly.one(p.varset)
    return g


def _primitive_in(p: Poly, i: int) -> Poly:
    c = _content_in(p, i)
    return p if c.is_one() else divide_exact(p, c)


def _int_terms(p: Poly) -> dict:
    """Primitive integer multiple of p as {exponent: int}."""
    den = 1
    for c in p.terms.values():
        den = den * int(c.denominator) // math.gcd(den, int(c.denominator))
    ints = {e: int(c * den) for e, c in p.terms.items()}
    g = 0
    for c in ints.values():
        g = math.gcd(g, c)
    return {e: c // g for e, c in ints.items()}


def _eval_int(t: dict, i: int, xi: int) -> dict:
    out = {}
    for e, c in t.items():
        k = e[:i] + (0,) + e[i + 1:]
        v = out.get(k, 0) + c * xi ** e[i]
        if v:
            out[k] = v
        else:
            out.pop(k, None)
    return out


def _xi_adic(t: dict, i: int, xi: int) -> dict:
    """Rebuild a polynomial in x_i from its image at x_i = xi (symmetric digits)."""
    out = {}
    half = xi // 2
    power = 0
    cur = dict(t)
    while cur:
        nxt = {}
        for e, c in cur.items():
            digit = c % xi
            if digit > half:
                digit -= xi
            if digit:
                out[e[:i] + (power,) + e[i + 1:]] = digit
            rest = (c - digit) // xi
            if rest:
                nxt[e] = rest
        cur = nxt
        power += 1
    return out


def _heu_gcd(f: dict, g: dict, idx: tuple):
    """Heuristic gcd of integer polynomials in the variables idx, or None.

    Evaluates the last variable at a large integer, recurses, rebuilds the
    candidate by xi-adic expansion and accepts it only after trial division.
    """
    if not idx:
        (ef, cf), = f.items()
        (_, cg), = g.items()
        return {ef: math.gcd(cf, cg)}
    # the common integer content is content in the outer variables; keep it aside
    common = 0
    for c in itertools.chain(f.values(), g.values()):
        common = math.gcd(common, c)
    if common != 1:
        f = {e: c // common for e, c in f.items()}
        g = {e: c // common for e, c in g.items()}
    i, rest = idx[-1], idx[:-1]
    norm = min(max(abs(c) for c in f.values()), max(abs(c) for c in g.values()))
    xi = 2 * norm + 29
    for _ in range(6):
        ff, gg = _eval_int(f, i, xi), _eval_int(g, i, xi)
        if ff and gg:
            h = _heu_gcd(ff, gg, rest)
            if h is not None:
                cand = _xi_adic(h, i, xi)
                if cand:
                    cont = 0
                    for c in cand.values():
                        cont = math.gcd(cont, c)
                    cand = {e: c // cont for e, c in cand.items()}
                    if _divides_int(cand, f) and _divides_int(cand, g):
                        return {e: c * common for e, c in cand.items()}
        xi = xi * 73794 // 27011
    return None


def _divides_int(h: dict, f: dict) -> bool:
    eh = max(h, key=_glex_key)
    ef = max(f, key=_glex_key)
    if any(a > b for a, b in zip(eh, ef)):
        return False
    qh = {e: mpq(c) for e, c in h.items()}
    return _divide_terms({e: mpq(c) for e, c in f.items()}, qh) is not None


def _monomial_gcd(m: Poly, p: Poly) -> Poly:
    (em, _), = m.terms.items()
    low = list(em)
    for e in p.terms:
        low = [min(a, b) for a, b in zip(low, e)]
    return Poly(m.varset, {tuple(low): mpq(1)}, _clean=True)


def _gcd(p: Poly, q: Poly) -> Poly:
    if p.is_zero():
        return q.monic()
    if q.is_zero():
        return p.monic()
    if p.is_constant() or q.is_constant():
        return Poly.one(p.varset)
    if p == q:
        return p.monic()
    if len(p) == 1:
        return _monomial_gcd(p, q)
    if len(q) == 1:
        return _monomial_gcd(q, p)
    idx = tuple(sorted(p.used_indices() | q.used_indices()))
    h = _heu_gcd(_int_terms(p), _int_terms(q), idx)
    if h is not None:
        return Poly(p.varset, {e: mpq(c) for e, c in h.items()}, _clean=True).monic()
    return _gcd_subresultant(p, q)


def _gcd_subresultant(p: Poly, q: Poly) -> Poly:
    if p.is_zero():
        return q.monic()
    if q.is_zero():
        return p.monic()
    if p.is_constant() or q.is_constant():
        return Poly.one(p.varset)
    if p == q:
        return p.monic()
    up, uq = p.used_indices(), q.used_indices()
    i = min(up | uq)
    if i not in uq:
        return _gcd(_content_in(p, i), q)
    if i not in up:
        return _gcd(p, _content_in(q, i))
    cp, cq = _content_in(p, i), _content_in(q, i)
    a = p if cp.is_one() else divide_exact(p, cp)
    b = q if cq.is_one() else divide_exact(q, cq)
    c = _gcd(cp, cq)
    if a.degree_in(i) < b.degree_in(i):
        a, b = b, a
    # subresultant remainder sequence
    vs = p.varset
    g = h = Poly.one(vs)
    while True:
        delta = a.degree_in(i) - b.degree_in(i)
        r = _prem(a, b, i)
        if r.is_zero():
            break
        if r.degree_in(i) == 0:
            return c.monic()
        a, b = b, divide_exact(r, g * h ** delta)
        g = _lc_in(a, i)
        if delta == 1:
            h = g
        elif delta > 1:
            h = divide_exact(g ** delta, h ** (delta - 1))
    return (c * _primitive_in(b, i)).monic()


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Greatest common divisor, normalized to graded-lex leading coefficient 1.

    gcd(0, 0) is 0.
    """
    if p.varset != q.varset:
        raise ValueError("polynomials live in different variable sets")
    return _gcd(p, q)


# ---------------------------------------------------------------------------
# rational functions


class RatFn:
    """Reduced quotient num/den with den monic in graded lex."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: Poly | None = None, *, reduced=False):
        if den is None:
            den = Poly.one(num.varset)
        if den.varset != num.varset:
            raise ValueError("numerator and denominator live in different variable sets")
        if den.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if not reduced:
            if num.is_zero():
                den = Poly.one(num.varset)
            elif not den.is_constant():
                g = _gcd(num, den)
                if not g.is_one():
                    num = divide_exact(num, g)
                    den = divide_exact(den, g)
            lc = den.leading()[1]
            if lc != 1:
                num = num.scale(1 / lc)
                den = den.scale(1 / lc)
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def of(cls, value, varset=None) -> "RatFn":
        if isinstance(value, RatFn):
            return value
        if isinstance(value, Poly):
            return cls(value, Poly.one(value.varset), reduced=True)
        if varset is None:
            raise ValueError("a varset is needed to lift a scalar")
        return cls(Poly.constant(varset, value), reduced=True)

    @property
    def varset(self):
        return self.num.varset

    def is_polynomial(self):
        return self.den.is_one()

    def to_poly(self) -> Poly:
        if not self.den.is_one():
            raise ValueError(f"{canonical_string(self)} is not a polynomial")
        return self.num

    def is_zero(self):
        return self.num.is_zero()

    def __bool__(self):
        return bool(self.num)

    def is_constant(self):
        return self.den.is_one() and self.num.is_constant()

    def __eq__(self, other):
        if isinstance(other, RatFn):
            return self.num == other.num and self.den == other.den
        if isinstance(other, Poly):
            return self.den.is_one() and self.num == other
        if isinstance(other, (int, Fraction, type(mpq(0)))):
            return self.den.is_one() and self.num == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.num) if self.den.is_one() else hash((self.num, self.den))
        return self._hash

    def _coerce(self, other):
        if isinstance(other, RatFn):
            if other.varset != self.varset:
                raise ValueError("rational functions live in different variable sets")
            return other
        if isinstance(other, Poly):
            if other.varset != self.varset:
                raise ValueError("rational functions live in different variable sets")
            return RatFn(other, Poly.one(self.varset), reduced=True)
        if isinstance(other, (int, Fraction, type(mpq(0)))):
            return RatFn(Poly.constant(self.varset, other), Poly.one(self.varset), reduced=True)
        return None

    def __neg__(self):
        return RatFn(-self.num, self.den, reduced=True)

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.den == other.den:
            return RatFn(self.num + other.num, self.den)
        if other.den.is_one():
            return RatFn(self.num + other.num * self.den, self.den, reduced=True)
        if self.den.is_one():
            return RatFn(self.num * other.den + other.num, other.den, reduced=True)
        g = _gcd(self.den, other.den)
        da = divide_exact(self.den, g)
        db = divide_exact(other.den, g)
        return RatFn(self.num * db + other.num * da, da * other.den)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.den.is_one() and other.den.is_one():
            return RatFn(self.num * other.num, self.den, reduced=True)
        # cross-cancel to keep factors small
        g1 = _gcd(self.num, other.den)
        g2 = _gcd(other.num, self.den)
        n1 = divide_exact(self.num, g1) if not g1.is_one() else self.num
        d2 = divide_exact(other.den, g1) if not g1.is_one() else other.den
        n2 = divide_exact(other.num, g2) if not g2.is_one() else other.num
        d1 = divide_exact(self.den, g2) if not g2.is_one() else self.den
        return RatFn(n1 * n2, d1 * d2, reduced=False)

    __rmul__ = __mul__

    def inverse(self) -> "RatFn":
        if self.num.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        return RatFn(self.den, self.num, reduced=False)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("rational function powers need a nonnegative integer exponent")
        return RatFn(self.num ** k, self.den ** k, reduced=True)

    def __str__(self):
        return canonical_string(self)

    def __repr__(self):
        return f"RatFn({canonical_string(self)!r})"


def as_ratfn(value, varset=None) -> RatFn:
    return RatFn.of(value, varset)


def simplify(value):
    """RatFn with denominator 1 becomes Poly; anything else passes through."""
    if isinstance(value, RatFn) and value.den.is_one():
        return value.num
    return value


# ---------------------------------------------------------------------------
# printing


def _format_monomial(names, e):
    parts = []
    for nm, k in zip(names, e):
        if k == 1:
            parts.append(nm)
        elif k > 1:
            parts.append(f"{nm}^{k}")
    return "*".join(parts)


def _format_poly(p: Poly) -> str:
    if not p.terms:
        return "0"
    names = p.varset.names
    out = []
    for idx, (e, c) in enumerate(p.sorted_terms()):
        neg = c < 0
        a = -c if neg else c
        mono = _format_monomial(names, e)
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        if idx == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


def canonical_string(v) -> str:
    """Deterministic text form: descending graded lex, reduced coefficients."""
    if isinstance(v, Poly):
        return _format_poly(v)
    if isinstance(v, RatFn):
        num = _format_poly(v.num)
        if v.den.is_one():
            return num
        if len(v.num) > 1:
            num = f"({num})"
        den = _format_poly(v.den)
        if len(v.den) > 1 or sum(1 for k in next(iter(v.den.terms)) if k) > 1:
            den = f"({den})"
        return f"{num}/{den}"
    raise TypeError(f"cannot print {type(v).__name__}")


# ---------------------------------------------------------------------------
# evaluation and degrees


def evaluate_at(v, point: Mapping[str, object]) -> mpq:
    """Exact value of a Poly or RatFn at a rational point.

    Raises EvaluationError when a denominator vanishes.
    """
    if isinstance(v, RatFn):
        d = evaluate_at(v.den, point)
        if not d:
            raise EvaluationError("denominator vanishes at point")
        return evaluate_at(v.num, point) / d
    vals = []
    for i, nm in enumerate(v.varset.names):
        if nm in point:
            vals.append(Q(point[nm]))
        else:
            vals.append(None)
    total = mpq(0)
    for e, c in v.terms.items():
        term = c
        for i, k in enumerate(e):
            if k:
                if vals[i] is None:
                    raise KeyError(f"point does not assign {v.varset.names[i]!r}")
                term *= vals[i] ** k
        total += term
    return total


def weighted_total_degree(p: Poly, weights: Mapping[str, int]):
    """max over terms of the weighted exponent sum; -inf for the zero polynomial."""
    if not p.terms:
        return NEG_INF
    names = p.varset.names
    used = p.used_indices()
    missing = [names[i] for i in used if names[i] not in weights]
    if missing:
        raise KeyError(f"no weight for variables {missing}")
    w = [int(weights.get(nm, 0)) for nm in names]
    if len(p.terms) < 64:
        return max(sum(k * wi for k, wi in zip(e, w)) for e in p.terms)
    from lndkit import _kernels

    exps = np.array(list(p.terms.keys()), dtype=np.int64)
    return int(_kernels.weighted_max(exps, np.array(w, dtype=np.int64)))

import random

import pytest
from gmpy2 import mpq

from lndkit.automorphism import (
    Auto,
    apply_auto,
    automorphism_degree,
    bch,
    circ,
    compose,
    conjugate,
    exp_derivation,
    group_commutator_log,
    is_unitriangular,
    log_automorphism,
    one_parameter,
    triangular_inverse,
    unitriangular_order,
)
from lndkit.derivation import Deriv, Unknown, bracket
from lndkit.errors import NotLndError, NotTriangularError, NotUnipotentError
from lndkit.parser import parse_poly
from lndkit.poly import Poly, VarSet

from randgen import random_triangular

VS = VarSet(["x", "y", "z"])
VS5 = VarSet.of(["x1", "x2", "x3", "x4", "x5"], ["t"])


def P(s, vs=VS):
    return parse_poly(s, vs)


def A(vs=VS, **images):
    return Auto(vs, {k: P(v, vs) for k, v in images.items()})


def D(vs=VS, **coeffs):
    return Deriv(vs, {k: P(v, vs) for k, v in coeffs.items()})


def example_lnd(vs=VS5):
    return D(vs, x2="x1^2", x3="x1^2", x4="x3", x5="x2 - x4")


def test_compose_is_pullback_order():
    a = A(y="y + x")
    b = A(x="x + 1")
    ab = compose(a, b)
    # pullback images a*(b*(x_i))
    assert ab.image("x") == P("x + 1")
    assert ab.image("y") == P("y + x")
    f = P("x*y")
    assert apply_auto(ab, f) == apply_auto(a, apply_auto(b, f))
    assert circ(b, a) == ab


@pytest.mark.parametrize("seed", range(10))
def test_compose_associative(seed):
    rng = random.Random(seed)
    maps = [exp_derivation(random_triangular(rng, 3)) for _ in range(3)]
    vs = maps[0].varset
    maps = [m if m.varset == vs else Auto.identity(vs) for m in maps]
    a, b, c = maps
    assert compose(compose(a, b), c) == compose(a, compose(b, c))
    assert circ(a, b, c) == circ(circ(a, b), c)


def test_example_images():
    h = exp_derivation(example_lnd().scale(Poly.var(VS5, "t")))
    assert h.image("x4") == P("x4 + t*x3 + t^2/2*x1^2", VS5)
    assert h.image("x5") == P("x5 + t*(x2-x4) + t^2/2*(x1^2-x3) - t^3/6*x1^2", VS5)
    assert h.specialize({"t": 3}).image("x5").total_degree() == 1
    two = h.specialize({"t": 2})
    assert apply_auto(two, P("x2 - x4", VS5)) == P("x2 - x4 - 2*x3", VS5)


def test_example_factorization_as_map_composition():
    t = Poly.var(VS5, "t")
    h = exp_derivation(example_lnd().scale(t))
    h2 = exp_derivation(D(VS5, x2="t*x1^2"))
    h3 = exp_derivation(D(VS5, x3="t*x1^2"))
    h4 = exp_derivation(D(VS5, x4="t*x3 + t^2/2*x1^2"))
    h5 = exp_derivation(D(VS5, x5="t*(x2-x4) + t^2/2*(x1^2-x3) - t^3/6*x1^2"))
    assert circ(h2, h3, h4, h5) == h
    # the pullback-order nesting describes the reversed product
    assert compose(h5, compose(h4, compose(h3, h2))) == h


def test_one_parameter_group_law():
    d = example_lnd(VarSet(["x1", "x2", "x3", "x4", "x5"]))
    for s, t in ((1, 2), (mpq(1, 2), mpq(-3, 4)), (0, 5)):
        assert compose(one_parameter(d, t=s), one_parameter(d, t=t)) == one_parameter(d, t=s + t)
    assert one_parameter(d, t=0).is_identity()


@pytest.mark.parametrize("seed", range(20))
def test_exp_log_round_trip(seed):
    d = random_triangular(random.Random(seed))
    e = exp_derivation(d)
    assert log_automorphism(e) == d
    assert compose(e, exp_derivation(-d)).is_identity()


def test_log_rejects_non_unipotent():
    with pytest.raises(NotUnipotentError):
        log_automorphism(A(x="2*x"), cap=10)
    with pytest.raises(NotLndError):
        exp_derivation(D(x="x"), Unknown(8))


def test_commuting_exp_is_additive():
    d1, d2 = D(y="x"), D(z="x^2")
    assert compose(exp_derivation(d1), exp_derivation(d2)) == exp_derivation(d1 + d2)
    assert bch(d1, d2) == d1 + d2


def test_bch_low_order_terms():
    d1, d2 = D(y="x"), D(z="y")
    z = bch(d1, d2)
    b = bracket(d1, d2)
    # step-two nilpotent pair: exactly d1 + d2 + [d1, d2]/2
    assert z == d1 + d2 + b.scale(mpq(1, 2))
    assert exp_derivation(z) == compose(exp_derivation(d1), exp_derivation(d2))


def test_group_commutator_log_reported():
    d1, d2 = D(y="x"), D(z="y")
    r = group_commutator_log(d1, d2)
    assert r.bracket == bracket(d1, d2)
    # step two: exp(d1)exp(d2)exp(-d1)exp(-d2) = exp([d1, d2]) as operators
    assert r.matches_bracket
    assert r.difference == r.log - r.bracket


def test_triangular_inverse_and_order():
    a = A(x="x", y="y + x^2", z="z + x*y")
    order = unitriangular_order(a)
    assert order == ("x", "y", "z")
    assert is_unitriangular(a, order)
    inv = triangular_inverse(a, order)
    assert compose(a, inv).is_identity() and compose(inv, a).is_identity()
    with pytest.raises(NotTriangularError):
        triangular_inverse(a, ("z", "y", "x"))
    assert unitriangular_order(A(x="x + y", y="y + x")) is None


def test_automorphism_degree_nagata():
    f = P("x*z - y^2")
    n = D(y="x", z="2*y").scale(f)
    nu = exp_derivation(n)
    assert automorphism_degree(nu, exp_derivation(-n)) == 5
    with pytest.raises(ValueError):
        automorphism_degree(nu, nu)


def test_parameters_fixed():
    vs = VarSet.of(["x"], ["t"])
    with pytest.raises(ValueError):
        Auto(vs, {"t": Poly.var(vs, "x")})


@pytest.mark.parametrize("seed", range(10))
def test_conjugation_equivariance(seed):
    rng = random.Random(seed)
    d = random_triangular(rng, 3, max_deg=2)
    tau = exp_derivation(random_triangular(random.Random(seed + 99), 3, max_deg=2))
    tau_inv = exp_derivation(log_automorphism(tau).scale(-1))
    c = conjugate(tau, d, tau_inv)
    lhs = exp_derivation(c)
    # operator identity tau* exp(d)* (tau*)^-1, and compose(a, b)* = a* b*
    rhs = compose(tau, compose(exp_derivation(d), tau_inv))
    assert lhs == rhs


def test_group_commutator_log_beyond_step_two():
    # three-step chain: the log picks up higher brackets and is only reported
    d1, d2 = D(y="x", z="y"), D(z="x")
    r = group_commutator_log(d1, d2)
    assert exp_derivation(r.log) == compose(
        exp_derivation(d1), compose(exp_derivation(d2), compose(exp_derivation(-d1), exp_derivation(-d2))))

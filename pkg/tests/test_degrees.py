import random

import pytest

from lndkit.automorphism import Auto, compose, exp_derivation, triangular_inverse
from lndkit.degrees import (
    DegreeViolation,
    WeightFn,
    bounding_weights,
    eval_degree,
    image_degree,
    is_degree_preserving,
    preserves,
)
from lndkit.derivation import Deriv
from lndkit.errors import NotTriangularError
from lndkit.parser import parse_poly
from lndkit.poly import NEG_INF, Poly, VarSet

from randgen import random_poly

XY = VarSet(["x", "y"])
XYZ = VarSet(["x", "y", "z"])
X5 = VarSet(["x1", "x2", "x3", "x4", "x5"])


def P(s, vs=XY):
    return parse_poly(s, vs)


def A(vs=XY, **images):
    return Auto(vs, {k: P(v, vs) for k, v in images.items()})


def shear():
    return A(y="y + x^2"), A(y="y - x^2")


def example_factors():
    """h_2(1)..h_5(1) with their inverses, plus h(1) itself."""
    coeffs = {"x2": "x1^2", "x3": "x1^2", "x4": "x3 + 1/2*x1^2", "x5": "x2 - x4 + 1/2*(x1^2 - x3) - 1/6*x1^2"}
    pairs = []
    for nm, c in coeffs.items():
        d = Deriv(X5, {nm: P(c, X5)})
        pairs.append((exp_derivation(d), exp_derivation(d.scale(-1))))
    lnd = Deriv(X5, {nm: P(c, X5) for nm, c in
                     {"x2": "x1^2", "x3": "x1^2", "x4": "x3", "x5": "x2 - x4"}.items()})
    pairs.append((exp_derivation(lnd), exp_derivation(lnd.scale(-1))))
    return pairs


def test_eval_degree_examples():
    w = WeightFn(XY, {"x": 1}, ["y"], [2])
    assert eval_degree(w, P("1")) == 0
    assert eval_degree(w, P("y + x^2")) == 2
    assert eval_degree(w, P("0")) == NEG_INF
    assert eval_degree(w, P("x*y^3")) == 7


def test_weights_validation():
    with pytest.raises(ValueError):
        WeightFn(XY, None, ["y"], [0])
    with pytest.raises(ValueError):
        WeightFn(XY, {"y": 2}, ["y"], [1])
    with pytest.raises(ValueError):
        WeightFn(XY, None, ["w"], [1])
    vs = VarSet.of(["x", "y"], ["t"])
    w = WeightFn(vs, None, ["y"], [3])
    assert w.weights() == {"x": 1, "y": 3, "t": 0}
    assert eval_degree(w, Poly.var(vs, "t") ** 5) == 0


def test_preservation_examples():
    a, a_inv = shear()
    ident = Auto.identity(XY)
    assert is_degree_preserving(ident, ident, WeightFn(XY, None, ["y"], [1])) == (True, None)
    assert is_degree_preserving(a, a_inv, WeightFn(XY, {"x": 1}, ["y"], [2]))[0]
    ok, bad = is_degree_preserving(a, a_inv, WeightFn(XY, {"x": 1}, ["y"], [1]))
    assert not ok
    assert bad == DegreeViolation("y", 2, 1, False)
    assert str(bad) == "y: 2 > 1"


def test_inverse_violation_is_flagged():
    # forward map preserves, inverse does not
    a = A(y="y")
    bad_inv = A(y="y + x^3")
    ok, v = is_degree_preserving(a, bad_inv, WeightFn(XY, None, ["y"], [2]))
    assert not ok and v.inverse and str(v) == "inverse y: 3 > 2"


def test_bounding_weights_examples():
    assert bounding_weights([shear()], ["y"]).d == (2,)
    ident = Auto.identity(XYZ)
    assert bounding_weights([(ident, ident)], ["y", "z"]).d == (1, 1)
    w = bounding_weights(example_factors(), ["x2", "x3", "x4", "x5"])
    assert w.d == (2, 2, 2, 2)
    assert w.base_weights == {"x1": 1}


def test_bounding_weights_recursion_uses_earlier_weights():
    a = A(XYZ, y="y + x^2", z="z + y^2")
    inv = triangular_inverse(a, ("x", "y", "z"))
    w = bounding_weights([(a, inv)], ["y", "z"])
    assert w.d == (2, 4)
    assert preserves(a, inv, w)
    w3 = bounding_weights([(a, inv)], ["y", "z"], {"x": 3})
    assert w3.d == (6, 12)


def test_bounding_weights_rejects_non_triangular():
    swap = A(x="y", y="x")
    with pytest.raises(NotTriangularError):
        bounding_weights([(swap, swap)], ["y"])
    back = A(XYZ, y="y + z")
    with pytest.raises(NotTriangularError):
        bounding_weights([(back, A(XYZ, y="y - z"))], ["y", "z"])
    with pytest.raises(ValueError):
        bounding_weights([], ["y"])


@pytest.mark.parametrize("seed", range(20))
def test_multiplicativity_and_subadditivity(seed):
    rng = random.Random(seed)
    w = WeightFn(XYZ, {"x": rng.randint(1, 3)}, ["y", "z"], [rng.randint(1, 4), rng.randint(1, 4)])
    f = random_poly(rng, XYZ, XYZ.names, 3, 3)
    g = random_poly(rng, XYZ, XYZ.names, 3, 3)
    df, dg = eval_degree(w, f), eval_degree(w, g)
    assert eval_degree(w, f * g) == df + dg
    assert eval_degree(w, f + g) <= max(df, dg)
    if not f.is_zero():
        assert df >= 0


def test_composition_closure_on_fixtures():
    pairs = example_factors()
    w = bounding_weights(pairs, ["x2", "x3", "x4", "x5"])
    for a, ai in pairs:
        for b, bi in pairs:
            assert preserves(compose(a, b), compose(bi, ai), w)
    a, ai = shear()
    w2 = WeightFn(XY, None, ["y"], [2])
    assert preserves(compose(a, a), compose(ai, ai), w2)


def test_monotonicity_on_fixtures():
    pairs = example_factors()
    w = bounding_weights(pairs, ["x2", "x3", "x4", "x5"])
    # x5 occurs in no difference, so raising its weight keeps everything preserving
    bigger = WeightFn(X5, None, w.cyl_vars, w.d[:3] + (7,))
    assert all(preserves(a, ai, bigger) for a, ai in pairs)
    a, ai = shear()
    for d in range(2, 6):
        assert preserves(a, ai, WeightFn(XY, None, ["y"], [d]))


def test_monotonicity_needs_the_side_condition():
    # y occurs in the z difference; raising d_y alone breaks preservation
    a = A(XYZ, y="y + x", z="z + y")
    inv = triangular_inverse(a, ("x", "y", "z"))
    w = bounding_weights([(a, inv)], ["y", "z"])
    assert w.d == (1, 1)
    assert not preserves(a, inv, WeightFn(XYZ, None, ["y", "z"], [2, 1]))


def test_image_degree():
    a, _ = shear()
    w = WeightFn(XY, None, ["y"], [3])
    assert image_degree(a, P("y*x"), w) == 4

"""JSON forms of derivations, automorphisms, families, weights and reports.

Expressions are stored as canonical strings and read back with the
expression grammar, so every form round-trips exactly.
"""

from __future__ import annotations

from lndkit.automorphism import Auto
from lndkit.degrees import DegreeViolation, WeightFn
from lndkit.derivation import Deriv
from lndkit.djlike import CylPres, Family, InclusionReport, MembershipReport, SliceSys, Witness
from lndkit.errors import ParseError, SchemaError
from lndkit.parser import parse_expr, parse_poly
from lndkit.poly import Poly, RatFn, VarSet, canonical_string


def _require(obj, key, kind, where):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    if key not in obj:
        raise SchemaError(f"{where}: missing key {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise SchemaError(f"{where}: {key!r} has the wrong type")
    return value


def _names(value, where):
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{where}: expected a list of names")
    return value


def varset_from_json(obj, where="object") -> VarSet:
    names = _names(_require(obj, "vars", list, where), where)
    params = _names(obj.get("params", []), where)
    try:
        return VarSet.of(names, params)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def varset_to_json(vs: VarSet) -> dict:
    return {"vars": list(vs.variables), "params": list(vs.params)}


def _expr_map(obj, key, vs, where) -> dict:
    table = _require(obj, key, dict, where)
    out = {}
    for nm, text in table.items():
        if nm not in vs:
            raise SchemaError(f"{where}: unknown variable {nm!r}")
        if not isinstance(text, str):
            raise SchemaError(f"{where}: expression for {nm!r} must be a string")
        out[nm] = parse_poly(text, vs)
    return out


def deriv_from_json(obj, vs: VarSet | None = None, where="derivation") -> Deriv:
    own = varset_from_json(obj, where) if isinstance(obj, dict) and "vars" in obj else None
    if own is None and vs is None:
        raise SchemaError(f"{where}: missing key 'vars'")
    if own is not None and vs is not None and own != vs:
        raise SchemaError(f"{where}: variables differ from the enclosing object")
    vs = own or vs
    try:
        return Deriv(vs, _expr_map(obj, "coeffs", vs, where))
    except (ValueError, KeyError) as exc:
        if isinstance(exc, (SchemaError, ParseError)):
            raise
        raise SchemaError(f"{where}: {exc}") from None


def deriv_to_json(d: Deriv) -> dict:
    out = varset_to_json(d.varset)
    out["coeffs"] = {nm: canonical_string(c) for nm, c in zip(d.varset.names, d.coeffs) if not c.is_zero()}
    return out


def auto_from_json(obj, where="automorphism") -> Auto:
    vs = varset_from_json(obj, where)
    try:
        return Auto(vs, _expr_map(obj, "images", vs, where))
    except (ValueError, KeyError) as exc:
        if isinstance(exc, (SchemaError, ParseError)):
            raise
        raise SchemaError(f"{where}: {exc}") from None


def auto_to_json(a: Auto) -> dict:
    vs = a.varset
    out = varset_to_json(vs)
    out["images"] = {
        nm: canonical_string(img)
        for nm, flag, img in zip(vs.names, vs.param_flags, a.images)
        if not flag and img != Poly.var(vs, nm)
    }
    return out


def derivs_from_json(obj, where="family") -> list[Deriv]:
    """The generator list of a family-shaped object, without family checks."""
    vs = varset_from_json(obj, where)
    gens = _require(obj, "generators", list, where)
    return [deriv_from_json(g, vs, f"{where} generator {i + 1}") for i, g in enumerate(gens)]


def family_from_json(obj, cap=None, where="family") -> Family:
    gens = derivs_from_json(obj, where)
    return Family(gens) if cap is None else Family(gens, cap=cap)


def family_to_json(fam) -> dict:
    gens = list(fam)
    out = varset_to_json(gens[0].varset)
    out["generators"] = [{"coeffs": deriv_to_json(g)["coeffs"]} for g in gens]
    return out


def weightfn_from_json(obj, vs: VarSet, where="weights") -> WeightFn:
    base = obj.get("base", {}) if isinstance(obj, dict) else None
    if not isinstance(base, dict):
        raise SchemaError(f"{where}: 'base' must be an object")
    cyl = _require(obj, "cylinder", list, where)
    names, ds = [], []
    for entry in cyl:
        if not (isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str) and isinstance(entry[1], int)):
            raise SchemaError(f"{where}: cylinder entries are [name, weight] pairs")
        names.append(entry[0])
        ds.append(entry[1])
    if not all(isinstance(v, int) for v in base.values()):
        raise SchemaError(f"{where}: base weights must be integers")
    try:
        return WeightFn(vs, base, names, ds)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def weightfn_to_json(w: WeightFn) -> dict:
    return {"base": dict(w.base_weights), "cylinder": [[nm, d] for nm, d in zip(w.cyl_vars, w.d)]}


def expr_from_text(text: str, vs: VarSet) -> RatFn:
    return parse_expr(text, vs)


def witness_to_json(w: Witness | None):
    if w is None:
        return None
    out = {"kind": w.kind}
    if w.j is not None:
        out["j"] = w.j
    if w.l is not None:
        out["l"] = w.l
    if w.value is not None:
        out["value"] = w.value if isinstance(w.value, int) else canonical_string(w.value)
    return out


def witness_text(w: Witness | None) -> str:
    if w is None:
        return ""
    if w.kind == "span":
        return "not in the span of the family"
    if w.kind == "level":
        return f"level {w.value} where {w.j} is required" if w.j is not None else "family too long"
    if w.kind == "denominator":
        return f"d_{w.l}(den f_{w.j}) = {canonical_string(w.value)}"
    return f"d_{w.l}(f_{w.j}) = {canonical_string(w.value)}"


def report_to_json(r: MembershipReport) -> dict:
    return {
        "member": r.member,
        "level": r.level,
        "coeffs": None if r.coeffs is None else [canonical_string(c) for c in r.coeffs],
        "witness": witness_to_json(r.witness),
    }


def inclusion_to_json(r: InclusionReport) -> dict:
    return {
        "included": r.included,
        "coeffs": [[canonical_string(c) for c in row] for row in r.coeffs],
        "failed_generator": r.failed_generator,
        "witness": witness_to_json(r.witness),
        "strict": r.strict,
    }


def slicesys_to_json(s: SliceSys) -> dict:
    return {
        "y": [canonical_string(y) for y in s.y],
        "x": [canonical_string(x) for x in s.x],
        "h": canonical_string(s.h),
    }


def expansion_to_json(exp: dict) -> list:
    return [{"alpha": list(a), "coeff": canonical_string(c)} for a, c in exp.items()]


def cylpres_to_json(cp: CylPres) -> dict:
    return {
        "slices": slicesys_to_json(cp.slicesys),
        "f": canonical_string(cp.f),
        "coords": {nm: expansion_to_json(e) for nm, e in cp.coord_table.items()},
    }


def violation_to_json(v: DegreeViolation | None):
    if v is None:
        return None
    return {"variable": v.variable, "degree": v.degree, "bound": v.bound, "inverse": v.inverse}

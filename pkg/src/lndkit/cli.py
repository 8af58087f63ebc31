"""Command-line front end.

Positional inputs are JSON files; ``-`` reads JSON from standard input and
``@N`` refers to the N-th payload of a corpus fixture.  Exit codes: 0 success
or true, 1 false or non-member, 2 usage or input error, 3 cap exhausted,
4 internal verification failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

from lndkit import automorphism as au
from lndkit import degrees as dg
from lndkit import djlike as dj
from lndkit import serialize as se
from lndkit.derivation import (
    DEFAULT_CAP,
    apply,
    bracket,
    certify_lnd,
    is_certified,
    nilpotency_index,
)
from lndkit.errors import (
    CapExceeded,
    LndkitError,
    NotLndError,
    NotTriangularError,
    SchemaError,
    VerificationError,
)
from lndkit.linalg import solve_in_span, symbolic_rank
from lndkit.parser import parse_expr, parse_poly
from lndkit.poly import Poly, VarSet, canonical_string, evaluate_at, poly_gcd, Q

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_CAP, EXIT_VERIFY = 0, 1, 2, 3, 4

COMMANDS: dict[str, tuple] = {}


def command(name, help_text):
    def register(fn):
        COMMANDS[name] = (fn, help_text)
        return fn
    return register


class _Context:
    def __init__(self, stdin_text=None, payloads=None):
        self.stdin_text = stdin_text
        self.payloads = payloads or []
        self.out = io.StringIO()

    def load(self, ref: str):
        if ref == "-":
            text = self.stdin_text if self.stdin_text is not None else sys.stdin.read()
            return json.loads(text)
        if ref.startswith("@") and ref[1:].isdigit():
            i = int(ref[1:])
            if i >= len(self.payloads):
                raise SchemaError(f"no payload {ref}")
            return self.payloads[i]
        with open(ref, encoding="utf-8") as fh:
            return json.load(fh)

    def print(self, *parts):
        print(*parts, file=self.out)

    def emit_json(self, obj):
        self.print(json.dumps(obj, sort_keys=True))


def _names_arg(text):
    return [s for s in (p.strip() for p in text.split(",")) if s] if text else []


def _assignments(text) -> dict:
    out = {}
    for part in _names_arg(text):
        if "=" not in part:
            raise SchemaError(f"expected name=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = Q(v.strip())
    return out


def _varset(args) -> VarSet:
    return VarSet.of(_names_arg(args.vars), _names_arg(args.params))


# ---------------------------------------------------------------------------
# derivations


@command("check-lnd", "certify a derivation as locally nilpotent")
def _check_lnd(ctx, args):
    d = se.deriv_from_json(ctx.load(args.deriv))
    cert = certify_lnd(d, args.cap)
    ctx.print(str(cert))
    return EXIT_OK if is_certified(cert) else EXIT_CAP


@command("nilpotency", "smallest m with d^m(f) = 0")
def _nilpotency(ctx, args):
    d = se.deriv_from_json(ctx.load(args.deriv))
    m = nilpotency_index(d, parse_expr(args.expr, d.varset), args.cap)
    if m is None:
        ctx.print(f"exceeds cap {args.cap}")
        return EXIT_CAP
    ctx.print(m)
    return EXIT_OK


@command("deriv-apply", "apply a derivation to an expression")
def _deriv_apply(ctx, args):
    d = se.deriv_from_json(ctx.load(args.deriv))
    ctx.print(canonical_string(apply(d, parse_expr(args.expr, d.varset))))
    return EXIT_OK


@command("bracket", "Lie bracket of two derivations")
def _bracket(ctx, args):
    d1 = se.deriv_from_json(ctx.load(args.first))
    d2 = se.deriv_from_json(ctx.load(args.second))
    ctx.emit_json(se.deriv_to_json(bracket(d1, d2)))
    return EXIT_OK


@command("exp", "exponential of a locally nilpotent derivation")
def _exp(ctx, args):
    d = se.deriv_from_json(ctx.load(args.deriv))
    if args.param:
        vs = d.varset.with_params([args.param])
        d = d.embed(vs).scale(Poly.var(vs, args.param))
    cert = certify_lnd(d, args.cap)
    if args.t is not None:
        a = au.one_parameter(d, cert, Q(args.t))
    else:
        a = au.exp_derivation(d, cert)
    ctx.emit_json(se.auto_to_json(a))
    return EXIT_OK


@command("log", "locally nilpotent logarithm of a unipotent automorphism")
def _log(ctx, args):
    a = se.auto_from_json(ctx.load(args.auto))
    ctx.emit_json(se.deriv_to_json(au.log_automorphism(a, args.cap)))
    return EXIT_OK


@command("bch", "z with exp(z) = exp(d1) exp(d2)")
def _bch(ctx, args):
    d1 = se.deriv_from_json(ctx.load(args.first))
    d2 = se.deriv_from_json(ctx.load(args.second))
    ctx.emit_json(se.deriv_to_json(au.bch(d1, d2, cap=args.cap)))
    return EXIT_OK


@command("commutator-log", "log of the group commutator, next to the bracket")
def _commutator_log(ctx, args):
    d1 = se.deriv_from_json(ctx.load(args.first))
    d2 = se.deriv_from_json(ctx.load(args.second))
    r = au.group_commutator_log(d1, d2, cap=args.cap)
    ctx.emit_json({
        "log": se.deriv_to_json(r.log),
        "bracket": se.deriv_to_json(r.bracket),
        "matches_bracket": r.matches_bracket,
    })
    return EXIT_OK


# ---------------------------------------------------------------------------
# automorphisms


@command("auto-apply", "pull an expression back along an automorphism")
def _auto_apply(ctx, args):
    a = se.auto_from_json(ctx.load(args.auto))
    if args.set:
        a = a.specialize(_assignments(args.set))
    ctx.print(canonical_string(au.apply_auto(a, parse_expr(args.expr, a.varset))))
    return EXIT_OK


@command("auto-compose", "compose automorphisms (first acts first on points)")
def _auto_compose(ctx, args):
    maps = [se.auto_from_json(ctx.load(r)) for r in args.autos]
    if args.circ:
        out = au.circ(*maps)
    else:
        out = maps[0]
        for m in maps[1:]:
            out = au.compose(out, m)
    ctx.emit_json(se.auto_to_json(out))
    return EXIT_OK


def _order_for(a, text):
    if text:
        return _names_arg(text)
    order = au.unitriangular_order(a)
    if order is None:
        raise NotTriangularError("automorphism is not unitriangular in any variable order")
    return order


@command("auto-inverse", "inverse of a unitriangular automorphism")
def _auto_inverse(ctx, args):
    a = se.auto_from_json(ctx.load(args.auto))
    ctx.emit_json(se.auto_to_json(au.triangular_inverse(a, _order_for(a, args.order))))
    return EXIT_OK


def _inverse(ctx, a, ref):
    if ref:
        return se.auto_from_json(ctx.load(ref))
    return au.triangular_inverse(a, _order_for(a, None))


@command("auto-degree", "degree of an automorphism and its inverse")
def _auto_degree(ctx, args):
    a = se.auto_from_json(ctx.load(args.auto))
    ctx.print(au.automorphism_degree(a, _inverse(ctx, a, args.inverse)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# families


def _family(ctx, ref, args):
    return se.family_from_json(ctx.load(ref), cap=args.cap)


def _slices(ctx, fam, args):
    return dj.build_slice_system(fam, args.degree_cap)


@command("slices", "slice system of a family")
def _slices_cmd(ctx, args):
    fam = _family(ctx, args.family, args)
    ctx.emit_json(se.slicesys_to_json(_slices(ctx, fam, args)))
    return EXIT_OK


@command("project", "kernel projection of an expression")
def _project(ctx, args):
    fam = _family(ctx, args.family, args)
    s = _slices(ctx, fam, args)
    ctx.print(canonical_string(dj.kernel_project(parse_expr(args.expr, fam.varset), s)))
    return EXIT_OK


@command("expand", "slice coordinate expansion of an expression")
def _expand(ctx, args):
    fam = _family(ctx, args.family, args)
    s = _slices(ctx, fam, args)
    exp = dj.slice_expand(parse_expr(args.expr, fam.varset), s)
    ctx.emit_json(se.expansion_to_json(exp))
    return EXIT_OK


@command("level", "annihilator level of an expression")
def _level(ctx, args):
    fam = _family(ctx, args.family, args)
    ctx.print(dj.annihilated_level(parse_expr(args.expr, fam.varset), fam))
    return EXIT_OK


def _print_report(ctx, r, as_json):
    if as_json:
        ctx.emit_json(se.report_to_json(r))
    else:
        ctx.print("member" if r.member else "not member")
        if r.level is not None:
            ctx.print(f"level: {r.level}")
        if r.coeffs is not None:
            ctx.print("coeffs: " + ", ".join(canonical_string(c) for c in r.coeffs))
        if r.witness is not None:
            ctx.print("witness: " + se.witness_text(r.witness))
    return EXIT_OK if r.member else EXIT_FALSE


@command("dj-member", "membership in the dJ-like algebra of a family")
def _dj_member(ctx, args):
    fam = _family(ctx, args.family, args)
    d = se.deriv_from_json(ctx.load(args.deriv))
    return _print_report(ctx, dj.dj_membership(d, fam), args.json)


@command("rx-member", "membership in the kernel-coefficient span of a family")
def _rx_member(ctx, args):
    fam = _family(ctx, args.family, args)
    d = se.deriv_from_json(ctx.load(args.deriv))
    return _print_report(ctx, dj.rx_membership(d, fam), args.json)


@command("family-include", "whether the first family's group contains the second's")
def _family_include(ctx, args):
    big = _family(ctx, args.first, args)
    small = _family(ctx, args.second, args)
    r = dj.family_includes(big, small)
    if args.json:
        ctx.emit_json(se.inclusion_to_json(r))
    elif r.included:
        ctx.print("true")
    else:
        ctx.print(f"false: generator {r.failed_generator}: {se.witness_text(r.witness)}")
    return EXIT_OK if r.included else EXIT_FALSE


@command("family-equal", "whether two families define the same group")
def _family_equal(ctx, args):
    f1 = _family(ctx, args.first, args)
    f2 = _family(ctx, args.second, args)
    ok = dj.family_equivalent(f1, f2)
    ctx.print("true" if ok else "false")
    return EXIT_OK if ok else EXIT_FALSE


@command("reduce-commuting", "commuting locally free family inside a Lie algebra")
def _reduce(ctx, args):
    basis = se.derivs_from_json(ctx.load(args.basis), "basis")
    fam = dj.commuting_reduction(basis, args.k, args.reduction_cap)
    ctx.emit_json(se.family_to_json(fam))
    return EXIT_OK


@command("cylinder", "cylinder presentation of a family")
def _cylinder(ctx, args):
    fam = _family(ctx, args.family, args)
    ctx.emit_json(se.cylpres_to_json(dj.cylinder_presentation(fam, _slices(ctx, fam, args))))
    return EXIT_OK


@command("rank", "rank over Q(X) of the coefficient rows of derivations")
def _rank(ctx, args):
    gens = se.derivs_from_json(ctx.load(args.basis), "basis")
    ctx.print(symbolic_rank([g.row() for g in gens]))
    return EXIT_OK


@command("span", "coefficients of a derivation over a list of derivations")
def _span(ctx, args):
    gens = se.derivs_from_json(ctx.load(args.basis), "basis")
    d = se.deriv_from_json(ctx.load(args.deriv))
    sol = solve_in_span([g.row() for g in gens], d.row())
    if sol is None:
        ctx.print("none")
        return EXIT_FALSE
    ctx.print(", ".join(canonical_string(c) for c in sol))
    return EXIT_OK


# ---------------------------------------------------------------------------
# degrees


def _load_autos(ctx, ref):
    obj = ctx.load(ref)
    items = obj if isinstance(obj, list) else [obj]
    return [se.auto_from_json(o) for o in items]


@command("weights", "bounding cylinder weights for unitriangular automorphisms")
def _weights(ctx, args):
    autos = [a for ref in args.autos for a in _load_autos(ctx, ref)]
    order = _names_arg(args.order)
    vs = autos[0].varset
    base = [nm for nm in vs.variables if nm not in order]
    pairs = [(a, au.triangular_inverse(a, base + order)) for a in autos]
    base_w = {k: int(v) for k, v in _assignments(args.base).items()}
    ctx.emit_json(se.weightfn_to_json(dg.bounding_weights(pairs, order, base_w)))
    return EXIT_OK


@command("degree-check", "whether an automorphism preserves a weighted degree")
def _degree_check(ctx, args):
    a = se.auto_from_json(ctx.load(args.auto))
    w = se.weightfn_from_json(ctx.load(args.weights), a.varset)
    ok, bad = dg.is_degree_preserving(a, _inverse(ctx, a, args.inverse), w)
    ctx.print("true" if ok else f"false: {bad}")
    return EXIT_OK if ok else EXIT_FALSE


# ---------------------------------------------------------------------------
# expressions


@command("normalize", "canonical form of an expression")
def _normalize(ctx, args):
    ctx.print(canonical_string(parse_expr(args.expr, _varset(args))))
    return EXIT_OK


@command("gcd", "monic gcd of two polynomials")
def _gcd(ctx, args):
    vs = _varset(args)
    ctx.print(canonical_string(poly_gcd(parse_poly(args.first, vs), parse_poly(args.second, vs))))
    return EXIT_OK


@command("evaluate", "exact value of an expression at a rational point")
def _evaluate(ctx, args):
    value = evaluate_at(parse_expr(args.expr, _varset(args)), _assignments(args.at))
    ctx.print(str(value))
    return EXIT_OK


# ---------------------------------------------------------------------------
# corpus


def _check_expected(expected, code, out):
    if not isinstance(expected, dict):
        raise SchemaError("'expected' must be an object")
    want = expected.get("exit", EXIT_OK)
    if code != want:
        return f"exit {code} != {want}; output {out.strip()!r}"
    if "stdout" in expected and out.rstrip("\n") != expected["stdout"].rstrip("\n"):
        return f"stdout {out.strip()!r} != {expected['stdout'].strip()!r}"
    for line in expected.get("lines", []):
        if line not in out.splitlines():
            return f"missing line {line!r} in {out.strip()!r}"
    if "json" in expected:
        try:
            got = json.loads(out)
        except json.JSONDecodeError:
            return f"output is not JSON: {out.strip()!r}"
        if got != expected["json"]:
            return f"json {json.dumps(got, sort_keys=True)} != {json.dumps(expected['json'], sort_keys=True)}"
    return None


def run_fixture(fx) -> str | None:
    """Run one fixture; None on success, otherwise a witness string."""
    for key in ("name", "op", "expected"):
        if key not in fx:
            raise SchemaError(f"fixture missing {key!r}")
    if fx["op"] not in COMMANDS or fx["op"] == "run-corpus":
        raise SchemaError(f"fixture {fx['name']}: unknown op {fx['op']!r}")
    argv = [fx["op"], *fx.get("args", [])]
    code, out, err = _execute(argv, payloads=fx.get("payload", []))
    witness = _check_expected(fx["expected"], code, out)
    if witness and err:
        witness += f"; stderr {err.strip()!r}"
    return witness


@command("run-corpus", "run every fixture in a directory")
def _run_corpus(ctx, args):
    root = Path(args.directory) if args.directory else Path(__file__).with_name("corpus")
    if not root.is_dir():
        raise SchemaError(f"{root} is not a directory")
    files = sorted(root.glob("*.json"))
    if not files:
        ctx.print("no fixtures")
        return EXIT_INPUT
    fixtures = []
    for path in files:
        with open(path, encoding="utf-8") as fh:
            try:
                fixtures.append(json.load(fh))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path.name}: {exc}") from None
    fixtures.sort(key=lambda f: str(f.get("name", "")))
    passed = 0
    for fx in fixtures:
        witness = run_fixture(fx)
        if witness is None:
            passed += 1
            ctx.print(f"PASS {fx['name']}")
        else:
            ctx.print(f"FAIL {fx['name']}: {witness}")
    ctx.print(f"passed {passed} / total {len(fixtures)}")
    return EXIT_OK if passed == len(fixtures) else EXIT_FALSE


# ---------------------------------------------------------------------------
# argument parsing


def _add_caps(p, degree=False):
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="iteration cap (default %(default)s)")
    if degree:
        p.add_argument("--degree-cap", type=int, default=dj.DEFAULT_DEGREE_CAP,
                       help="slice search degree cap (default %(default)s)")


def _add_vars(p):
    p.add_argument("--vars", required=True, help="comma separated variable names")
    p.add_argument("--params", default="", help="comma separated parameter names")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lndkit", description="Exact computations with locally nilpotent derivations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, *positional):
        p = sub.add_parser(name, help=COMMANDS[name][1])
        for arg in positional:
            p.add_argument(arg)
        return p

    _add_caps(add("check-lnd", "deriv"))
    _add_caps(add("nilpotency", "deriv", "expr"))
    add("deriv-apply", "deriv", "expr")
    add("bracket", "first", "second")
    p = add("exp", "deriv")
    p.add_argument("--param", help="exponentiate t*d with t a new parameter of this name")
    p.add_argument("--t", help="exponentiate t*d for this rational t")
    _add_caps(p)
    _add_caps(add("log", "auto"))
    _add_caps(add("bch", "first", "second"))
    _add_caps(add("commutator-log", "first", "second"))

    p = add("auto-apply", "auto", "expr")
    p.add_argument("--set", help="parameter values, e.g. t=3")
    p = add("auto-compose")
    p.add_argument("autos", nargs="+")
    p.add_argument("--circ", action="store_true", help="usual map composition f∘g (last acts first)")
    add("auto-inverse", "auto").add_argument("--order", help="unitriangular variable order")
    add("auto-degree", "auto").add_argument("--inverse", help="inverse automorphism (default: triangular inverse)")

    for name, pos, degree in (
        ("slices", ("family",), True),
        ("project", ("family", "expr"), True),
        ("expand", ("family", "expr"), True),
        ("cylinder", ("family",), True),
        ("level", ("family", "expr"), False),
        ("family-equal", ("first", "second"), False),
    ):
        _add_caps(add(name, *pos), degree=degree)
    for name in ("dj-member", "rx-member"):
        p = add(name, "deriv", "family")
        _add_caps(p)
        p.add_argument("--json", action="store_true")
    p = add("family-include", "first", "second")
    _add_caps(p)
    p.add_argument("--json", action="store_true")
    p = add("reduce-commuting", "basis")
    p.add_argument("--k", type=int, help="target rank (default: rank of the span)")
    p.add_argument("--reduction-cap", type=int, default=dj.DEFAULT_REDUCTION_CAP)
    add("rank", "basis")
    add("span", "deriv", "basis")

    p = add("weights")
    p.add_argument("autos", nargs="+")
    p.add_argument("--order", required=True, help="cylinder variables, comma separated")
    p.add_argument("--base", default="", help="base weights, e.g. x1=1")
    add("degree-check", "auto", "weights").add_argument("--inverse")

    for name, pos in (("normalize", ("expr",)), ("gcd", ("first", "second")), ("evaluate", ("expr",))):
        p = add(name, *pos)
        _add_vars(p)
        if name == "evaluate":
            p.add_argument("--at", required=True, help="point, e.g. x=1,y=2/3")
    add("run-corpus").add_argument("directory", nargs="?")
    return parser


_PARSER = None


def _parser():
    global _PARSER
    if _PARSER is None:
        _PARSER = build_parser()
    return _PARSER


def _execute(argv, stdin=None, payloads=None):
    ctx = _Context(stdin, payloads)
    err = io.StringIO()
    try:
        parser = _parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return (exc.code if isinstance(exc.code, int) else EXIT_INPUT), ctx.out.getvalue(), err.getvalue()
        code = COMMANDS[args.command][0](ctx, args)
    except (CapExceeded, NotLndError) as exc:
        print(f"cap exhausted: {exc}", file=err)
        code = EXIT_CAP
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=err)
        code = EXIT_VERIFY
    except (LndkitError, ValueError, KeyError, OSError, json.JSONDecodeError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=err)
        code = EXIT_INPUT
    return code, ctx.out.getvalue(), err.getvalue()


def run_command(argv, stdin=None, payloads=None):
    """Run one subcommand; returns (exit code, stdout text)."""
    code, out, err = _execute(list(argv), stdin, payloads)
    if err:
        sys.stderr.write(err)
    return code, out


def main(argv=None) -> int:
    code, out = run_command(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from lndkit import serialize as se
from lndkit.cli import COMMANDS, build_parser, run_command

CORPUS = Path(__file__).resolve().parents[1] / "src" / "lndkit" / "corpus"

A5_LND = {"vars": ["x1", "x2", "x3", "x4", "x5"], "params": [],
         "coeffs": {"x2": "x1^2", "x3": "x1^2", "x4": "x3", "x5": "x2 - x4"}}
DY = {"vars": ["x", "y", "z"], "params": [], "coeffs": {"y": "1"}}
NONDECOMP = {"vars": ["x", "y", "z"], "params": [],
             "generators": [{"coeffs": {"y": "x", "z": "1"}}, {"coeffs": {"z": "1"}}]}
SHEAR = {"vars": ["x", "y"], "params": [], "images": {"y": "y + x^2"}}


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj), encoding="utf-8")
        return str(p)
    return write


def test_check_lnd_example(files):
    code, out = run_command(["check-lnd", files("d.json", A5_LND), "--cap", "64"])
    assert (code, out) == (0, "Triangular(x1,x2,x3,x4,x5)\n")


def test_dj_member_example(files):
    code, out = run_command(["dj-member", files("d.json", DY), files("f.json", NONDECOMP)])
    assert code == 0
    assert out.splitlines() == ["member", "level: 1", "coeffs: 1/x, -1/x"]
    code, out = run_command(["dj-member", files("d.json", DY), files("f.json", NONDECOMP), "--json"])
    assert json.loads(out)["coeffs"] == ["1/x", "-1/x"]


def test_exp_then_auto_apply_pipeline(files):
    code, out = run_command(["exp", files("d.json", A5_LND), "--param", "t"])
    assert code == 0
    code, out2 = run_command(["auto-apply", "-", "x5"], stdin=out)
    assert code == 0
    assert out2.strip() == "-1/6*x1^2*t^3 + 1/2*x1^2*t^2 - 1/2*x3*t^2 + x2*t - x4*t + x5"


def test_shipped_corpus_passes():
    code, out = run_command(["run-corpus"])
    lines = out.splitlines()
    assert code == 0, out
    total = len(list(CORPUS.glob("*.json")))
    assert total >= 12
    assert lines[-1] == f"passed {total} / total {total}"
    names = [ln.split()[1] for ln in lines[:-1]]
    assert names == sorted(names)


def test_tampered_corpus_fails(tmp_path):
    for p in CORPUS.glob("*.json"):
        shutil.copy(p, tmp_path / p.name)
    target = tmp_path / "nagata-kernel.json"
    fx = json.loads(target.read_text())
    fx["expected"]["stdout"] = "1"
    target.write_text(json.dumps(fx))
    code, out = run_command(["run-corpus", str(tmp_path)])
    assert code == 1
    fails = [ln for ln in out.splitlines() if ln.startswith("FAIL")]
    assert len(fails) == 1 and fails[0].startswith("FAIL nagata-kernel: ")


def test_empty_corpus(tmp_path):
    assert run_command(["run-corpus", str(tmp_path)]) == (2, "no fixtures\n")


@pytest.mark.parametrize("argv", [
    ["run-corpus"],
    ["exp", "@0", "--param", "t"],
    ["slices", "@1"],
    ["bch", "@0", "@0"],
])
def test_output_is_deterministic(argv):
    payloads = [A5_LND, NONDECOMP]
    first = run_command(argv, payloads=payloads)
    assert first == run_command(argv, payloads=payloads)


def test_exit_codes(files, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_command(["check-lnd", str(bad)])[0] == 2
    assert run_command(["check-lnd", str(tmp_path / "missing.json")])[0] == 2
    assert run_command(["check-lnd", files("s.json", {"coeffs": {"x": "1"}})])[0] == 2
    assert run_command(["check-lnd", files("s.json", {"vars": ["x"], "coeffs": {"x": "1 +"}})])[0] == 2
    assert run_command(["no-such-command"])[0] == 2
    euler = files("e.json", {"vars": ["x"], "coeffs": {"x": "x"}})
    assert run_command(["check-lnd", euler, "--cap", "8"]) == (3, "Unknown(cap=8)\n")
    assert run_command(["exp", euler, "--cap", "8"])[0] == 3
    assert run_command(["nilpotency", euler, "x", "--cap", "8"]) == (3, "exceeds cap 8\n")
    # a non-commuting family is an input error
    bad_fam = {"vars": ["x", "y"], "generators": [{"coeffs": {"x": "1"}}, {"coeffs": {"y": "x"}}]}
    assert run_command(["slices", files("f.json", bad_fam)])[0] == 2
    basis = {"vars": ["x", "y"], "generators": [{"coeffs": {"x": "1"}}, {"coeffs": {"y": "x"}},
                                                {"coeffs": {"y": "1"}}]}
    assert run_command(["reduce-commuting", files("b.json", basis), "--k", "2", "--reduction-cap", "0"])[0] == 3


def test_false_results_exit_one(files):
    d = files("d.json", {"vars": ["x", "y", "z"], "coeffs": {"y": "z"}})
    fam = files("f.json", {"vars": ["x", "y", "z"], "generators": [{"coeffs": {"y": "1"}}, {"coeffs": {"z": "1"}}]})
    code, out = run_command(["dj-member", d, fam])
    assert code == 1 and "witness: d_2(f_1) = 1" in out
    w = files("w.json", {"base": {"x": 1}, "cylinder": [["y", 1]]})
    assert run_command(["degree-check", files("a.json", SHEAR), w]) == (1, "false: y: 2 > 1\n")
    assert run_command(["span", files("d2.json", {"vars": ["x", "y"], "coeffs": {"y": "1"}}),
                        files("b.json", {"vars": ["x", "y"], "generators": [{"coeffs": {"x": "1"}}]})]) == (1, "none\n")


def test_expression_commands():
    assert run_command(["normalize", "(x^2 - 1)/(x - 1)", "--vars", "x"]) == (0, "x + 1\n")
    assert run_command(["gcd", "x^2 - y^2", "x*y + y^2", "--vars", "x,y"]) == (0, "x + y\n")
    assert run_command(["evaluate", "1/x + y", "--vars", "x,y", "--at", "x=2,y=1/3"]) == (0, "5/6\n")
    assert run_command(["evaluate", "1/x", "--vars", "x", "--at", "x=0"])[0] == 2


def test_family_commands(files):
    fam = files("f.json", NONDECOMP)
    assert run_command(["level", fam, "y"]) == (0, "2\n")
    assert run_command(["project", fam, "x"]) == (0, "x\n")
    code, out = run_command(["expand", fam, "z"])
    assert json.loads(out) == [{"alpha": [0, 1], "coeff": "1"}, {"alpha": [1, 0], "coeff": "1"}]
    assert run_command(["rank", fam]) == (0, "2\n")
    assert run_command(["span", files("d.json", DY), fam]) == (0, "1/x, -1/x\n")
    code, out = run_command(["cylinder", fam])
    assert code == 0 and json.loads(out)["f"] == "x^2"


def test_auto_commands(files):
    a = files("a.json", SHEAR)
    code, out = run_command(["auto-inverse", a])
    assert json.loads(out)["images"]["y"] == "-x^2 + y"
    code, out = run_command(["auto-compose", a, a])
    assert json.loads(out)["images"]["y"] == "2*x^2 + y"
    assert run_command(["auto-degree", a]) == (0, "2\n")
    code, out = run_command(["log", a])
    assert json.loads(out)["coeffs"] == {"y": "x^2"}
    code, out = run_command(["exp", files("d.json", {"vars": ["x", "y"], "coeffs": {"y": "x^2"}}), "--t", "3"])
    assert json.loads(out)["images"]["y"] == "3*x^2 + y"
    code, out = run_command(["weights", a, "--order", "y"])
    assert json.loads(out) == {"base": {"x": 1}, "cylinder": [["y", 2]]}


def test_lie_commands(files):
    d1 = files("d1.json", {"vars": ["x", "y", "z"], "coeffs": {"y": "x"}})
    d2 = files("d2.json", {"vars": ["x", "y", "z"], "coeffs": {"z": "y"}})
    code, out = run_command(["bracket", d1, d2])
    assert json.loads(out)["coeffs"] == {"z": "x"}
    code, out = run_command(["commutator-log", d1, d2])
    rep = json.loads(out)
    assert rep["matches_bracket"] is True and rep["log"] == rep["bracket"]
    code, out = run_command(["deriv-apply", d1, "y^2"])
    assert out == "2*x*y\n"


def test_module_entry_point(files):
    p = subprocess.run([sys.executable, "-m", "lndkit", "check-lnd", files("d.json", A5_LND)],
                       capture_output=True, text=True, check=False)
    assert p.returncode == 0 and p.stdout == "Triangular(x1,x2,x3,x4,x5)\n"
    p = subprocess.run([sys.executable, "-m", "lndkit", "auto-apply", "-", "y"], input=json.dumps(SHEAR),
                       capture_output=True, text=True, check=False)
    assert p.stdout == "x^2 + y\n"


# every operation listed for the library, mapped to the subcommand that reaches it
OPERATION_COMMANDS = {
    "parse_expr": "normalize",
    "canonical_string": "normalize",
    "poly_gcd": "gcd",
    "evaluate_at": "evaluate",
    "weighted_total_degree": "degree-check",
    "symbolic_rank": "rank",
    "solve_in_span": "span",
    "apply": "deriv-apply",
    "bracket": "bracket",
    "nilpotency_index": "nilpotency",
    "certify_lnd": "check-lnd",
    "is_locally_free": "slices",
    "check_commuting": "slices",
    "apply_auto": "auto-apply",
    "compose": "auto-compose",
    "exp_derivation": "exp",
    "log_automorphism": "log",
    "bch": "bch",
    "group_commutator_log": "commutator-log",
    "triangular_inverse": "auto-inverse",
    "automorphism_degree": "auto-degree",
    "one_parameter": "exp",
    "build_slice_system": "slices",
    "kernel_project": "project",
    "slice_expand": "expand",
    "annihilated_level": "level",
    "dj_membership": "dj-member",
    "rx_membership": "rx-member",
    "family_includes": "family-include",
    "family_equivalent": "family-equal",
    "commuting_reduction": "reduce-commuting",
    "cylinder_presentation": "cylinder",
    "eval_degree": "degree-check",
    "is_degree_preserving": "degree-check",
    "bounding_weights": "weights",
    "run_corpus": "run-corpus",
}

REQUIRED_SUBCOMMANDS = (
    "check-lnd bracket exp log bch commutator-log auto-apply auto-compose auto-inverse auto-degree "
    "slices project expand dj-member rx-member family-include family-equal reduce-commuting cylinder "
    "weights degree-check run-corpus"
).split()


def test_every_operation_has_a_subcommand():
    import lndkit.automorphism
    import lndkit.degrees
    import lndkit.derivation
    import lndkit.djlike
    import lndkit.linalg
    import lndkit.poly

    modules = [lndkit.poly, lndkit.linalg, lndkit.derivation, lndkit.automorphism, lndkit.djlike, lndkit.degrees]
    for op, cmd in OPERATION_COMMANDS.items():
        assert cmd in COMMANDS, cmd
        if op != "run_corpus" and op != "parse_expr":
            assert any(hasattr(m, op) for m in modules), op
    assert set(REQUIRED_SUBCOMMANDS) <= set(COMMANDS)
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    assert set(sub.choices) == set(COMMANDS)


def test_fixture_payloads_round_trip():
    def gens_to_json(ds):
        vs = se.varset_to_json(ds[0].varset)
        return {**vs, "generators": [{"coeffs": se.deriv_to_json(d)["coeffs"]} for d in ds]}

    readers = {"coeffs": (se.deriv_from_json, se.deriv_to_json),
               "images": (se.auto_from_json, se.auto_to_json),
               "generators": (se.derivs_from_json, gens_to_json)}
    seen = 0
    for path in sorted(CORPUS.glob("*.json")):
        for obj in json.loads(path.read_text())["payload"]:
            if not isinstance(obj, dict):
                continue
            for key, (read, write) in readers.items():
                if key in obj:
                    once = write(read(obj))
                    assert write(read(once)) == once
                    seen += 1
    assert seen >= 20


def test_schema_errors(files):
    assert run_command(["dj-member", files("d.json", DY), files("f.json", {"vars": ["x"], "generators": []})])[0] == 2
    assert run_command(["check-lnd", files("d.json", {"vars": ["x"], "coeffs": {"q": "1"}})])[0] == 2
    assert run_command(["check-lnd", files("d.json", [1, 2])])[0] == 2
    assert run_command(["auto-apply", files("a.json", {"vars": ["x"], "images": {"x": 3}}), "x"])[0] == 2

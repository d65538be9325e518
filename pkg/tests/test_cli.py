import json
import re

import pytest

from conslaw.cli.main import main, run
from conslaw.cli.problem import ProblemError, parse_problem_file
from conslaw.jetexpr.oracle import OracleConfig


def invoke(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = invoke(capsys, *argv, "--json")
    return code, json.loads(out)


def test_derive_det_matches_four_rows(capsys):
    code, rep = report(capsys, "derive-det", "--system", "nlt40", "--ansatz", "pointxtuv")
    assert code == 0 and rep["verdict"] == "pass"
    matched = [c for c in rep["checks"] if c["verdict"] == "pass"]
    assert len(matched) == 4 and len(rep["derived"]["equations"]) == 4


def test_kdv_not_self_adjoint(capsys):
    code, out, _ = invoke(capsys, "self-adjoint", "--system", "kdv")
    assert code == 1
    assert "fail" in out.splitlines()[0]


def test_verify_mult_custom_oracle(capsys):
    code, rep = report(capsys, "verify-mult", "--system", "nlt46", "--mult", "m47", "--seed", "7", "--samples", "128")
    assert code == 0
    assert rep["oracle"]["seed"] == 7 and rep["oracle"]["samples"] == 128
    assert rep["max_residual"] < 1e-9


def test_json_is_deterministic(capsys):
    argv = ("verify-cl", "--system", "nlt46", "--mult", "m47", "--densities", "cl48")
    _, a = report(capsys, *argv)
    _, b = report(capsys, *argv)
    a.pop("wall_time"), b.pop("wall_time")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_report_schema(capsys):
    _, rep = report(capsys, "frechet", "--system", "kdv")
    assert {"schema_version", "command", "digest", "verdict", "max_residual", "median_residual", "checks",
            "notes", "derived", "error", "oracle", "wall_time"} <= set(rep)
    assert rep["schema_version"] == 1


def test_json_round_trip(pf):
    rep = run("verify-mult", {"system": "nlt46", "mult": "m47bad"}, pf, OracleConfig())
    data = json.loads(rep.to_json())
    assert data == rep.as_dict()
    assert data["verdict"] == "fail"
    assert any(c.get("witness") for c in data["checks"] if c["verdict"] == "fail")


def test_text_report_mentions_oracle(capsys):
    _, out, _ = invoke(capsys, "verify-mult", "--system", "nlt46", "--mult", "m47")
    assert "seed 24601, samples 64" in out


def test_failing_verdict_exit_code(capsys):
    code, _, _ = invoke(capsys, "verify-mult", "--system", "nlt46", "--mult", "m47bad")
    assert code == 1


@pytest.mark.parametrize("argv", [
    ("frobnicate",),
    ("verify-mult", "--system", "nlt46"),
    ("verify-mult", "--system", "nosuch", "--mult", "m47"),
    ("verify-mult", "--system", "nlt46", "--mult", "cl48"),
    ("verify-mult", "--problem", "/nonexistent.prob", "--system", "a", "--mult", "b"),
])
def test_usage_errors(capsys, argv):
    code, _, _ = invoke(capsys, *argv)
    assert code == 2


def test_internal_error_exit_code(capsys, monkeypatch):
    from conslaw.cli import commands

    def boom(*_):
        raise KeyError("unexpected")

    monkeypatch.setitem(commands.COMMANDS, "frechet", (boom,) + commands.COMMANDS["frechet"][1:])
    code, _, _ = invoke(capsys, "frechet", "--system", "kdv")
    assert code == 3


def test_operation_error_reported_as_failure(capsys):
    code, rep = report(capsys, "densities", "--system", "kdv", "--mult", "m47")
    assert code in (1, 2)


def test_empty_file(tmp_path):
    p = tmp_path / "empty.prob"
    p.write_text("# nothing here\n")
    with pytest.raises(ProblemError, match="no blocks"):
        parse_problem_file(str(p))


def test_undeclared_variable_positioned(tmp_path, capsys):
    p = tmp_path / "bad.prob"
    p.write_text("system s\n  independent t x\n  dependent u\n  eq u_t + w_x\nend\n")
    with pytest.raises(ProblemError) as exc:
        parse_problem_file(str(p))
    assert re.search(r"bad\.prob:4:\d+", str(exc.value))
    code, _, err = invoke(capsys, "frechet", "--problem", str(p), "--system", "s")
    assert code == 2 and "bad.prob:4:" in err


def test_missing_end(tmp_path):
    p = tmp_path / "open.prob"
    p.write_text("system s\n  independent t x\n  dependent u\n  eq u_t\n")
    with pytest.raises(ProblemError):
        parse_problem_file(str(p))


def test_arity_mismatch(tmp_path):
    p = tmp_path / "arity.prob"
    p.write_text("system s\n  independent t x\n  dependent u\n  functions F/1\n  eq u_t - F(u, u_x)\nend\n")
    with pytest.raises(ProblemError, match="arit|argument"):
        parse_problem_file(str(p))


def test_duplicate_name(tmp_path):
    p = tmp_path / "dup.prob"
    body = "system s\n  independent t x\n  dependent u\n  eq u_t\nend\n"
    p.write_text(body + body)
    with pytest.raises(ProblemError):
        parse_problem_file(str(p))


def test_user_problem_file(tmp_path, capsys):
    p = tmp_path / "transport.prob"
    p.write_text("system tr\n  independent t x\n  dependent u\n  eq u_t + u_x\nend\n"
                 "multipliers one for tr\n  m 1\nend\n")
    code, _, _ = invoke(capsys, "verify-mult", "--problem", str(p), "--system", "tr", "--mult", "one")
    assert code == 0


def test_printed_forms_reparse(capsys, pf):
    _, rep = report(capsys, "adjoint", "--system", "nlt40")
    sys_ = pf.get("nlt40")
    from conslaw.jetexpr.parse import parse_expr

    scope = sys_.scope.extended(dependent=("W1", "W2"))
    for row in rep["derived"]["adjoint"]:
        e = parse_expr(row, scope)
        assert str(e) == row


SUITE = [
    # variational
    (0, "self-adjoint", "--system", "wavehx"),
    (1, "self-adjoint", "--system", "waveh"),
    (1, "self-adjoint", "--system", "kdv"),
    (0, "self-adjoint", "--system", "pkdv"),
    (0, "euler-lagrange", "--lagrangian", "pkdvlag", "--expect", "pkdv"),
    (0, "variational-sym", "--lagrangian", "pkdvlag", "--generator", "pkdvx"),
    (0, "noether-flux", "--lagrangian", "pkdvlag", "--generator", "pkdvt"),
    (0, "frechet", "--system", "kdv"),
    (0, "bilinear-check", "--system", "kdv"),
    (1, "self-adjoint", "--system", "osc"),
    (0, "self-adjoint", "--system", "oscfactor"),
    # telegraph
    (0, "derive-det", "--system", "nlt40", "--ansatz", "pointxtuv", "--reference", "multdet"),
    (1, "derive-det", "--system", "nlt40", "--ansatz", "pointxtuv", "--reference", "multdetflip"),
    (0, "derive-det", "--system", "quasi", "--ansatz", "quasiab"),
    (0, "potentialize", "--system", "nlt39", "--densities", "flux39", "--index", "1", "--expect", "nlt40"),
    (0, "potentialize", "--system", "nlt40", "--densities", "flux40", "--index", "2", "--expect", "nlt41"),
    (0, "nonlocal-test", "--generator", "potsym", "--potentials", "v", "--expect", "nonlocal"),
    (0, "nonlocal-test", "--generator", "localgen", "--potentials", "v", "--expect", "local"),
    (0, "nlt-residual", "--nlt", "nltlin", "--expect", "linearizable"),
    (0, "nlt-residual", "--nlt", "nltzero", "--expect", "degenerate"),
    (0, "nlt-residual", "--nlt", "nltnone", "--expect", "no symmetry"),
    (0, "sym-det", "--system", "nlt40", "--generator", "pointgen"),
    (0, "sym-det", "--system", "transport", "--generator", "transportgen"),
    (0, "classify-dh", "--classify", "exptanh", "--expect", "d=0,h=0"),
    (0, "classify-dh", "--system", "nlt46", "--expect", "d=0,h=0"),
    # reflection
    (0, "verify-cl", "--system", "nlt46", "--mult", "m47", "--densities", "cl48"),
    (1, "verify-mult", "--system", "nlt46", "--mult", "m47bad"),
    (0, "densities", "--system", "nlt46", "--mult", "m47"),
    (0, "transform-cl", "--system", "nlt46", "--mult", "m47", "--densities", "cl48", "--transform", "refl",
     "--expect-mult", "m54", "--expect-densities", "cl55"),
    (1, "transform-cl", "--system", "nlt46", "--mult", "m47", "--densities", "cl48", "--transform", "reflwrong",
     "--expect-mult", "m54"),
    (0, "newness", "--system", "nlt46", "--mult", "m54", "--known", "m47", "--expect", "new"),
    (0, "newness", "--system", "nlt46", "--mult", "m47twice", "--known", "m47", "--expect", "equivalent"),
    (0, "verify-cl", "--system", "nlt46", "--mult", "m56", "--densities", "cl57"),
    (0, "lie-expand", "--system", "nlt46", "--mult", "m47", "--densities", "cl48", "--transform", "vshift",
     "--expect", "1=m56"),
    # tanh
    (0, "verify-cl", "--system", "nlt49", "--mult", "m50", "--densities", "cl51"),
    (1, "verify-mult", "--system", "nlt49flip", "--mult", "m50flip"),
    (0, "lie-expand", "--system", "nlt49", "--mult", "m50", "--densities", "cl51", "--transform", "tshift",
     "--expect", "1=mt", "--expect", "2=mone"),
    (0, "lie-expand", "--system", "nlt49", "--mult", "mt", "--densities", "clt", "--transform", "hyperflow",
     "--max-order", "1", "--expect", "1=mv"),
    (0, "verify-cl", "--system", "nlt49", "--mult", "mv", "--densities", "clv"),
    # linearization
    (0, "linearize-check", "--candidate", "hodograph"),
    (0, "linearize-check", "--candidate", "hodowave"),
    (0, "linearize-check", "--candidate", "reciplin"),
    (1, "linearize-check", "--candidate", "hodowavewrong"),
    (1, "linearize-check", "--candidate", "reciplinswap"),
    (0, "multiplier-form-check", "--mform", "quasimult"),
    (0, "multiplier-form-check", "--mform", "recipmform"),
    (0, "adjoint-pairing", "--sym", "symlin", "--mult", "multlin"),
    (0, "adjoint-pairing", "--sym", "recipsym", "--mult", "recipmult"),
    (1, "adjoint-pairing", "--sym", "symlin", "--mult", "symlin"),
    (0, "adjoint", "--system", "recipsym", "--expect", "recipmult"),
]


@pytest.mark.parametrize("case", SUITE, ids=lambda c: " ".join(c[1:4]))
def test_fixture_command_suite(capsys, case):
    want, *argv = case
    code, out, err = invoke(capsys, *argv)
    assert code == want, out + err

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from flowcurv.cli import build_parser, main
from flowcurv.models import model_source
from flowcurv.poly import poly_from_document

REF_IC = "2,2,-2,1.97,2"
ON_LIMIT_IC = "1.97,0,-2,1.97,2"


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def con_doc(work, capsys):
    code, out, _ = run(capsys, "derive", "lk_conservative.ode", "--bind", "b=1/2",
                       "--out", "con.phi.json")
    assert code == 0, out
    return work / "con.phi.json"


# ---- derive ---------------------------------------------------------------------


def test_derive_conservative_profile(work, capsys):
    code, out, _ = run(capsys, "derive", "lk_conservative.ode", "--lie-order", "0")
    assert code == 0
    assert "degrees: x:5 y:11 u:9 v:9 w:9" in out
    assert "order in eps: 13" in out
    doc = work / "lk_conservative.phi.json"
    phi, extra = poly_from_document(doc.read_text())
    assert extra["provenance"]["jet"] == "tlsa"
    assert extra["state"] == ["x", "y", "u", "v", "w"]
    assert phi.degree("u") == 9


def test_derive_generalized_profile(work, capsys):
    code, out, _ = run(capsys, "derive", "lk_generalized.ode", "--bind", "kappa=1/2",
                       "--bind", "eps=0.1", "--bind", "F=0.1")
    assert code == 0
    assert "degrees: x:5 y:11 u:10 v:10 w:10" in out


def test_derive_is_byte_identical(work, capsys):
    texts = []
    for _ in range(2):
        assert run(capsys, "derive", "lk_conservative.ode", "--out", "a.json")[0] == 0
        texts.append(((work / "a.json").read_bytes(), (work / "a.json.manifest.json").read_bytes()))
    assert texts[0] == texts[1]


def test_derive_manifest(work, capsys):
    run(capsys, "derive", "lk_conservative.ode", "--bind", "b=0.5", "--out", "m.json",
        "--manifest", "run.json")
    man = json.loads((work / "run.json").read_text())
    assert man["tool"] == "flowcurv" and man["version"]
    assert man["command"][:2] == ["flowcurv", "derive"]
    assert man["bindings"] == {"b": "1/2"}
    assert man["outputs"] == ["m.json"]
    (digest,) = man["inputs"].values()
    assert digest == hashlib.sha256(model_source("conservative").encode()).hexdigest()


def test_derive_lie_order(work, capsys):
    code, out, _ = run(capsys, "derive", "lk_conservative.ode", "--bind", "b=1/2",
                       "--lie-order", "1", "--out", "l.json")
    assert code == 0
    _, extra = poly_from_document((work / "l.json").read_text())
    assert extra["provenance"]["lie_order"] == 1


def test_derive_errors(work, capsys):
    assert run(capsys, "derive", "missing.ode")[0] == 1
    assert run(capsys, "derive", "lk_conservative.ode", "--lie-order", "-1")[0] == 1
    assert run(capsys, "derive", "lk_conservative.ode", "--bind", "zeta=1")[0] == 1
    assert run(capsys, "derive", "lk_conservative.ode", "--bind", "b=x")[0] == 1
    Path("bad.ode").write_text("state x\ndx/dt = 0.5*x\n")
    code, _, err = run(capsys, "derive", "bad.ode")
    assert code == 2 and "line 2" in err
    Path("one.ode").write_text("state x\ndx/dt = x^2\n")
    assert run(capsys, "derive", "one.ode")[0] == 3
    code, _, err = run(capsys, "derive", "lk_conservative.ode", "--max-terms", "10")
    assert code == 3 and "--force" in err
    assert run(capsys, "derive", "lk_conservative.ode", "--bind", "b=1/2",
               "--max-terms", "10", "--force", "--out", "f.json")[0] == 0


# ---- darboux --------------------------------------------------------------------


def test_darboux_quadratic_invariant(work, capsys):
    code, out, _ = run(capsys, "darboux", "lk_conservative.ode", "--phi-expr", "u^2+v^2")
    assert code == 0
    assert "Invariant\ncofactor: 0" in out


def test_darboux_v_at_zero_delta(work, capsys):
    code, out, _ = run(capsys, "darboux", "lk_generalized.ode", "--phi-expr", "v",
                       "--set", "delta=0")
    assert code == 0 and "\nInvariant\n" in out


def test_darboux_slow_plane_remainder(work, capsys):
    code, out, _ = run(capsys, "darboux", "lk_conservative.ode", "--phi-expr",
                       "u^2*w^2-u^4+eps^2*v^2*w^2*(w^2-(1+b^2)*u^2)", "--set", "eps=0",
                       "--locality", "u^2-w^2", "--locality", "u^2+v^2")
    assert code == 0
    assert "NotInvariant" in out
    assert "remainder: 2*u^3*v*w - 2*u*v*w^3" in out
    assert "locally invariant on u^2-w^2 = 0: yes" in out
    assert "locally invariant on u^2+v^2 = 0: no" in out


def test_darboux_with_document(con_doc, capsys):
    code, out, _ = run(capsys, "darboux", "lk_conservative.ode", "--phi", str(con_doc),
                       "--time", "fast")
    assert code == 0 and "time: fast" in out


def test_darboux_errors(work, capsys):
    assert run(capsys, "darboux", "lk_conservative.ode")[0] == 1
    assert run(capsys, "darboux", "lk_conservative.ode", "--phi-expr", "u", "--set", "u=0")[0] == 1
    assert run(capsys, "darboux", "lk_conservative.ode", "--phi-expr", "u +* v")[0] == 2
    assert run(capsys, "darboux", "lk_conservative.ode", "--phi-expr", "q")[0] == 2
    # x is fast, so its slow-time derivative is not polynomial
    assert run(capsys, "darboux", "lk_conservative.ode", "--phi-expr", "x")[0] == 3
    Path("junk.json").write_text("{}")
    assert run(capsys, "darboux", "lk_conservative.ode", "--phi", "junk.json")[0] == 2


# ---- restrict -------------------------------------------------------------------


def test_restrict_limit_factorization(con_doc, capsys):
    code, out, _ = run(capsys, "restrict", "--phi", str(con_doc), "--set", "eps=0",
                       "--factors", "u^2-w^2", "v^2+w^2", "(x+b*u*v)^2+y^2")
    assert code == 0
    assert "exact: yes" in out
    assert "ok: yes" in out, out


def test_restrict_slow_plane(con_doc, work, capsys):
    code, out, _ = run(capsys, "restrict", "--phi", str(con_doc), "--set", "x=0", "--set", "y=0",
                       "--factors", "u^2+v^2", "u^2*w^2-u^4+eps^2*v^2*w^2*(w^2-(1+b^2)*u^2)",
                       "--out", "plane.json")
    assert code == 0 and "exact: yes" in out
    phi, extra = poly_from_document((work / "plane.json").read_text())
    assert not phi.depends_on(("x", "y"))
    assert extra["provenance"]["substitutions"] == [["x", "0"], ["y", "0"]]
    assert (work / "plane.json.manifest.json").exists()


def test_restrict_noop_is_byte_identical(con_doc, work, capsys):
    assert run(capsys, "restrict", "--phi", str(con_doc), "--out", "same.json")[0] == 0
    assert (work / "same.json").read_bytes() == con_doc.read_bytes()
    code, out, _ = run(capsys, "restrict", "--phi", str(con_doc))
    assert code == 0 and out == con_doc.read_text()


def test_restrict_errors(con_doc, capsys):
    assert run(capsys, "restrict", "--phi", "nope.json")[0] == 1
    assert run(capsys, "restrict", "--phi", str(con_doc), "--set", "q=1")[0] == 1
    assert run(capsys, "restrict", "--phi", str(con_doc), "--factors", "u^")[0] == 2
    assert run(capsys, "restrict", "--phi", str(con_doc), "--factors", "0")[0] == 3
    code, out, _ = run(capsys, "restrict", "--phi", str(con_doc), "--factors", "u+1")
    assert code == 0 and "exact: no" in out and "first failing factor: u+1" in out


# ---- integrate ------------------------------------------------------------------


def test_integrate_reference_orbit(work, capsys):
    code, out, _ = run(capsys, "integrate", "lk_conservative.ode", "--bind", "b=0.5",
                       "--bind", "eps=0.1", "--ic", REF_IC, "--tmax", "1", "--dt", "0.01",
                       "--out", "traj.csv")
    assert code == 0
    lines = (work / "traj.csv").read_text().splitlines()
    assert lines[0] == "t,x,y,u,v,w" and len(lines) == 102
    assert (work / "traj.csv.manifest.json").exists()


def test_integrate_with_phi_channels(con_doc, work, capsys):
    code, out, _ = run(capsys, "integrate", "lk_conservative.ode", "--bind", "b=1/2",
                       "--bind", "eps=0.1", "--ic", REF_IC, "--tmax", "1", "--dt", "0.01",
                       "--phi", str(con_doc), "--normalize", "--sample-every", "10",
                       "--out", "traj.csv")
    assert code == 0 and "max normalized |phi|" in out
    lines = (work / "traj.csv").read_text().splitlines()
    assert lines[0] == "t,x,y,u,v,w,phi,phi_norm" and len(lines) == 12


def test_integrate_errors(con_doc, work, capsys):
    base = ["integrate", "lk_conservative.ode", "--ic", REF_IC, "--tmax", "1", "--out", "t.csv"]
    assert run(capsys, *base, "--bind", "b=1", "--bind", "eps=1", "--dt", "0")[0] == 1
    code, _, err = run(capsys, *base, "--bind", "b=1", "--dt", "0.1")
    assert code == 1 and "eps" in err
    assert run(capsys, *base, "--bind", "b=1", "--bind", "eps=1", "--bind", "z=1",
               "--dt", "0.1")[0] == 1
    assert run(capsys, "integrate", "lk_conservative.ode", "--ic", "1,2", "--bind", "b=1",
               "--bind", "eps=1", "--tmax", "1", "--dt", "0.1", "--out", "t.csv")[0] == 1
    # phi derived with b = 1/2 cannot be used with b = 1
    assert run(capsys, *base, "--bind", "b=1", "--bind", "eps=1", "--dt", "0.1",
               "--phi", str(con_doc))[0] == 1
    Path("blow.ode").write_text("state x\ndx/dt = x^2\n")
    code, _, err = run(capsys, "integrate", "blow.ode", "--ic", "1", "--tmax", "2",
                       "--dt", "0.001", "--out", "b.csv")
    assert code == 3 and "last finite state" in err
    assert not (work / "b.csv").exists()


# ---- sweep ----------------------------------------------------------------------


def test_sweep_three_values(work, capsys):
    code, out, _ = run(capsys, "sweep", "lk_conservative.ode", "--vary", "eps=0.2,0.1,0.05",
                       "--bind", "b=1/2", "--ic", ON_LIMIT_IC, "--tmax", "2", "--dt", "0.01",
                       "--jobs", "2", "--out", "sweep.csv")
    assert code == 0
    lines = (work / "sweep.csv").read_text().splitlines()
    assert lines[0] == "epsilon,max_abs_phi,max_norm_phi"
    assert [l.split(",")[0] for l in lines[1:]] == ["0.2", "0.1", "0.05"]
    assert "strictly decreasing" in out


def test_sweep_single_value_has_no_verdict(work, capsys):
    code, out, _ = run(capsys, "sweep", "lk_conservative.ode", "--vary", "eps=0.1",
                       "--bind", "b=1/2", "--ic", ON_LIMIT_IC, "--tmax", "1", "--dt", "0.01",
                       "--out", "one.csv")
    assert code == 0 and "strictly decreasing" not in out
    assert len((work / "one.csv").read_text().splitlines()) == 2


def test_sweep_errors(work, capsys):
    base = ["sweep", "lk_conservative.ode", "--bind", "b=1/2", "--ic", ON_LIMIT_IC,
            "--tmax", "1", "--dt", "0.1", "--out", "s.csv"]
    assert run(capsys, *base, "--vary", "eps=")[0] == 1
    assert run(capsys, *base)[0] == 1
    assert run(capsys, *base, "--vary", "zeta=1,2")[0] == 1
    assert run(capsys, "sweep", "lk_conservative.ode", "--vary", "eps=0.1", "--ic", ON_LIMIT_IC,
               "--tmax", "1", "--dt", "0.1", "--out", "s.csv")[0] == 1


# ---- parser ---------------------------------------------------------------------


def _subparsers():
    parser = build_parser()
    action = next(a for a in parser._actions if a.__class__.__name__ == "_SubParsersAction")
    return action.choices


def test_every_subcommand_exists():
    assert set(_subparsers()) == {"derive", "darboux", "restrict", "integrate", "sweep"}


@pytest.mark.parametrize("name", ["derive", "darboux", "restrict", "integrate", "sweep"])
def test_help_lists_every_flag(name, capsys):
    code, out, _ = run(capsys, name, "--help")
    assert code == 0
    for action in _subparsers()[name]._actions:
        for flag in action.option_strings:
            assert flag in out, flag


def test_usage_errors_exit_1(capsys):
    assert run(capsys)[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "integrate", "lk_conservative.ode")[0] == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "flowcurv", "darboux", "lk_conservative.ode",
                        "--phi-expr", "u^2+v^2"], capture_output=True, text=True, cwd=tmp_path)
    assert r.returncode == 0 and "Invariant" in r.stdout
    r = subprocess.run([sys.executable, "-m", "flowcurv", "derive", "nope.ode"],
                       capture_output=True, text=True, cwd=tmp_path)
    assert r.returncode == 1 and "not found" in r.stderr

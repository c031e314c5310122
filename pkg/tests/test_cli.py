import json

import pytest

from ngls.cli import main

LUROTH = {"symbols": [{"id": "L", "kind": "luroth", "layout": "luroth-style"}]}
MIXED = {"symbols": [{"id": "L", "kind": "luroth", "layout": "luroth-style"},
                     {"id": "B", "kind": "finite", "lengths": ["1/2", "1/2"]}]}
BAD = {"symbols": [{"id": "B", "kind": "finite", "lengths": ["0.5", "0.49"]}]}


@pytest.fixture
def cfg(tmp_path):
    def write(obj, name="c.json"):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)
    return write


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


def test_dim_luroth(cfg, capsys):
    code, rep = run_json(capsys, ["dim", "--config", cfg(LUROTH), "--alpha", "geometric:0.5", "--M", "200"])
    assert code == 0
    r = rep["result"]
    assert r["eta"] == 0.5 and r["divergent"] is False
    assert r["beta"] == pytest.approx(0.910, abs=2e-3) and r["dim"] == r["beta"]
    assert rep["config"]["params"]["M"] == 200 and rep["tool"] == "ngls"


def test_dim_dirac(cfg, capsys):
    code, rep = run_json(capsys, ["dim", "--config", cfg(LUROTH), "--alpha", "dirac:1"])
    assert code == 0 and rep["result"]["dim"] == 0.5


def test_validate_bad(cfg, capsys):
    assert main(["validate", "--config", cfg(BAD)]) == 2
    assert "symbols[0].lengths" in capsys.readouterr().err


def test_validate_ok(cfg, capsys):
    code, rep = run_json(capsys, ["validate", "--config", cfg(MIXED)])
    assert code == 0


def test_missing_command_and_bad_flag(cfg, capsys):
    assert main([]) == 2
    assert main(["dim", "--bogus"]) == 2
    assert main(["dim", "--config", cfg(LUROTH), "--alpha", "geometric:3"]) == 2


def test_divergent_tail_exit(cfg, capsys):
    code = main(["coversum", "--config", cfg(LUROTH), "--alpha", "geometric:1/2", "--t", "0.5",
                 "--m", "2", "--n", "3", "--eps-window", "1"])
    assert code == 3


def test_rerun_report_is_identical(cfg, capsys, tmp_path):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    args = ["beta", "--config", cfg(MIXED), "--alpha", "L=1/2:geometric:1/2;B=1/2:uniform", "--M", "120"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(["beta", "--config", str(out1), "--out", str(out2)]) == 0
    assert out1.read_text() == out2.read_text()


def test_beta_ignores_omega(cfg, capsys):
    base = ["beta", "--config", cfg(MIXED), "--alpha", "L=1/2:geometric:1/2;B=1/2:uniform"]
    _, a = run_json(capsys, base + ["--omega", "weave"])
    _, b = run_json(capsys, base + ["--omega", "periodic:B,L,L"])
    assert a["result"]["beta"] == b["result"]["beta"]


def test_beta_trace_csv(cfg, capsys):
    assert main(["beta", "--config", cfg(LUROTH), "--alpha", "geometric:1/2", "--M", "10", "--trace"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# ")
    assert lines[1].split(",")[:2] == ["m", "numerator"]
    assert len(lines) == 12


def test_expand_and_digits(cfg, capsys):
    code, rep = run_json(capsys, ["digits", "--config", cfg(LUROTH), "--x", "2/5", "--n", "3"])
    assert code == 0 and rep["result"]["word"] == [2, 2, 2]
    code, rep = run_json(capsys, ["expand", "--config", cfg(LUROTH), "--digits", "2,2,2", "--depth", "3"])
    assert code == 0


def test_weave_csv(cfg, capsys):
    assert main(["weave", "--config", cfg(MIXED), "--alpha", "L=1/2:geometric:1/2;B=1/2:uniform",
                 "--n", "4096", "--m", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "n,d,count,count/n,alpha_d,deviation"


def test_sample_and_etalower(cfg, capsys):
    assert main(["sample", "--config", cfg(LUROTH), "--alpha", "geometric:1/2", "--n", "2000", "--seed", "1"]) == 0
    s1 = capsys.readouterr().out
    assert main(["sample", "--config", cfg(LUROTH), "--alpha", "geometric:1/2", "--n", "2000", "--seed", "1"]) == 0
    assert capsys.readouterr().out == s1
    assert main(["etalower", "--config", cfg(LUROTH), "--alpha", "geometric:1/2", "--k", "20"]) == 0
    head = capsys.readouterr().out.splitlines()[1]
    assert "c_n" in head


def test_approx(cfg, capsys):
    code, rep = run_json(capsys, ["approx", "--config", cfg(LUROTH), "--m", "2"])
    assert code == 0
    rows = rep["result"]["systems"]["L"]
    assert [r["interval"] for r in rows] == [[0, "1/3"], ["1/3", "1/2"], ["1/2", 1]]
    assert [r["merged"] for r in rows] == [True, False, False]


def test_eta_mixed(cfg, capsys):
    code, rep = run_json(capsys, ["eta", "--config", cfg(MIXED)])
    assert code == 0
    assert "0.5" in json.dumps(rep["result"])

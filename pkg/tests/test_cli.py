import io
import json

import pytest

from mdpwf import dumps, loads
from mdpwf.cli import main


def _write_investment(tmp_path):
    from mdpwf import builtin

    path = tmp_path / "inv.json"
    path.write_text(dumps(builtin("investment")))
    return str(path)


def test_gen_validate_roundtrip(tmp_path, capsys):
    out = str(tmp_path / "inv.json")
    assert main(["gen", "builtin", "investment", "--out", out]) == 0
    assert main(["validate", out]) == 0
    assert capsys.readouterr().out.strip().endswith("ok")


def test_validate_reports_violations(tmp_path, capsys):
    path = tmp_path / "bad.json"
    doc = json.loads(dumps(loads(open(_write_investment(tmp_path)).read())))
    doc["principals"][0]["discount"] = "1/3"  # ties the two discounts
    path.write_text(json.dumps(doc))
    assert main(["validate", str(path)]) == 1
    assert "not strictly descending" in capsys.readouterr().out


def test_validate_parse_error_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"states": [], "wat": 1}')
    assert main(["validate", str(path)]) == 1
    assert "wat" in capsys.readouterr().err


def test_optimize_exact_output(tmp_path, capsys):
    path = _write_investment(tmp_path)
    assert main(["optimize", path, "--exact"]) == 0
    out = capsys.readouterr().out
    assert "kappa: 2" in out
    assert "127/9" in out


def test_optimize_json_and_strategy_file(tmp_path, capsys):
    path = _write_investment(tmp_path)
    strat = str(tmp_path / "strategy.json")
    report = str(tmp_path / "report.csv")
    rc = main(["optimize", path, "--exact", "--json", "--out", strat, "--csv", report])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kappa"] == 2
    assert doc["reports"]["s0"]["social_welfare"] == "127/9"
    # the emitted strategy file evaluates back to the same welfare
    capsys.readouterr()
    assert main(["eval", path, "--strategy", strat, "--exact"]) == 0
    out = capsys.readouterr().out
    assert "127/9" in out
    with open(report) as f:
        assert f.readline().startswith("state,Alice,Bob,social_welfare")


def test_optimize_start_filter(tmp_path, capsys):
    path = _write_investment(tmp_path)
    assert main(["optimize", path, "--exact", "--start", "s1", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert list(doc["reports"]) == ["s1"]


def test_eval_positional_and_mixed_files(tmp_path, capsys):
    path = _write_investment(tmp_path)
    pos = tmp_path / "pos.json"
    pos.write_text(json.dumps({
        "type": "positional",
        "actions": [{"state": "s0", "action": "a"}, {"state": "s1", "action": "b"}],
    }))
    assert main(["eval", path, "--strategy", str(pos), "--exact", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["values"]["s0"]["social_welfare"] == "27/2"
    mixed = tmp_path / "mixed.json"
    mixed.write_text(json.dumps({
        "type": "mixed",
        "distributions": [
            {"state": "s0", "choices": [
                {"action": "a", "prob": "3/4"}, {"action": "b", "prob": "1/4"}]},
            {"state": "s1", "choices": [{"action": "b", "prob": 1}]},
        ],
    }))
    assert main(["eval", path, "--strategy", str(mixed), "--exact", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["values"]["s0"]["social_welfare"] == "41/3"


def test_solve_cli(tmp_path, capsys):
    path = _write_investment(tmp_path)
    csv_path = str(tmp_path / "values.csv")
    assert main(["solve", path, "--principal", "1", "--exact", "--csv", csv_path]) == 0
    out = capsys.readouterr().out
    assert "9/2" in out
    with open(csv_path) as f:
        lines = f.read().splitlines()
    assert lines[0] == "state,value,action"
    assert lines[1] == "s0,9/2,a"


def test_spacing_cli(tmp_path, capsys):
    path = _write_investment(tmp_path)
    assert main(["spacing", path, "--bound", "10", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["all_spaced"] is True


def test_oracle_threshold_auto_pipe(tmp_path, capsys, monkeypatch):
    cnf = tmp_path / "phi.cnf"
    cnf.write_text("p cnf 3 3\n1 -2 3 0\n-1 -2 3 0\n-1 2 -3 0\n")
    red = str(tmp_path / "red.json")
    assert main(["gen", "sat", str(cnf), "--out", red]) == 0
    assert main(["oracle", red, "--threshold", "auto", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["decision"] is True
    assert set(doc["assignment"]) == {"x1", "x2", "x3"}
    # piped form: model arrives on stdin as "-"
    monkeypatch.setattr("sys.stdin", io.StringIO(open(red).read()))
    assert main(["oracle", "-", "--threshold", "auto"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("YES")


def test_oracle_threshold_no_is_exit_zero(tmp_path, capsys):
    path = _write_investment(tmp_path)
    assert main(["oracle", path, "--threshold", "100"]) == 0
    assert capsys.readouterr().out.strip() == "NO"


def test_oracle_counting(tmp_path, capsys):
    path = _write_investment(tmp_path)
    rc = main(["oracle", path, "--mode", "counting", "--horizon", "4", "--exact", "--json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["best_social_welfare"] == "127/9"


def test_gen_random_deterministic(tmp_path):
    a = str(tmp_path / "a.json")
    b = str(tmp_path / "b.json")
    args = ["gen", "random", "--states", "8", "--seed", "5", "--scheme", "list",
            "--discounts", "0.9,0.3"]
    assert main(args + ["--out", a]) == 0
    assert main(args + ["--out", b]) == 0
    assert open(a).read() == open(b).read()


def test_bench_cli(tmp_path, capsys):
    out = str(tmp_path / "rq1.csv")
    assert main(["bench", "rq1", "--states", "4,6", "--seeds", "0", "--csv", out]) == 0
    assert "2 rows" in capsys.readouterr().out
    assert open(out).readline().startswith("states,")


def test_sweep_cli(tmp_path, capsys):
    path = _write_investment(tmp_path)
    out = str(tmp_path / "sweep.csv")
    rc = main(["sweep", path, "--alpha", "0.5:0.9:0.2", "--beta", "0.1:0.5:0.2", "--csv", out])
    assert rc == 0
    with open(out) as f:
        header = f.readline()
    assert header.startswith("alpha,beta,status")


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["badflag"])
    assert err.value.code == 2


def test_domain_errors_exit_1(tmp_path, capsys):
    path = _write_investment(tmp_path)
    assert main(["solve", path, "--principal", "7"]) == 1
    assert "out of range" in capsys.readouterr().err
    assert main(["solve", path, "--principal", "0", "--method", "vi", "--exact"]) == 1
    assert "value iteration" in capsys.readouterr().err
    assert main(["oracle", path, "--start", "nowhere"]) == 1
    assert "unknown state" in capsys.readouterr().err
    assert main(["oracle", path, "--mode", "counting"]) == 1
    assert "--horizon" in capsys.readouterr().err


def test_missing_file_exit_1(capsys):
    assert main(["validate", "/nonexistent/x.json"]) == 1
    assert "error:" in capsys.readouterr().err

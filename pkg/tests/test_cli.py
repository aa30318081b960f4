import json
import subprocess
import sys

import pytest

from infomarket.cli import main, run_suite
from infomarket.scenario import load_scenario, read_index


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out) if out else None, err


def test_list(capsys):
    code, doc, _ = run_json(capsys, "list")
    assert code == 0
    assert "legume" in doc["outputs"]["scenarios"]


def test_voi_factcheck(capsys):
    code, doc, _ = run_json(capsys, "voi", "--scenario", "factcheck")
    goods = {g["good"]: g for g in doc["outputs"]["goods"]}
    assert code == 0
    assert goods["I1"]["realized"] == pytest.approx(1.386294, abs=1e-6)
    assert goods["I1+I2"]["realized"] == pytest.approx(0.693147, abs=1e-6)
    assert goods["I1"]["ex_post"] > goods["I1+I2"]["ex_post"]


def test_inspect_legume_both(capsys):
    code, doc, _ = run_json(capsys, "inspect", "--scenario", "legume", "--mode", "both")
    assert code == 0
    assert doc["outputs"]["successive"]["action"] == "x1"
    assert doc["outputs"]["recursive"]["action"] == "x2"
    assert doc["outputs"]["recursive"]["realized"] > doc["outputs"]["successive"]["realized"]


def test_inspect_table_format(capsys):
    code, out, _ = run(capsys, "inspect", "--scenario", "legume", "--mode", "recursive")
    assert code == 0
    assert out.startswith("# inspect") and "recursive" in out


def test_oversight_solve_and_check(capsys):
    code, doc, _ = run_json(capsys, "oversight", "solve", "--scenario", "oversight-s6")
    assert code == 0 and doc["outputs"]["path"] == ["0"]
    code, doc, _ = run_json(capsys, "oversight", "check", "--scenario", "oversight-counterexample")
    assert code == 1 and doc["verdicts"]["bullet_a"] is False


def test_market_one_level(capsys):
    code, doc, _ = run_json(capsys, "market", "--scenario", "factcheck", "--one-level")
    assert code == 0
    assert doc["outputs"]["final_action"] == 0.4
    code, doc, _ = run_json(capsys, "market", "--scenario", "factcheck")
    assert doc["outputs"]["final_action"] == 0.2


def test_verify_lemma1(capsys):
    code, doc, _ = run_json(capsys, "verify", "lemma1", "--seed", "1", "--trials", "50")
    assert code == 0
    assert doc["outputs"]["violations"] == 0 and doc["verdicts"]["lemma1"] is True


def test_verify_requires_seed(capsys):
    code, _, err = run(capsys, "verify", "lemma1", "--trials", "5")
    assert code == 2 and "--seed" in err


def test_workers_do_not_change_results():
    one = run_suite("lemma2", 5, 12, workers=1)
    three = run_suite("lemma2", 5, 12, workers=3)
    rows = lambda reps: [r for rep in reps for r in rep.rows]  # noqa: E731
    assert rows(one) == rows(three)


def test_thm2_suite_writes_counterexamples(capsys, tmp_path):
    code, doc, _ = run_json(capsys, "verify", "thm2", "--seed", "7", "--trials", "30",
                            "--counterexamples", str(tmp_path / "cx"))
    written = sorted((tmp_path / "cx").glob("*.scenario")) if (tmp_path / "cx").exists() else []
    assert len(written) == doc["outputs"]["counterexamples"]
    assert code == (0 if not written else 1)
    for path in written:
        load_scenario(path)


def test_gen_roundtrip(capsys, tmp_path):
    for kind in ("voi", "inspection", "oversight", "market"):
        out = tmp_path / f"{kind}.scenario"
        code, _, _ = run(capsys, "gen", "--kind", kind, "--seed", "4", "-o", str(out), "--no-record")
        assert code == 0
        load_scenario(out)


def test_gen_then_solve(capsys, tmp_path):
    out = tmp_path / "m.scenario"
    run(capsys, "gen", "--kind", "market", "--seed", "8", "-o", str(out))
    code, doc, _ = run_json(capsys, "market", "--scenario", str(out))
    assert code == 0 and "final_action" in doc["outputs"]


def test_errors_exit_two(capsys, tmp_path):
    assert run(capsys, "voi", "--scenario", "does-not-exist")[0] == 2
    assert run(capsys, "inspect")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    bad = tmp_path / "bad.scenario"
    bad.write_text('{"space": {"outcomes": ["a"], "prior": ["1/2"]}}')
    code, _, err = run(capsys, "voi", "--scenario", str(bad))
    assert code == 2 and "prior sums to 1" in err


def test_runs_are_recorded(capsys):
    run(capsys, "list")
    run(capsys, "list", "--no-record")
    assert len(read_index()) == 1


def test_json_report_is_reproducible(capsys):
    _, a, _ = run(capsys, "inspect", "--scenario", "legume", "--format", "json")
    _, b, _ = run(capsys, "inspect", "--scenario", "legume", "--format", "json")
    assert a == b


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "infomarket", "list", "--no-record"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "factcheck" in proc.stdout

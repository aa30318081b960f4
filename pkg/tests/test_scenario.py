import json
from fractions import Fraction
from pathlib import Path

import pytest

from infomarket.decision import random_scenario, trial_rng
from infomarket.errors import FixtureViolation, ParseError
from infomarket.inspection import random_inspection_instance
from infomarket.scenario import (RunRecord, append_run, build_doc, dump_inspection_scenario, dump_voi_scenario,
                                 dumps, emit_report, load_scenario, parse_scenario, read_index,
                                 resolve_scenario_path, save_scenario, shipped_scenarios)

SHIPPED = ["factcheck", "factcheck-priced", "legume", "nontheorem", "oversight-counterexample", "oversight-s6"]


def test_shipped_list():
    assert shipped_scenarios() == SHIPPED


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_roundtrip_is_byte_identical(name):
    text = resolve_scenario_path(name).read_text()
    doc = parse_scenario(text)
    assert dumps(doc) == text
    assert dumps(parse_scenario(dumps(doc))) == text


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_fixtures_hold(name):
    load_scenario(name, check=True)


def test_table1_probabilities_exact(factcheck):
    from infomarket.prob import probability

    sp = factcheck.space
    e = factcheck.evidence({"E": 1})
    i1 = factcheck.evidence({"I1": 1})
    both = factcheck.evidence({"I1": 1, "I2": 1})
    assert probability(sp, e) == Fraction(1, 10)
    assert probability(sp, i1) == Fraction(1, 16)
    assert probability(sp, e & i1) / probability(sp, i1) == Fraction(2, 5)
    assert probability(sp, e & both) / probability(sp, both) == Fraction(1, 5)


def _minimal(prior=("1/2", "1/2")):
    return {"space": {"outcomes": ["a", "b"], "prior": list(prior)}}


def test_prior_off_by_one_32nd_raises():
    with pytest.raises(FixtureViolation) as info:
        parse_scenario(json.dumps(_minimal(("1/2", "15/32"))))
    assert info.value.assertion == "prior sums to 1"
    assert info.value.actual == Fraction(31, 32)


def test_negative_prior_raises():
    with pytest.raises(FixtureViolation):
        parse_scenario(json.dumps(_minimal(("3/2", "-1/2"))))


def test_parse_error_reports_field_and_line():
    text = '{\n  "space": {\n    "outcomes": ["a", "b"],\n    "prior": ["1/2", "x"]\n  }\n}\n'
    with pytest.raises(ParseError) as info:
        parse_scenario(text)
    assert info.value.field == "space.prior"
    assert info.value.line == 2


def test_bad_json_reports_line():
    with pytest.raises(ParseError) as info:
        parse_scenario('{\n  "space": ,\n}')
    assert info.value.line == 2


def test_unknown_section_rejected():
    text = json.dumps({**_minimal(), "extras": {}}, indent=2)
    with pytest.raises(ParseError) as info:
        parse_scenario(text)
    assert info.value.field == "extras"
    expected = next(i for i, line in enumerate(text.splitlines(), 1) if '"extras"' in line)
    assert info.value.line == expected


def test_variable_must_cover_outcomes():
    raw = {**_minimal(), "variables": {"v": {"a": 1}}}
    with pytest.raises(ParseError) as info:
        parse_scenario(json.dumps(raw))
    assert info.value.field == "variables.v"


def test_true_outcome_must_exist():
    with pytest.raises(ParseError):
        parse_scenario(json.dumps({**_minimal(), "true_outcome": "c"}))


def test_unknown_seller_variable():
    raw = {**_minimal(), "sellers": [{"name": "s", "variables": ["nope"], "level": 0}]}
    with pytest.raises(ParseError):
        parse_scenario(json.dumps(raw))


def test_failing_fixture_raises(tmp_path):
    raw = {**_minimal(), "variables": {"v": {"a": 1, "b": 0}},
           "fixtures": [{"kind": "probability", "event": {"v": 1}, "equals": "1/3"}]}
    path = tmp_path / "bad.scenario"
    path.write_text(json.dumps(raw))
    with pytest.raises(FixtureViolation) as info:
        load_scenario(path)
    assert info.value.expected == Fraction(1, 3)
    assert load_scenario(path, check=False).space.p("a") == Fraction(1, 2)


def test_missing_scenario():
    with pytest.raises(FileNotFoundError):
        resolve_scenario_path("no-such-scenario")


def test_digest_is_stable(factcheck):
    assert factcheck.digest == parse_scenario(dumps(factcheck)).digest
    assert factcheck.digest != load_scenario("legume").digest


def test_save_and_load(tmp_path, legume):
    path = tmp_path / "legume.scenario"
    save_scenario(legume, path)
    assert path.read_text() == dumps(legume)
    assert load_scenario(path).problem == legume.problem


@pytest.mark.parametrize("t", range(10))
def test_generated_documents_roundtrip(t):
    space, problem, var = random_scenario(trial_rng(61, t))
    doc = dump_voi_scenario(space, problem, var)
    parsed = parse_scenario(dumps(doc))
    assert dumps(parsed) == dumps(doc)
    assert parsed.space == space
    space, problem, ladder = random_inspection_instance(trial_rng(62, t))
    doc = dump_inspection_scenario(space, problem, ladder)
    parsed = parse_scenario(dumps(doc))
    assert dumps(parsed) == dumps(doc)
    assert parsed.ladder() == ladder


def test_build_doc_orders_sections(factcheck):
    doc = build_doc(factcheck.space, factcheck.problem, [factcheck.variable("E")], name="x", true_outcome="111")
    assert list(json.loads(dumps(doc))) == ["name", "space", "variables", "true_outcome", "problem"]


def _record(**kw):
    base = dict(command="voi", scenario_digest="abc", engine_version="0.1.0", seed=3,
                outputs={"value": 0.5, "action": 0.1}, verdicts={"ok": True})
    base.update(kw)
    return RunRecord(**base)


def test_run_log_never_overwrites(tmp_path):
    rec = _record()
    a = append_run(rec, tmp_path)
    b = append_run(rec, tmp_path)
    assert a != b and a.exists() and b.exists()
    index = read_index(tmp_path)
    assert [e["file"] for e in index] == [a.name, b.name]
    assert all(e["passed"] for e in index)


def test_run_log_uses_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("INFOMARKET_RUN_DIR", str(tmp_path / "env"))
    path = append_run(_record(verdicts={"ok": False}))
    assert path.parent == tmp_path / "env"
    assert read_index()[0]["passed"] is False


def test_json_report_is_deterministic():
    a = emit_report(_record(wall_clock=1.0, created=1.0))
    b = emit_report(_record(wall_clock=9.0, created=2.0))
    assert a == b
    assert "wall_clock" not in json.loads(a)


def test_table_report():
    out = emit_report(_record(), "table").decode()
    assert "value" in out and "0.500000" in out and "ok: pass" in out
    with pytest.raises(ValueError):
        emit_report(_record(), "xml")


def test_scenario_files_are_plain_json():
    for name in SHIPPED:
        json.loads(Path(resolve_scenario_path(name)).read_text())

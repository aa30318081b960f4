"""Scenario documents, fixture assertions, run records and reports.

A scenario is a JSON document. Priors are fraction strings ("15/32") parsed to
exact rationals; utilities are decimal floats. ``dumps`` of a loaded canonical
document reproduces the file byte for byte.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import math
import os
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .decision import DecisionProblem, best_action, conditional_utilities
from .errors import FixtureViolation, ParseError
from .prob import Evidence, RandomVariable, SampleSpace, probability

SECTION_ORDER = (
    "name", "description", "space", "variables", "true_outcome", "problem",
    "ladder", "sellers", "market", "oversight", "params", "fixtures",
)
RUN_DIR_ENV = "INFOMARKET_RUN_DIR"


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _fraction(s, where: str, text: str) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise ParseError(f"expected a fraction string, got {s!r}", where, _line_of(text, where.split(".")[0]))
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad fraction {s!r}", where, _line_of(text, where.split(".")[0])) from None


def _frac_str(x: Fraction) -> str:
    return str(Fraction(x))


@dataclass
class ScenarioDoc:
    """A validated scenario; ``data`` is its canonical JSON form."""

    data: dict
    space: SampleSpace
    variables: dict
    problem: DecisionProblem | None
    source: str = ""

    @property
    def name(self) -> str:
        return self.data.get("name", "")

    @property
    def true_outcome(self):
        return self.data.get("true_outcome")

    @property
    def params(self) -> dict:
        return self.data.get("params", {})

    @property
    def digest(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()

    def variable(self, name: str) -> RandomVariable:
        try:
            return self.variables[name]
        except KeyError:
            raise ParseError(f"unknown variable {name!r}", "variables", None) from None

    def evidence(self, assignment: Mapping[str, Any]) -> Evidence:
        return Evidence(frozenset((self.variable(k), v) for k, v in assignment.items()))

    def ladder(self):
        from .inspection import Offer, OfferLadder

        spec = self.data.get("ladder")
        if spec is None:
            raise ParseError("scenario has no offer ladder", "ladder", None)

        def level(items):
            return tuple(Offer(self.variable(o["variable"]), float(o.get("price", 0.0))) for o in items)

        if "generative" in spec:
            return OfferLadder((), tuple((g["outcome"], tuple(level(lv) for lv in g["levels"])) for g in spec["generative"]))
        return OfferLadder(tuple(level(lv) for lv in spec["levels"]))

    def sellers(self):
        from .market import SellerAgent

        return [SellerAgent.from_dict(s, self.variables) for s in self.data.get("sellers", [])]

    def oversight_instance(self):
        from .oversight import OversightInstance

        spec = self.data.get("oversight")
        if spec is None:
            raise ParseError("scenario has no oversight section", "oversight", None)
        return OversightInstance.from_dict(spec, self.space, self.variables, self.problem, self.true_outcome)


# -- parsing ------------------------------------------------------------------


def _parse_space(raw: Any, text: str) -> tuple[SampleSpace, dict]:
    if not isinstance(raw, dict) or "outcomes" not in raw or "prior" not in raw:
        raise ParseError("space needs 'outcomes' and 'prior'", "space", _line_of(text, "space"))
    outcomes = [str(o) for o in raw["outcomes"]]
    prior = [_fraction(p, "space.prior", text) for p in raw["prior"]]
    if len(outcomes) != len(prior):
        raise ParseError("outcomes and prior differ in length", "space.prior", _line_of(text, "prior"))
    if len(set(outcomes)) != len(outcomes):
        raise ParseError("duplicate outcome labels", "space.outcomes", _line_of(text, "outcomes"))
    if any(p < 0 for p in prior):
        raise FixtureViolation("prior is nonnegative", ">= 0", min(prior))
    if sum(prior) != 1:
        raise FixtureViolation("prior sums to 1", Fraction(1), sum(prior))
    space = SampleSpace(tuple(outcomes), tuple(prior))
    return space, {"outcomes": outcomes, "prior": [_frac_str(p) for p in prior]}


def _parse_variables(raw: Any, space: SampleSpace, text: str) -> tuple[dict, dict]:
    if not isinstance(raw, dict):
        raise ParseError("variables must be an object", "variables", _line_of(text, "variables"))
    variables = {}
    canon = {}
    for name, table in raw.items():
        if not isinstance(table, dict):
            raise ParseError(f"variable {name!r} must map outcomes to values", f"variables.{name}", _line_of(text, name))
        missing = [o for o in space.outcomes if o not in table]
        extra = [o for o in table if o not in space.outcomes]
        if missing or extra:
            raise ParseError(f"variable {name!r} must cover exactly the outcomes (missing {missing}, extra {extra})",
                             f"variables.{name}", _line_of(text, name))
        variables[name] = RandomVariable(name, tuple((o, table[o]) for o in space.outcomes))
        canon[name] = {o: table[o] for o in space.outcomes}
    return variables, canon


def _parse_problem(raw: Any, space: SampleSpace, variables: dict, text: str) -> tuple[DecisionProblem, dict]:
    if "log_score" in raw:
        spec = raw["log_score"]
        event = spec.get("event")
        if event not in variables:
            raise ParseError(f"log-score event {event!r} is not a variable", "problem.log_score.event", _line_of(text, "event"))
        grid = [float(g) for g in spec["grid"]]
        occurs = spec.get("occurs", 1)
        try:
            problem = DecisionProblem.log_score(space, variables[event], grid, occurs)
        except ValueError as e:
            raise ParseError(str(e), "problem.log_score.grid", _line_of(text, "grid")) from None
        return problem, {"log_score": {"event": event, "occurs": occurs, "grid": grid}}
    actions = raw.get("actions")
    utility = raw.get("utility")
    if not isinstance(actions, list) or not isinstance(utility, dict):
        raise ParseError("problem needs 'actions' and a 'utility' table", "problem", _line_of(text, "problem"))
    missing = [o for o in space.outcomes if o not in utility]
    if missing:
        raise ParseError(f"utility table missing outcomes {missing}", "problem.utility", _line_of(text, "utility"))
    try:
        rows = {o: [float(u) for u in utility[o]] for o in space.outcomes}
        problem = DecisionProblem(tuple(actions), tuple((o, tuple(rows[o])) for o in space.outcomes))
    except (TypeError, ValueError) as e:
        raise ParseError(str(e), "problem.utility", _line_of(text, "utility")) from None
    return problem, {"actions": list(actions), "utility": rows}


def _canon_offer(o: Any, variables: dict, text: str) -> dict:
    if not isinstance(o, dict) or o.get("variable") not in variables:
        raise ParseError(f"offer {o!r} must name a known variable", "ladder", _line_of(text, "ladder"))
    return {"variable": o["variable"], "price": float(o.get("price", 0.0))}


def _parse_ladder(raw: Any, space: SampleSpace, variables: dict, text: str) -> dict:
    if "generative" in raw:
        gens = []
        for g in raw["generative"]:
            if g.get("outcome") not in space.outcomes:
                raise ParseError(f"generative ladder names unknown outcome {g.get('outcome')!r}", "ladder.generative", _line_of(text, "generative"))
            gens.append({"outcome": g["outcome"], "levels": [[_canon_offer(o, variables, text) for o in lv] for lv in g["levels"]]})
        if {g["outcome"] for g in gens} != set(space.outcomes):
            raise ParseError("generative ladder must be total over the outcomes", "ladder.generative", _line_of(text, "generative"))
        return {"generative": gens}
    levels = raw.get("levels")
    if not isinstance(levels, list):
        raise ParseError("ladder needs 'levels'", "ladder", _line_of(text, "ladder"))
    return {"levels": [[_canon_offer(o, variables, text) for o in lv] for lv in levels]}


def parse_scenario(text: str, source: str = "<string>") -> ScenarioDoc:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, "<json>", e.lineno) from None
    if not isinstance(raw, dict):
        raise ParseError("scenario must be a JSON object", "<root>", 1)
    unknown = [k for k in raw if k not in SECTION_ORDER]
    if unknown:
        raise ParseError(f"unknown sections {unknown}", unknown[0], _line_of(text, unknown[0]))
    if "space" not in raw:
        raise ParseError("missing 'space'", "space", None)
    data: dict = {}
    for key in ("name", "description"):
        if key in raw:
            data[key] = raw[key]
    space, data["space"] = _parse_space(raw["space"], text)
    variables, data["variables"] = _parse_variables(raw.get("variables", {}), space, text)
    if "true_outcome" in raw:
        if raw["true_outcome"] not in space.outcomes:
            raise ParseError(f"true outcome {raw['true_outcome']!r} not in the space", "true_outcome", _line_of(text, "true_outcome"))
        data["true_outcome"] = raw["true_outcome"]
    problem = None
    if "problem" in raw:
        problem, data["problem"] = _parse_problem(raw["problem"], space, variables, text)
    if "ladder" in raw:
        data["ladder"] = _parse_ladder(raw["ladder"], space, variables, text)
    for key in ("sellers", "market", "oversight", "params", "fixtures"):
        if key in raw:
            data[key] = raw[key]
    for s in data.get("sellers", []):
        for v in s.get("variables", []):
            if v not in variables:
                raise ParseError(f"seller {s.get('name')!r} holds unknown variable {v!r}", "sellers", _line_of(text, "sellers"))
    if "oversight" in data:
        ov = data["oversight"]
        for mv in ov.get("moves", []):
            if mv.get("variable") not in variables:
                raise ParseError(f"oversight move {mv.get('variable')!r} is not a variable", "oversight.moves", _line_of(text, "moves"))
            mv["price"] = float(mv.get("price", 0.0))
        if ov.get("knowledge") not in variables:
            raise ParseError("oversight knowledge must name a variable", "oversight.knowledge", _line_of(text, "knowledge"))
    return ScenarioDoc(data, space, variables, problem, source)


def load_scenario(path, check: bool = True) -> ScenarioDoc:
    """Load a scenario file (or a shipped fixture by bare name) and run its fixture assertions."""
    path = resolve_scenario_path(path)
    text = Path(path).read_text()
    doc = parse_scenario(text, str(path))
    if check:
        check_fixtures(doc)
    return doc


def shipped_scenarios() -> list[str]:
    folder = resources.files("infomarket") / "scenarios"
    return sorted(p.name[: -len(".scenario")] for p in folder.iterdir() if p.name.endswith(".scenario"))


def resolve_scenario_path(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    shipped = resources.files("infomarket") / "scenarios" / f"{p.name}.scenario"
    if shipped.is_file():
        return Path(str(shipped))
    raise FileNotFoundError(f"no scenario at {path!s} and no shipped fixture of that name")


def dumps(doc: ScenarioDoc | dict) -> str:
    data = doc.data if isinstance(doc, ScenarioDoc) else doc
    ordered = {k: data[k] for k in SECTION_ORDER if k in data}
    return json.dumps(ordered, indent=2, ensure_ascii=False) + "\n"


def save_scenario(doc: ScenarioDoc | dict, path) -> None:
    Path(path).write_text(dumps(doc))


# -- fixture assertions -------------------------------------------------------


def _assert_close(name: str, expected: float, actual: float, tol: float) -> None:
    if not math.isclose(actual, expected, rel_tol=0.0, abs_tol=tol):
        raise FixtureViolation(name, expected, actual)


def check_fixtures(doc: ScenarioDoc) -> int:
    """Run every assertion in the document's ``fixtures`` list; returns how many ran."""
    for i, fx in enumerate(doc.data.get("fixtures", [])):
        kind = fx.get("kind")
        label = fx.get("label") or f"fixture {i} ({kind})"
        given = doc.evidence(fx.get("given", {}))
        if kind == "probability":
            event = doc.evidence(fx["event"]) & given
            denom = probability(doc.space, given)
            if denom == 0:
                raise FixtureViolation(label, "positive-mass condition", Fraction(0))
            actual = probability(doc.space, event) / denom
            expected = Fraction(fx["equals"])
            if actual != expected:
                raise FixtureViolation(label, expected, actual)
        elif kind == "expectation":
            if doc.problem is None:
                raise ParseError("expectation fixture needs a problem", "fixtures", None)
            vals = conditional_utilities(doc.problem, doc.space, given)
            actual = vals[doc.problem.index(fx["action"])]
            _assert_close(label, float(fx["equals"]), actual, float(fx.get("tol", 1e-9)))
        elif kind == "best_action":
            actual, _ = best_action(doc.problem, doc.space, given)
            if actual != fx["equals"]:
                raise FixtureViolation(label, fx["equals"], actual)
        else:
            raise ParseError(f"unknown fixture kind {kind!r}", "fixtures", None)
    return len(doc.data.get("fixtures", []))


# -- builders for generated documents -----------------------------------------


def _space_section(space: SampleSpace) -> dict:
    return {"outcomes": list(space.outcomes), "prior": [_frac_str(p) for p in space.prior]}


def _variable_section(space: SampleSpace, variables) -> dict:
    return {v.name: {o: v(o) for o in space.outcomes} for v in variables}


def _problem_section(space: SampleSpace, problem: DecisionProblem) -> dict:
    return {"actions": list(problem.actions), "utility": {o: list(problem.row(o)) for o in space.outcomes}}


def build_doc(space: SampleSpace, problem: DecisionProblem | dict | None = None, variables=(), **sections) -> dict:
    data: dict = {}
    for key in ("name", "description"):
        if key in sections:
            data[key] = sections.pop(key)
    data["space"] = _space_section(space)
    data["variables"] = _variable_section(space, variables)
    if "true_outcome" in sections:
        data["true_outcome"] = sections.pop("true_outcome")
    if isinstance(problem, DecisionProblem):
        data["problem"] = _problem_section(space, problem)
    elif problem is not None:
        data["problem"] = problem
    data.update(sections)
    return {k: data[k] for k in SECTION_ORDER if k in data}


def dump_voi_scenario(space: SampleSpace, problem: DecisionProblem, variable: RandomVariable) -> dict:
    return build_doc(space, problem, [variable], name="lemma1-counterexample",
                     ladder={"levels": [[{"variable": variable.name, "price": 0.0}]]}, params={"depth": 1})


def dump_inspection_scenario(space: SampleSpace, problem: DecisionProblem, ladder, name: str = "inspection-instance") -> dict:
    seen: dict = {}

    def offer(o):
        seen.setdefault(o.variable.name, o.variable)
        return {"variable": o.variable.name, "price": o.price}

    if ladder.mode == "fixed":
        spec = {"levels": [[offer(o) for o in lv] for lv in ladder.levels]}
    else:
        spec = {"generative": [{"outcome": out, "levels": [[offer(o) for o in lv] for lv in lvls]}
                               for out, lvls in ladder.generator]}
    return build_doc(space, problem, list(seen.values()), name=name, ladder=spec, params={"depth": ladder.depth})


# -- run records --------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass
class RunRecord:
    command: str
    scenario_digest: str | None
    engine_version: str
    seed: int | None
    outputs: dict
    verdicts: dict = field(default_factory=dict)
    table: dict | None = None  # {"columns": [...], "rows": [[...]]}
    wall_clock: float = 0.0
    created: float = field(default_factory=time.time)

    def as_dict(self, timing: bool = True) -> dict:
        d = {
            "command": self.command,
            "scenario_digest": self.scenario_digest,
            "engine_version": self.engine_version,
            "seed": self.seed,
            "outputs": _jsonable(self.outputs),
            "verdicts": _jsonable(self.verdicts),
            "table": _jsonable(self.table),
        }
        if timing:
            d["wall_clock"] = self.wall_clock
            d["created"] = self.created
        return d


def run_dir() -> Path:
    return Path(os.environ.get(RUN_DIR_ENV) or Path.cwd() / ".infomarket-runs")


def append_run(record: RunRecord, directory: Path | None = None) -> Path:
    """Write the record as a new file and add it to the index; never overwrites."""
    directory = Path(directory) if directory is not None else run_dir()
    directory.mkdir(parents=True, exist_ok=True)
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime(record.created))
    body = json.dumps(record.as_dict(), indent=2, sort_keys=True) + "\n"
    digest = hashlib.sha256(body.encode()).hexdigest()[:10]
    index = directory / "index.jsonl"
    with open(index, "a") as idx:
        fcntl.flock(idx, fcntl.LOCK_EX)
        n = 0
        while True:
            path = directory / f"{stamp}-{digest}-{n}.json"
            try:
                with open(path, "x") as f:
                    f.write(body)
                break
            except FileExistsError:
                n += 1
        idx.write(json.dumps({"file": path.name, "command": record.command, "seed": record.seed,
                              "scenario_digest": record.scenario_digest,
                              "passed": all(bool(v) for v in record.verdicts.values())}) + "\n")
        fcntl.flock(idx, fcntl.LOCK_UN)
    return path


def read_index(directory: Path | None = None) -> list[dict]:
    directory = Path(directory) if directory is not None else run_dir()
    index = directory / "index.jsonl"
    if not index.exists():
        return []
    return [json.loads(line) for line in index.read_text().splitlines() if line.strip()]


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, (list, tuple)):
        return "{" + ", ".join(_cell(x) for x in v) + "}"
    return str(v)


def emit_report(record: RunRecord, fmt: str = "json") -> bytes:
    """Deterministic report for a run: ``json`` (structured) or ``table`` (plain text)."""
    if fmt == "json":
        return (json.dumps(record.as_dict(timing=False), indent=2, sort_keys=True) + "\n").encode()
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [f"# {record.command}  seed={record.seed}  scenario={(record.scenario_digest or '-')[:12]}"]
    table = record.table or {"columns": ["key", "value"],
                             "rows": [[k, v] for k, v in sorted(record.outputs.items()) if not isinstance(v, (dict, list))]}
    cols = [str(c) for c in table["columns"]]
    rows = [[_cell(v) for v in row] for row in table["rows"]]
    widths = [max([len(c)] + [len(r[i]) for r in rows]) for i, c in enumerate(cols)]
    lines.append("  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    for k, v in sorted(record.verdicts.items()):
        lines.append(f"{k}: {'pass' if v else 'FAIL'}")
    return ("\n".join(lines) + "\n").encode()

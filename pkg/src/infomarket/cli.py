"""Command-line entry point.

Exit codes: 0 on success (including verification suites that pass), 1 when a
suite finds a violation, 2 on usage, parse or fixture errors.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .decision import random_scenario, realized_voi, verify_gain_from_information, voi_ex_ante, voi_ex_post
from .errors import FixtureViolation, InfoMarketError, ParseError, ViolationFound
from .inspection import (InspectionGame, random_inspection_instance, solve_recursive, solve_successive,
                         verify_exante_superiority, verify_gain_from_inspection)
from .market import BuyerContext, random_market, run_one_level, run_rip
from .oversight import (dump_oversight_scenario, inextensible, random_oversight_instance, solve_spe,
                        verify_characterization_suite, verify_equilibrium_characterization)
from .prob import InfoGood, join
from .scenario import (RunRecord, append_run, build_doc, dump_inspection_scenario, dumps, emit_report,
                       load_scenario, save_scenario, shipped_scenarios)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- suites with worker fan-out ------------------------------------------------


def _suite_fn(name: str) -> Callable:
    return {
        "lemma1": verify_gain_from_information,
        "lemma2": verify_gain_from_inspection,
        "thm1": verify_exante_superiority,
        "thm2": verify_characterization_suite,
    }[name]


def _run_chunk(args):
    name, seed, start, count, extra = args
    return _suite_fn(name)(seed, count, raise_on_violation=False, start=start, **extra)


def run_suite(name: str, seed: int, trials: int, workers: int = 1, **extra) -> list:
    """Run a suite split into contiguous chunks; per-trial seeding keeps results independent of ``workers``."""
    workers = max(1, min(workers, trials or 1))
    size = math.ceil(trials / workers) if trials else 0
    chunks = [(name, seed, s, min(size, trials - s), extra) for s in range(0, trials, size)] if trials else []
    if workers == 1 or len(chunks) <= 1:
        return [_run_chunk(c) for c in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chunk, chunks))


# -- subcommands -----------------------------------------------------------------


def _load(args):
    if not args.scenario:
        raise UsageError("--scenario is required")
    return load_scenario(args.scenario)


def cmd_voi(args) -> RunRecord:
    doc = _load(args)
    truth = args.outcome or doc.true_outcome
    if truth is None:
        raise UsageError("scenario has no true outcome; pass --outcome")
    names = args.good or [o["variable"] for lv in doc.data.get("ladder", {}).get("levels", []) for o in lv]
    if not names:
        raise UsageError("no goods to value; pass --good")
    rows = []
    singles = [InfoGood.resolve(doc.variable(n), truth) for n in names]
    candidates = [(n, g) for n, g in zip(names, singles)]
    if len(singles) > 1:
        candidates.append(("+".join(names), join(singles, doc.space)))
    for label, good in candidates:
        rows.append([label, good.value, realized_voi(doc.problem, doc.space, good, truth),
                     voi_ex_post(doc.problem, doc.space, good), voi_ex_ante(doc.problem, doc.space, good.variable)])
    outputs = {"goods": [{"good": r[0], "value": r[1], "realized": r[2], "ex_post": r[3], "ex_ante": r[4]} for r in rows]}
    return RunRecord("voi", doc.digest, __version__, None, outputs, {},
                     {"columns": ["good", "value", "realized", "ex_post", "ex_ante"], "rows": rows})


def cmd_inspect(args) -> RunRecord:
    doc = _load(args)
    truth = args.outcome or doc.true_outcome
    ladder = doc.ladder()
    depth = args.depth or doc.params.get("depth") or ladder.depth
    modes = ["successive", "recursive"] if args.mode == "both" else [args.mode]
    rows, outputs = [], {}
    for mode in modes:
        solve = solve_successive if mode == "successive" else solve_recursive
        plan = solve(doc.problem, doc.space, ladder, truth, depth=depth, budget=args.budget)
        game = InspectionGame(doc.problem, doc.space, ladder, depth=depth, budget=args.budget)
        exante = game.successive_exante() if mode == "successive" else game.recursive_exante()
        realized = doc.problem.u(truth, doc.problem.index(plan.action)) - plan.total_price
        outputs[mode] = {**plan.as_dict(), "realized": realized, "exante": exante}
        rows.append([mode, plan.action, plan.names(), plan.total_price, realized, exante])
    return RunRecord(f"inspect --mode {args.mode} --depth {depth}", doc.digest, __version__, None, outputs, {},
                     {"columns": ["protocol", "action", "purchases", "price", "realized", "exante"], "rows": rows})


def cmd_oversight(args) -> RunRecord:
    if args.action == "suite":
        return _suite_record("thm2", args, bundles=args.bundles)
    doc = _load(args)
    inst = doc.oversight_instance()
    name = lambda m: "0" if m is None else inst.moves[m].name  # noqa: E731
    if args.action == "solve":
        _, path, ledger = solve_spe(inst)
        rows = [[n + 1, name(m), ledger.interim[n + 1], ledger.rewards[n]] for n, m in enumerate(path)]
        outputs = {"path": [name(m) for m in path], "interim": ledger.interim, "rewards": ledger.rewards,
                   "inextensible": {mv.name: inextensible(inst, (j,)) for j, mv in enumerate(inst.moves)}}
        return RunRecord("oversight solve", doc.digest, __version__, None, outputs, {},
                         {"columns": ["stage", "move", "interim_action", "reward"], "rows": rows})
    res = verify_equilibrium_characterization(inst, bundles=args.bundles)
    outputs = {"path": [name(m) for m in res.path], "first_value": res.first_value,
               "best_inextensible": res.best_other_move, "best_inextensible_value": res.best_other}
    verdicts = {f"bullet_{k}": v for k, v in res.bullets().items()}
    return RunRecord("oversight check", doc.digest, __version__, None, outputs, verdicts,
                     {"columns": ["bullet", "holds"], "rows": [[k, v] for k, v in res.bullets().items()]})


def cmd_market(args) -> RunRecord:
    doc = _load(args)
    market = doc.data.get("market", {})
    depth = args.depth or market.get("depth") or 1
    budget = args.budget if args.budget is not None else market.get("budget")
    ctx = BuyerContext(doc.problem, doc.space, args.outcome or doc.true_outcome, budget=budget, depth=depth)
    run = (run_one_level if args.one_level else run_rip)(ctx, doc.sellers())
    rows = [[n["depth"], [f"{o['good']}@{o['price']:g}" for o in n["offers"]], n["purchased"], n.get("action", "")]
            for n in run.nodes]
    return RunRecord(f"market --depth {depth}", doc.digest, __version__, None, run.trace(), {},
                     {"columns": ["depth", "offers", "purchased", "action"], "rows": rows})


def _merge_rows(reports) -> list:
    return [r for rep in reports for r in rep.rows]


def _suite_record(name: str, args, **extra) -> RunRecord:
    if args.seed is None:
        raise UsageError("--seed is required for randomized suites")
    t0 = time.perf_counter()
    reports = run_suite(name, args.seed, args.trials, args.workers, **extra)
    rows = _merge_rows(reports)
    if name == "thm2":
        failures = {k: sum(r.failures[k] for r in reports) for k in ("a", "b", "c")}
        examples = [e for r in reports for e in r.counterexamples]
        outputs = {"trials": args.trials, "failures": failures, "counterexamples": len(examples)}
        if examples and args.counterexamples:
            folder = Path(args.counterexamples)
            folder.mkdir(parents=True, exist_ok=True)
            for ex in examples:
                save_scenario(ex, folder / f"{ex['name']}.scenario")
        verdicts = {f"bullet_{k}": v == 0 for k, v in failures.items()}
        table = {"columns": ["trial", "path", "a", "b", "c", "slack"],
                 "rows": [[r["trial"], r["path"], r["a"], r["b"], r["c"], r["slack"]] for r in rows]}
    else:
        violations = sum(r.violations for r in reports)
        min_slack = min((r["slack"] for r in rows), default=0.0)
        outputs = {"trials": args.trials, "violations": violations, "min_slack": min_slack}
        if name == "thm1":
            outputs["instances_with_leaking_excess"] = sum(r.notes["instances_with_leaking_excess"] for r in reports)
        verdicts = {name: violations == 0}
        table = {"columns": ["trial", "slack"], "rows": [[r["trial"], r["slack"]] for r in rows]}
    record = RunRecord(f"verify {name} --trials {args.trials}", None, __version__, args.seed, outputs, verdicts, table)
    record.wall_clock = time.perf_counter() - t0
    return record


def cmd_verify(args) -> RunRecord:
    extra = {"bundles": True} if args.suite == "thm2" and args.bundles else {}
    return _suite_record(args.suite, args, **extra)


def cmd_gen(args) -> RunRecord:
    if args.seed is None:
        raise UsageError("--seed is required")
    rng = random.Random(args.seed)
    if args.kind == "voi":
        space, problem, variable = random_scenario(rng)
        truth = rng.choice(space.outcomes)
        doc = build_doc(space, problem, [variable], name=f"gen-voi-{args.seed}", true_outcome=truth,
                        ladder={"levels": [[{"variable": variable.name, "price": 0.0}]]},
                        params={"depth": 1, "seed": args.seed})
    elif args.kind == "inspection":
        space, problem, ladder = random_inspection_instance(rng)
        doc = dump_inspection_scenario(space, problem, ladder, name=f"gen-inspection-{args.seed}")
        doc["true_outcome"] = rng.choice(space.outcomes)
    elif args.kind == "oversight":
        doc = dump_oversight_scenario(random_oversight_instance(rng), name=f"gen-oversight-{args.seed}")
    else:
        ctx, sellers = random_market(rng)
        variables = [v for s in sellers for v in s.variables]
        doc = build_doc(ctx.space, ctx.problem, variables, name=f"gen-market-{args.seed}",
                        true_outcome=ctx.true_outcome, sellers=[s.to_dict() for s in sellers],
                        market={"depth": ctx.depth, "budget": None})
    text = dumps(doc)
    if args.output:
        Path(args.output).write_text(text)
    outputs = {"kind": args.kind, "path": args.output, "scenario": json.loads(text)}
    return RunRecord(f"gen --kind {args.kind}", None, __version__, args.seed, outputs, {},
                     {"columns": ["kind", "name", "written_to"], "rows": [[args.kind, doc["name"], args.output or "-"]]})


def cmd_list(args) -> RunRecord:
    names = shipped_scenarios()
    return RunRecord("list", None, __version__, None, {"scenarios": names}, {},
                     {"columns": ["scenario"], "rows": [[n] for n in names]})


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["table", "json"], default="table", help="report format (default: table)")
    common.add_argument("--no-record", action="store_true", help="do not append a run record to the run log")

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--scenario", help="scenario file, or the name of a shipped fixture")
    scen.add_argument("--outcome", help="override the scenario's true outcome")

    batch = argparse.ArgumentParser(add_help=False)
    batch.add_argument("--seed", type=int, help="seed (required)")
    batch.add_argument("--trials", type=int, default=100)
    batch.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="infomarket", description="Exact value-of-information and inspection engine.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("voi", parents=[common, scen], help="realized, ex-post and ex-ante value of goods")
    s.add_argument("--good", action="append", help="variable name (repeatable; joined goods are also valued)")
    s.set_defaults(func=cmd_voi)

    s = sub.add_parser("inspect", parents=[common, scen], help="solve an offer ladder with an inspection protocol")
    s.add_argument("--mode", choices=["successive", "recursive", "both"], default="recursive")
    s.add_argument("--depth", type=int)
    s.add_argument("--budget", type=float, help="cap on the price of any one purchased bundle")
    s.set_defaults(func=cmd_inspect)

    s = sub.add_parser("oversight", parents=[common, scen, batch], help="the marginal value oversight game")
    s.add_argument("action", choices=["solve", "check", "suite"])
    s.add_argument("--bundles", action="store_true", help="compare against inextensible bundles, not single moves")
    s.add_argument("--counterexamples", help="directory for failing instances (suite only)")
    s.set_defaults(func=cmd_oversight)

    s = sub.add_parser("market", parents=[common, scen], help="simulate sellers and an exact buyer")
    s.add_argument("--depth", type=int)
    s.add_argument("--budget", type=float)
    s.add_argument("--one-level", action="store_true", help="single inspection round with level-0 sellers only")
    s.set_defaults(func=cmd_market)

    s = sub.add_parser("verify", parents=[common, batch], help="run a randomized property suite")
    s.add_argument("suite", choices=["lemma1", "lemma2", "thm1", "thm2"])
    s.add_argument("--bundles", action="store_true", help="thm2: bundle reading of the maximality bullet")
    s.add_argument("--counterexamples", help="thm2: directory for failing instances")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("gen", parents=[common], help="write a random scenario file")
    s.add_argument("--seed", type=int)
    s.add_argument("--kind", choices=["voi", "inspection", "oversight", "market"], default="voi")
    s.add_argument("-o", "--output", help="output path")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("list", parents=[common], help="list shipped scenarios")
    s.set_defaults(func=cmd_list)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if getattr(args, "trials", 1) is not None and getattr(args, "trials", 1) < 0:
        print("error: --trials must be nonnegative", file=sys.stderr)
        return EXIT_USAGE
    try:
        t0 = time.perf_counter()
        record = args.func(args)
        record.wall_clock = record.wall_clock or time.perf_counter() - t0
    except (UsageError, ParseError, FixtureViolation, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ViolationFound as e:
        print(f"violation: {e}", file=sys.stderr)
        if e.scenario is not None:
            sys.stdout.write(dumps(e.scenario))
        return EXIT_VIOLATION
    except InfoMarketError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.buffer.write(emit_report(record, args.format))
    sys.stdout.flush()
    if not args.no_record:
        append_run(record)
    return EXIT_OK if all(record.verdicts.values()) else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands:

* ``run``       — execute a machine on the world engine, write a trace.
* ``verify``    — lockstep-verify a machine against the reference
                  interpreter, plus optional random-machine sweeps.
* ``compile``   — export a compiled command program; optionally diff it
                  against the shipped table fixture.
* ``demo-bb3``  — run the three-state Busy Beaver and render each
                  instruction as an aligned text line.
* ``cost``      — run a machine and print the per-instruction overhead
                  report with its bounds.

Exit status: 0 success, 1 divergence/diff/bound failure, 2 parse or usage
error, 3 stuck machine, 4 step limit reached. Traces and reports are
line-delimited JSON with sorted keys, so identical invocations produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import codec, harness, tables
from .controller import compile_program, execute_instruction, macro_paper_command, program_to_json
from .errors import CivUtmError, MachineStuck
from .tm import BUILTIN_NAMES, TMSpec, builtin_program, count_symbol, load_spec
from .world import RULESET_VI, RULESETS, RulesetParams, init_world, yields

TRACE_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_STUCK = 3
EXIT_STEP_LIMIT = 4


def _load_machine(args) -> TMSpec:
    name = getattr(args, "builtin", None) or args.machine
    if name is None:
        raise CivUtmError("no machine given: pass a file path, a built-in name, or --builtin")
    if name in BUILTIN_NAMES:
        return builtin_program(name)
    path = Path(name)
    if not path.exists():
        raise CivUtmError(f"{name!r} is neither a built-in machine nor an existing file")
    return load_spec(path)


def _load_tape(args) -> dict[int, str]:
    if not getattr(args, "tape", None):
        return {}
    data = json.loads(Path(args.tape).read_text())
    if not isinstance(data, dict):
        raise CivUtmError("tape file must be a JSON object mapping cell index to symbol")
    return {int(cell): sym for cell, sym in data.items()}


def _load_params(args) -> RulesetParams | None:
    params = RulesetParams.defaults(args.ruleset)
    if getattr(args, "params", None):
        overrides = json.loads(Path(args.params).read_text())
        if not isinstance(overrides, dict):
            raise CivUtmError("params file must be a JSON object")
        known = {f.name for f in dataclasses.fields(RulesetParams)}
        for key, value in overrides.items():
            if key not in known:
                raise CivUtmError(f"unknown parameter {key!r}")
            if key == "ruleset" and value != args.ruleset:
                raise CivUtmError(f"params file is for ruleset {value!r}, not {args.ruleset!r}")
            setattr(params, key, value)
    return params.validate()


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _write_lines(path: str, lines: list[str]) -> None:
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Game-side driver shared by run / demo / cost
# ---------------------------------------------------------------------------


def _drive_game(spec: TMSpec, ruleset: str, tape: dict[int, str], max_instructions: int, params: RulesetParams | None):
    """Run the game side alone; returns (program, world, records, boundaries, outcome).

    ``boundaries`` holds one entry per instruction boundary (the initial one
    included): the decoded configuration, the world turn, the yields, and
    the city census for VI.
    """
    program = compile_program(spec, ruleset, params)
    world = init_world(ruleset, codec.encode_tape(tape, program), params)

    def boundary():
        entry = {"decoded": codec.decode(world, program), "turn": world.turn, "yields": yields(world)}
        if ruleset == RULESET_VI:
            entry["cities"] = [
                {"index": c.index, "citizens": c.citizens, "growth_cap": c.growth_cap, "food_stock": c.food_stock}
                for _, c in sorted(world.cities.items())
            ]
        return entry

    records = []
    boundaries = [boundary()]
    outcome = "step-limit"
    for index in range(1, max_instructions + 1):
        try:
            record = execute_instruction(world, program, index=index)
        except MachineStuck:
            outcome = "stuck"
            break
        records.append(record)
        boundaries.append(boundary())
        if record.halted:
            outcome = "halted"
            break
    return program, world, records, boundaries, outcome


def _trace_lines(boundaries) -> list[str]:
    lines = [_dump({"format_version": TRACE_FORMAT_VERSION, "kind": "trace"})]
    prev_tape: dict[int, str] = {}
    for i, entry in enumerate(boundaries):
        cfg = entry["decoded"].config
        changed = {}
        for cell in sorted(set(prev_tape) | set(cfg.tape)):
            if prev_tape.get(cell) != cfg.tape.get(cell):
                changed[str(cell)] = cfg.tape.get(cell)
        rec = {
            "instruction": i,
            "turn": entry["turn"],
            "state": cfg.state,
            "head": cfg.head,
            "changed_cells": changed,
            "yields": entry["yields"],
        }
        if "cities" in entry:
            rec["cities"] = entry["cities"]
        prev_tape = dict(cfg.tape)
        lines.append(_dump(rec))
    return lines


def _summary(world, records, boundaries, outcome) -> dict:
    final = boundaries[-1]["decoded"].config
    return {
        "outcome": outcome,
        "instructions": len(records),
        "total_turns": world.turn,
        "final_state": final.state,
        "final_head": final.head,
        "final_tape": {str(k): v for k, v in sorted(final.tape.items())},
        "extension_events": sum(1 for r in records if r.extension),
    }


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    spec = _load_machine(args)
    tape = _load_tape(args)
    params = _load_params(args)
    program, world, records, boundaries, outcome = _drive_game(spec, args.ruleset, tape, args.max_instructions, params)
    if args.out:
        _write_lines(args.out, _trace_lines(boundaries))
    print(_dump(_summary(world, records, boundaries, outcome)))
    if outcome == "halted":
        return EXIT_OK
    return EXIT_STUCK if outcome == "stuck" else EXIT_STEP_LIMIT


def cmd_verify(args) -> int:
    spec = _load_machine(args)
    tape = _load_tape(args)
    params = _load_params(args)
    report = harness.lockstep_verify(spec, args.ruleset, tape, args.max_instructions, params)
    print(_dump({"lockstep": report.to_json()}))
    ok = report.first_divergence is None
    over = harness.overhead_report(report.records, params, compile_program(spec, args.ruleset, params))
    print(_dump({"overhead": over.to_json()}))
    ok = ok and over.paper_bound_satisfied and over.derived_bound_satisfied

    for seed in _parse_seeds(args.seeds):
        rnd = harness.random_tm(seed, args.random_states, 2 if args.ruleset == RULESET_VI else args.random_symbols)
        sweep = harness.lockstep_verify(rnd, args.ruleset, {}, args.max_instructions, params)
        print(_dump({"seed": seed, "lockstep": sweep.to_json()}))
        ok = ok and sweep.first_divergence is None
    return EXIT_OK if ok else EXIT_FAIL


def _parse_seeds(seeds: str | None) -> list[int]:
    if not seeds:
        return []
    return [int(s) for s in seeds.split(",") if s]


def cmd_compile(args) -> int:
    spec = _load_machine(args)
    params = _load_params(args)
    program = compile_program(spec, args.ruleset, params)
    export = program_to_json(program)
    if args.out:
        Path(args.out).write_text(json.dumps(export, indent=1, sort_keys=True) + "\n")
    print(_dump({"ruleset": args.ruleset, "macros": len(program.macros)}))
    if args.diff_fixture:
        name = getattr(args, "builtin", None) or args.machine
        fixture_name = tables.FIXTURE_FOR.get((args.ruleset, name))
        if fixture_name is None:
            print(_dump({"error": f"no shipped fixture for {name!r} on ruleset {args.ruleset}"}))
            return EXIT_PARSE
        diffs = tables.table_fidelity(program, tables.load_fixture(fixture_name))
        print(_dump({"fixture": fixture_name, "differences": diffs}))
        return EXIT_OK if not diffs else EXIT_FAIL
    return EXIT_OK


def cmd_demo_bb3(args) -> int:
    spec = builtin_program("bb3")
    params = _load_params(args)
    program, world, records, boundaries, outcome = _drive_game(spec, args.ruleset, {}, args.max_instructions, params)

    cells = set()
    for entry in boundaries:
        cells.update(entry["decoded"].config.tape)
        cells.add(entry["decoded"].config.head)
    lo, hi = (min(cells), max(cells)) if cells else (0, 0)

    def render(cfg) -> str:
        out = []
        for cell in range(lo, hi + 1):
            sym = cfg.tape.get(cell, spec.blank)
            out.append(f"[{sym}]" if cell == cfg.head else f" {sym} ")
        return "".join(out)

    evidence_key = "faith_delta" if args.ruleset == RULESET_VI else ("culture_delta" if args.ruleset == "BE" else "railroads")
    print(f"tape cells {lo}..{hi}, head bracketed; state evidence: {evidence_key}")
    first = boundaries[0]["decoded"].config
    print(f"t00  state {first.state:>3}  {render(first)}")
    for record, entry in zip(records, boundaries[1:]):
        cfg = entry["decoded"].config
        macro = record.macro
        did = "HALT" if macro is None or macro.halt else macro_paper_command(macro, args.ruleset)
        evidence = entry["decoded"].state_evidence.get(evidence_key)
        print(
            f"t{record.index:02d}  state {cfg.state:>3}  {render(cfg)}  "
            f"turns {record.turns:3d}  evidence {evidence}  | {did}"
        )
    ones = count_symbol(boundaries[-1]["decoded"].config, "1")
    print(f"outcome: {outcome} after {len(records)} instructions, {world.turn} turns; tape holds {ones} ones")
    if args.out:
        _write_lines(args.out, _trace_lines(boundaries))
    return EXIT_OK if outcome == "halted" else EXIT_FAIL


def cmd_cost(args) -> int:
    spec = _load_machine(args)
    tape = _load_tape(args)
    params = _load_params(args)
    report = harness.lockstep_verify(spec, args.ruleset, tape, args.max_instructions, params)
    if report.first_divergence is not None:
        print(_dump({"lockstep": report.to_json()}))
        return EXIT_FAIL
    program = compile_program(spec, args.ruleset, params)
    over = harness.overhead_report(report.records, params, program)
    print(_dump({"overhead": over.to_json()}))
    return EXIT_OK if over.paper_bound_satisfied and over.derived_bound_satisfied else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="civutm", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, machine_arg=True):
        if machine_arg:
            p.add_argument("machine", nargs="?", help="built-in machine name or JSON machine file")
            p.add_argument("--builtin", choices=BUILTIN_NAMES, help="use a built-in machine")
        p.add_argument("--ruleset", choices=RULESETS, default="BE")
        p.add_argument("--params", help="JSON file overriding ruleset parameters")
        p.add_argument("--max-instructions", type=int, default=1000)
        p.add_argument("--out", help="output file")

    p_run = sub.add_parser("run", help="run a machine on the world engine")
    common(p_run)
    p_run.add_argument("--tape", help="JSON file mapping cell index to symbol")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="lockstep-verify a machine against the reference interpreter")
    common(p_verify)
    p_verify.add_argument("--tape", help="JSON file mapping cell index to symbol")
    p_verify.add_argument("--seeds", "--seed", help="comma-separated seeds for a random-machine sweep")
    p_verify.add_argument("--random-states", type=int, default=5)
    p_verify.add_argument("--random-symbols", type=int, default=3)
    p_verify.set_defaults(func=cmd_verify)

    p_compile = sub.add_parser("compile", help="compile a machine into a command program")
    common(p_compile)
    p_compile.add_argument("--diff-fixture", action="store_true", help="diff against the shipped table fixture")
    p_compile.set_defaults(func=cmd_compile)

    p_demo = sub.add_parser("demo-bb3", help="run the three-state Busy Beaver with a text rendering")
    common(p_demo, machine_arg=False)
    p_demo.set_defaults(func=cmd_demo_bb3, max_instructions=100)

    p_cost = sub.add_parser("cost", help="overhead report for a verified run")
    common(p_cost)
    p_cost.add_argument("--tape", help="JSON file mapping cell index to symbol")
    p_cost.set_defaults(func=cmd_cost)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CivUtmError, json.JSONDecodeError, OSError, ValueError) as exc:
        print(_dump({"error": str(exc)}), file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

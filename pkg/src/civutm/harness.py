"""Lockstep equivalence verification, overhead accounting, random machines.

``lockstep_verify`` runs the reference interpreter and the game construction
side by side. After every game instruction it decodes the world back into a
configuration and compares state identifier, head index, and canonical
sparse tape against the oracle — exact equality, halting included. A
divergence is a report outcome, not an exception.

``overhead_report`` turns the instruction-boundary events of a completed run
into per-instruction turn counts and compares them against the published
per-instruction bounds (5T+M for BE, 4·B_rr+1 for V, C+S(L)+3 per tape
extension for VI) and against a tight bound derived from the parameters.
Turns the published bounds do not count (movement, the extra pillage turn,
growth waits) are itemized, never hidden.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import codec
from .controller import (
    CommandMacro,
    ControllerProgram,
    InstructionRecord,
    TapeAction,
    compile_program,
    execute_instruction,
)
from .errors import MachineStuck
from .tm import Halted, TMConfig, TMSpec, Transition, initial_config, step, validate_spec
from .world import RULESET_BE, RULESET_V, RULESET_VI, RulesetParams, WorldState, init_world

EQUIVALENT = "equivalent"
DIVERGED = "diverged"
ORACLE_STUCK = "oracle-stuck"
STEP_LIMIT = "step-limit"


@dataclass
class LockstepReport:
    """Outcome of one side-by-side run."""

    ruleset: str
    outcome: str
    instructions_verified: int
    first_divergence: dict | None = None
    halted: bool = False
    oracle_steps: int = 0
    final_config: TMConfig | None = None
    records: list[InstructionRecord] = field(default_factory=list)
    world: WorldState | None = None
    min_food_stock: int | None = None

    def to_json(self) -> dict:
        out = {
            "ruleset": self.ruleset,
            "outcome": self.outcome,
            "instructions_verified": self.instructions_verified,
            "halted": self.halted,
            "oracle_steps": self.oracle_steps,
        }
        if self.first_divergence is not None:
            out["first_divergence"] = self.first_divergence
        if self.min_food_stock is not None:
            out["min_food_stock"] = self.min_food_stock
        return out


def _config_json(config: TMConfig) -> dict:
    return {"state": config.state, "head": config.head, "tape": {str(k): v for k, v in sorted(config.tape.items())}}


def lockstep_verify(
    spec: TMSpec,
    ruleset: str,
    initial_tape: dict[int, str] | None = None,
    max_instructions: int = 100,
    params: RulesetParams | None = None,
    program: ControllerProgram | None = None,
) -> LockstepReport:
    """Run oracle and game side by side, comparing at every boundary.

    ``program`` may be supplied pre-compiled (e.g. deliberately corrupted);
    by default the machine is compiled fresh for the ruleset.
    """
    program = program or compile_program(spec, ruleset, params)
    content = codec.encode_tape(initial_tape or {}, program)
    world = init_world(ruleset, content, params)
    report = LockstepReport(ruleset=ruleset, outcome=STEP_LIMIT, instructions_verified=0, world=world)

    oracle = initial_config(spec, initial_tape or {})
    decoded = codec.decode(world, program)
    if decoded.config != oracle:
        report.outcome = DIVERGED
        report.first_divergence = {
            "instruction": 0,
            "oracle": _config_json(oracle),
            "decoded": _config_json(decoded.config) if decoded.config else None,
        }
        return report

    for index in range(1, max_instructions + 1):
        oracle_stuck = game_stuck = False
        oracle_halted = False
        if oracle.state in spec.halting:
            oracle_halted = True  # absorbed; no application counted
        else:
            try:
                next_oracle = step(spec, oracle)
            except MachineStuck:
                oracle_stuck = True
            else:
                report.oracle_steps += 1
                if isinstance(next_oracle, Halted):
                    oracle_halted = True
                    oracle = next_oracle.config
                else:
                    oracle = next_oracle

        record = None
        try:
            record = execute_instruction(world, program, index=index)
        except MachineStuck:
            game_stuck = True

        if oracle_stuck or game_stuck:
            if oracle_stuck and game_stuck:
                report.outcome = ORACLE_STUCK
            else:
                report.outcome = DIVERGED
                report.first_divergence = {
                    "instruction": index,
                    "oracle": "stuck" if oracle_stuck else _config_json(oracle),
                    "decoded": "stuck" if game_stuck else "ran",
                }
            break
        report.records.append(record)

        decoded = codec.decode(world, program)
        if not decoded.boundary or decoded.config != oracle:
            report.outcome = DIVERGED
            report.first_divergence = {
                "instruction": index,
                "oracle": _config_json(oracle),
                "decoded": _config_json(decoded.config) if decoded.config else "mid-instruction",
            }
            break
        if oracle_halted != record.halted:
            report.outcome = DIVERGED
            report.first_divergence = {
                "instruction": index,
                "oracle": "halted" if oracle_halted else "running",
                "decoded": "halted" if record.halted else "running",
            }
            break
        report.instructions_verified = index
        if oracle_halted:
            report.outcome = EQUIVALENT
            report.halted = True
            break

    report.final_config = oracle
    if ruleset == RULESET_VI:
        # advance_turn raises Starvation the moment any stock would dip below
        # zero; min_food_observed is the running minimum it saw each turn.
        report.min_food_stock = world.min_food_observed
    return report


# ---------------------------------------------------------------------------
# Overhead accounting
# ---------------------------------------------------------------------------


@dataclass
class OverheadReport:
    ruleset: str
    per_instruction: list[dict]
    max_observed: int
    paper_bound: int | None  # 5T+M (BE) or 4*B_rr+1 (V); None for VI
    derived_bound: int | None
    paper_bound_satisfied: bool
    derived_bound_satisfied: bool
    excesses: list[dict]  # instructions whose counted turns exceed the paper bound
    extensions: list[dict] = field(default_factory=list)  # VI only

    def to_json(self) -> dict:
        return {
            "ruleset": self.ruleset,
            "max_observed": self.max_observed,
            "paper_bound": self.paper_bound,
            "derived_bound": self.derived_bound,
            "paper_bound_satisfied": self.paper_bound_satisfied,
            "derived_bound_satisfied": self.derived_bound_satisfied,
            "per_instruction": self.per_instruction,
            "excesses": self.excesses,
            "extensions": self.extensions,
        }


def _macro_costs(macro: CommandMacro, params: RulesetParams) -> tuple[int, int]:
    """(tape turns, state turns) one macro costs, movement excluded."""
    p = params
    action = macro.tape_action
    tape = {
        TapeAction.LEAVE: 0,
        TapeAction.BUILD_ROAD: p.road_build_turns,
        TapeAction.BUILD_RAILROAD: p.railroad_build_turns,
        TapeAction.REMOVE_IMPROVEMENT: p.remove_or_repair_turns,
        TapeAction.PILLAGE_ROAD: p.remove_or_repair_turns,
        TapeAction.REPAIR_ROAD: p.remove_or_repair_turns,
        TapeAction.BUILD_ROAD_THEN_PILLAGE: p.road_build_turns + p.remove_or_repair_turns,
        TapeAction.SET_WORKED: 0,
        TapeAction.SET_UNWORKED: 0,
    }[action]
    if action in (TapeAction.BUILD_ROAD, TapeAction.BUILD_RAILROAD) and macro.read_symbol != "none":
        tape += p.remove_or_repair_turns  # the standing improvement is removed first
    build_cost = p.terrascape_build_turns if p.ruleset == RULESET_BE else p.railroad_build_turns
    state = macro.state_delta * build_cost if macro.state_delta > 0 else -macro.state_delta * p.remove_or_repair_turns
    return tape, state


def paper_instruction_bound(ruleset: str, params: RulesetParams) -> int | None:
    """The published per-instruction overhead bound (movement not counted)."""
    if ruleset == RULESET_BE:
        return 5 * params.terrascape_build_turns + params.road_build_turns
    if ruleset == RULESET_V:
        return 4 * params.railroad_build_turns + 1
    return None  # VI's published bound is per tape extension, see below


def paper_extension_bound(params: RulesetParams, settler_cost_turns: int) -> int:
    """C + S(L) + 3: full growth of the new city (2 citizens to its cap of 4),
    the settler's training time in turns, and the founding turns."""
    grow = 2 * params.city_growth_turns
    return grow + settler_cost_turns + params.settler_found_turns


def derived_instruction_bound(program: ControllerProgram, params: RulesetParams) -> int | None:
    """Tight per-instruction bound from the compiled macros, movement and the
    pillage turn included. The tape worker moves after its tape job while the
    state worker may still be building, so the two tracks run concurrently."""
    if program.ruleset == RULESET_VI:
        return None
    move = params.worker_move_turns_per_hex
    worst = 0
    for macro in program.macros.values():
        tape, state = _macro_costs(macro, params)
        total = max(tape + (0 if macro.halt else move), state)
        worst = max(worst, total)
    return worst


def overhead_report(
    records: list[InstructionRecord],
    params: RulesetParams,
    program: ControllerProgram,
) -> OverheadReport:
    """Per-instruction turn accounting for a completed lockstep run."""
    per_instruction = []
    excesses = []
    extensions = []
    paper = paper_instruction_bound(program.ruleset, params)
    derived = derived_instruction_bound(program, params)
    max_observed = 0
    paper_ok = True
    derived_ok = True

    for rec in records:
        entry = {
            "instruction": rec.index,
            "turns": rec.turns,
            "movement_turns": rec.movement_turns,
            "extension": rec.extension,
        }
        per_instruction.append(entry)
        max_observed = max(max_observed, rec.turns)

        if program.ruleset == RULESET_VI:
            if rec.extension:
                bound = paper_extension_bound(params, rec.settler_cost_turns)
                counted = rec.turns - rec.movement_turns - rec.pre_train_wait
                ext = {
                    "instruction": rec.index,
                    "turns": rec.turns,
                    "counted_turns": counted,
                    "paper_bound": bound,
                    "tape_length_before": rec.tape_length_before,
                    "settler_cost_production": rec.settler_cost_production,
                    "settler_cost_turns": rec.settler_cost_turns,
                    "itemized_excess": {
                        "settler_movement": rec.movement_turns,
                        "pre_train_wait": rec.pre_train_wait,
                    },
                }
                extensions.append(ext)
                if counted > bound:
                    paper_ok = False
                if rec.turns > bound + rec.movement_turns + rec.pre_train_wait:
                    derived_ok = False
            elif rec.turns > rec.movement_turns:
                derived_ok = False  # a non-extension VI instruction is pure movement
            continue

        counted = rec.turns - rec.movement_turns
        if paper is not None and counted > paper:
            paper_ok = False
        if paper is not None and rec.turns > paper:
            excesses.append(
                {
                    "instruction": rec.index,
                    "turns": rec.turns,
                    "paper_bound": paper,
                    "itemized_excess": {"movement": rec.movement_turns},
                }
            )
        if derived is not None and rec.turns > derived:
            derived_ok = False

    return OverheadReport(
        ruleset=program.ruleset,
        per_instruction=per_instruction,
        max_observed=max_observed,
        paper_bound=paper,
        derived_bound=derived,
        paper_bound_satisfied=paper_ok,
        derived_bound_satisfied=derived_ok,
        excesses=excesses,
        extensions=extensions,
    )


# ---------------------------------------------------------------------------
# Random machines
# ---------------------------------------------------------------------------


def random_tm(seed: int, num_states: int, num_symbols: int) -> TMSpec:
    """A seeded, reproducible machine with a total transition function.

    States are ``q0..q{n-1}`` with ``q0`` initial; the last state is halting
    (for ``num_states >= 2``) and at least one transition targets it. The
    blank is symbol ``"0"``.
    """
    if not 1 <= num_symbols <= 3:
        raise ValueError("num_symbols must be between 1 and 3")
    if num_states < 1:
        raise ValueError("num_states must be >= 1")
    rng = random.Random(seed)
    states = tuple(f"q{i}" for i in range(num_states))
    alphabet = ("0", "1", "b")[:num_symbols]
    halting = (states[-1],) if num_states >= 2 else (states[0],)
    working = [st for st in states if st not in halting]
    transitions: dict[tuple[str, str], Transition] = {}
    for state in working:
        for sym in alphabet:
            transitions[(state, sym)] = Transition(
                write=rng.choice(alphabet),
                move=rng.choice(("L", "R")),
                next_state=rng.choice(states),
            )
    if working:
        key = (rng.choice(working), rng.choice(alphabet))
        old = transitions[key]
        transitions[key] = Transition(write=old.write, move=old.move, next_state=halting[0])
    spec = TMSpec(
        states=states,
        alphabet=alphabet,
        blank="0",
        input_alphabet=alphabet[1:],
        initial=states[0],
        halting=halting,
        transitions=transitions,
    )
    return validate_spec(spec)

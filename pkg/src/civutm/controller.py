"""The compiler and driver: machine transitions become worker-command macros.

``compile_program`` translates every (state, read symbol) transition into a
:class:`CommandMacro` (one tape action, one head move, one signed state-index
change), assigning state indices by declaration order with the initial state
at index 0. Identity writes are normalized to ``leave`` because the games
forbid rebuilding an existing improvement, and writes over a conflicting
improvement expand to remove-then-build at execution time.

``execute_instruction`` runs one macro against a world: it issues the tape,
state, and movement commands to the workers, advances turns until every job
is done, and returns the world at the next instruction boundary. For VI, a
head move that leaves the built strip triggers the tape-extension procedure
(train a Settler, found a city, grow it to its cap).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .codec import read_cell, state_index, symbol_map
from .errors import CompileError, DecodeError, IllegalCommand, MachineStuck
from .tm import HaltAction, TMSpec, validate_spec
from .world import (
    PLAYER,
    ROVER,
    RULESET_BE,
    RULESET_V,
    RULESET_VI,
    SETTLER,
    STATE_WORKER,
    TAPE_WORKER,
    Command,
    Improvement,
    RulesetParams,
    WorldState,
    advance_turn,
    apply_command,
)

PROGRAM_FORMAT_VERSION = 1


class TapeAction(str, Enum):
    LEAVE = "leave"
    BUILD_ROAD = "build_road"
    REMOVE_IMPROVEMENT = "remove_improvement"
    PILLAGE_ROAD = "pillage_road"
    REPAIR_ROAD = "repair_road"
    BUILD_RAILROAD = "build_railroad"
    BUILD_ROAD_THEN_PILLAGE = "build_road_then_pillage"
    SET_WORKED = "set_worked"
    SET_UNWORKED = "set_unworked"


@dataclass(frozen=True)
class CommandMacro:
    """What one machine instruction asks of the workers."""

    tape_action: TapeAction
    head_move: str | None  # "L" | "R" | None on halt
    state_delta: int
    halt: bool = False
    read_symbol: str = ""  # game symbol this macro fires on
    write_symbol: str = ""  # game symbol the cell holds afterwards


@dataclass(frozen=True)
class MacroPlan:
    """A macro plus the extension steps its needs-settler variant appends."""

    macro: CommandMacro
    extension_steps: tuple[str, ...]


@dataclass
class ControllerProgram:
    """A compiled machine: bijections plus one macro per transition."""

    ruleset: str
    spec: TMSpec
    state_index_of: dict[str, int]
    index_to_state: tuple[str, ...]
    symbol_of: dict[str, str]  # machine symbol -> game symbol
    symbol_from_game: dict[str, str]
    macros: dict[tuple[int, str], CommandMacro]  # (state index, game read symbol)
    extension_policy: dict | None = None


# Tape action for writing `write` over `read`, per ruleset. Identity writes
# never appear here (normalized to LEAVE before lookup).
_TAPE_ACTIONS = {
    RULESET_BE: {
        ("none", "road"): TapeAction.BUILD_ROAD,
        ("none", "pillaged_road"): TapeAction.BUILD_ROAD_THEN_PILLAGE,
        ("road", "none"): TapeAction.REMOVE_IMPROVEMENT,
        ("road", "pillaged_road"): TapeAction.PILLAGE_ROAD,
        ("pillaged_road", "none"): TapeAction.REMOVE_IMPROVEMENT,
        ("pillaged_road", "road"): TapeAction.REPAIR_ROAD,
    },
    RULESET_V: {
        ("none", "road"): TapeAction.BUILD_ROAD,
        ("none", "railroad"): TapeAction.BUILD_RAILROAD,
        ("road", "none"): TapeAction.REMOVE_IMPROVEMENT,
        ("road", "railroad"): TapeAction.BUILD_RAILROAD,
        ("railroad", "none"): TapeAction.REMOVE_IMPROVEMENT,
        ("railroad", "road"): TapeAction.BUILD_ROAD,
    },
    RULESET_VI: {
        ("unworked", "worked"): TapeAction.SET_WORKED,
        ("worked", "unworked"): TapeAction.SET_UNWORKED,
    },
}


def compile_program(spec: TMSpec, ruleset: str, params: RulesetParams | None = None) -> ControllerProgram:
    """Compile a machine for a ruleset, or raise :class:`CompileError`."""
    validate_spec(spec)
    params = (params or RulesetParams.defaults(ruleset)).validate()
    symbols = symbol_map(spec, ruleset)  # checks the alphabet bound
    max_index = len(spec.states) - 1
    if max_index > params.state_region_tiles:
        raise CompileError(
            f"{len(spec.states)} states need a state region of at least {max_index} tiles; "
            f"params provide {params.state_region_tiles}"
        )

    ordered = (spec.initial,) + tuple(st for st in spec.states if st != spec.initial)
    state_index_of = {state: i for i, state in enumerate(ordered)}

    macros: dict[tuple[int, str], CommandMacro] = {}
    for (state, read), rule in spec.transitions.items():
        idx = state_index_of[state]
        game_read = symbols[read]
        if isinstance(rule, HaltAction):
            write = rule.write if rule.write is not None else read
            game_write = symbols[write]
            action = TapeAction.LEAVE if game_write == game_read else _TAPE_ACTIONS[ruleset][(game_read, game_write)]
            macro = CommandMacro(
                tape_action=action,
                head_move=None,
                state_delta=0,
                halt=True,
                read_symbol=game_read,
                write_symbol=game_write,
            )
        else:
            game_write = symbols[rule.write]
            action = TapeAction.LEAVE if game_write == game_read else _TAPE_ACTIONS[ruleset][(game_read, game_write)]
            macro = CommandMacro(
                tape_action=action,
                head_move=rule.move,
                state_delta=state_index_of[rule.next_state] - idx,
                read_symbol=game_read,
                write_symbol=game_write,
            )
        macros[(idx, game_read)] = macro

    policy = None
    if ruleset == RULESET_VI:
        policy = {
            "marker": "end city keeps growth cap 4 until it trains a settler",
            "new_city_citizens": 2,
            "new_city_growth_cap": 4,
            "cap_after_training": 3,
            "worker_waits_until": "new city reaches its growth cap",
        }
    return ControllerProgram(
        ruleset=ruleset,
        spec=spec,
        state_index_of=state_index_of,
        index_to_state=ordered,
        symbol_of=symbols,
        symbol_from_game={v: k for k, v in symbols.items()},
        macros=macros,
        extension_policy=policy,
    )


def nb_state_semantics(program: ControllerProgram, state_idx: int, needs_settler: bool) -> dict[str, MacroPlan]:
    """Effective macro sequence for a VI state in its n/b variants.

    The b-variant runs the base macro alone; the n-variant (needs a settler,
    i.e. the move leaves the built strip) appends the full extension
    procedure before the next instruction. This is the doubling that turns
    the 24-state table into 48 effective states.
    """
    if program.ruleset != RULESET_VI:
        raise CompileError("n/b state semantics apply to ruleset VI only")
    plans: dict[str, MacroPlan] = {}
    for (idx, game_read), macro in program.macros.items():
        if idx != state_idx:
            continue
        if needs_settler and macro.head_move is not None:
            steps = ("train_settler", "move_settler", "found_city", "grow_to_cap")
        else:
            steps = ()
        plans[game_read] = MacroPlan(macro=macro, extension_steps=steps)
    if not plans:
        raise KeyError(f"no macros for state index {state_idx}")
    return plans


# ---------------------------------------------------------------------------
# Paper-style rendering (used for program exports and table diffing)
# ---------------------------------------------------------------------------

PAPER_SYMBOL_NAMES = {
    RULESET_BE: {"none": "No Improvement", "road": "Road", "pillaged_road": "Pillaged Road"},
    RULESET_V: {"none": "No Improvement", "road": "Road", "railroad": "Railroad"},
    RULESET_VI: {"unworked": "Is Not Being Worked", "worked": "Is Being Worked"},
}

_TAPE_TEXT = {
    TapeAction.LEAVE: "No Improvement",
    TapeAction.BUILD_ROAD: "Build a Road",
    TapeAction.REMOVE_IMPROVEMENT: "Remove Improvement",
    TapeAction.PILLAGE_ROAD: "Pillage the Road",
    TapeAction.REPAIR_ROAD: "Repair the Road",
    TapeAction.BUILD_RAILROAD: "Build a Railroad",
    TapeAction.BUILD_ROAD_THEN_PILLAGE: "Build a Road, Pillage it,",
}


def vi_work_command(state_delta: int) -> tuple[str, int]:
    """Render a VI state change the way the source tables do.

    The tables count Monastery targets one past the index delta (and Farm
    targets one short of its magnitude); the executable delta stays the
    plain index difference.
    """
    if state_delta >= -1:
        return ("monasteries", state_delta + 1)
    return ("farms", -state_delta - 1)


def vi_state_delta(kind: str, count: int) -> int:
    """Inverse of :func:`vi_work_command`."""
    if kind == "monasteries":
        return count - 1
    if kind == "farms":
        return -(count + 1)
    raise ValueError(f"unknown work target {kind!r}")


def _state_text(ruleset: str, delta: int) -> str:
    if ruleset == RULESET_VI:
        kind, count = vi_work_command(delta)
        return f"Work {count} more {kind.capitalize()}"
    noun = "Terrascape" if ruleset == RULESET_BE else "Railroad"
    if delta == 0:
        return "No build"
    verb = "Build" if delta > 0 else "Remove"
    n = abs(delta)
    return f"{verb} a {noun}" if n == 1 else f"{verb} {n} {noun}s"


def macro_paper_command(macro: CommandMacro, ruleset: str) -> str:
    """The worker-command cell of a table row, reconstructed from a macro."""
    if macro.halt and macro.tape_action is TapeAction.LEAVE:
        return "HALT"
    if ruleset == RULESET_VI:
        tape = PAPER_SYMBOL_NAMES[ruleset][macro.write_symbol]
        move = f", move {macro.head_move}" if macro.head_move else ""
        return f"{tape}{move}; {_state_text(ruleset, macro.state_delta)}"
    tape = _TAPE_TEXT[macro.tape_action]
    move = f" and move {macro.head_move}" if macro.head_move else ""
    return f"{tape}{move}; {_state_text(ruleset, macro.state_delta)}"


def program_to_json(program: ControllerProgram) -> dict:
    rows = []
    for (idx, game_read), macro in sorted(program.macros.items()):
        rows.append(
            {
                "state_index": idx,
                "read": game_read,
                "tape_action": macro.tape_action.value,
                "move": macro.head_move,
                "state_delta": macro.state_delta,
                "halt": macro.halt,
                "paper_command": macro_paper_command(macro, program.ruleset),
            }
        )
    return {
        "format_version": PROGRAM_FORMAT_VERSION,
        "ruleset": program.ruleset,
        "states": list(program.index_to_state),
        "state_index_of": dict(sorted(program.state_index_of.items())),
        "symbol_of": dict(sorted(program.symbol_of.items())),
        "macros": rows,
    }


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


@dataclass
class InstructionRecord:
    """What one executed instruction did and what it cost."""

    index: int
    state_index: int
    read: str
    macro: CommandMacro | None
    turns: int = 0
    movement_turns: int = 0
    pre_train_wait: int = 0
    extension: bool = False
    tape_length_before: int | None = None
    settler_cost_production: int | None = None
    settler_cost_turns: int | None = None
    halted: bool = False


@dataclass
class ExtensionRecord:
    """Outcome of one boundary crossing (relocation or full extension)."""

    case: str  # "relocate" | "settle"
    turns: int
    movement_turns: int
    pre_train_wait: int = 0
    new_city: int | None = None
    tape_length_before: int | None = None
    settler_cost_production: int | None = None
    settler_cost_turns: int | None = None


_UNIT_ORDER = (TAPE_WORKER, ROVER, STATE_WORKER, SETTLER)
_DRIVE_GUARD = 1_000_000


def _drive(world: WorldState, queues: dict[str, list[Command]], gates: dict[str, object] | None = None) -> None:
    """Issue queued commands as units free up; advance turns until all done."""
    gates = gates or {}
    for _ in range(_DRIVE_GUARD):
        issued = True
        while issued:
            issued = False
            for uid in _UNIT_ORDER:
                queue = queues.get(uid)
                if not queue:
                    continue
                unit = world.units.get(uid)
                if unit is None or unit.busy:
                    continue
                gate = gates.get(uid)
                if gate is not None and not gate(world):
                    continue
                apply_command(world, uid, queue.pop(0))
                issued = True
        if not any(queues.values()) and not world.any_busy():
            return
        advance_turn(world)
    raise RuntimeError("command schedule failed to converge")


def _tape_plan(world: WorldState, macro: CommandMacro, cell: int) -> tuple[list[Command], list[Command]]:
    """(worker commands, rover commands) realizing the macro's tape action."""
    action = macro.tape_action
    current = world.hex_at(cell).improvement
    worker: list[Command] = []
    rover: list[Command] = []
    if action is TapeAction.LEAVE:
        pass
    elif action is TapeAction.BUILD_ROAD:
        if current is not Improvement.NONE:  # V: the railroad must be removed first
            worker.append(Command(op="remove_improvement", cell=cell))
        worker.append(Command(op="build_road", cell=cell))
    elif action is TapeAction.BUILD_RAILROAD:
        if current is not Improvement.NONE:
            worker.append(Command(op="remove_improvement", cell=cell))
        worker.append(Command(op="build_railroad", cell=cell))
    elif action is TapeAction.REMOVE_IMPROVEMENT:
        worker.append(Command(op="remove_improvement", cell=cell))
    elif action is TapeAction.PILLAGE_ROAD:
        rover.append(Command(op="pillage_road", cell=cell))
    elif action is TapeAction.REPAIR_ROAD:
        worker.append(Command(op="repair_road", cell=cell))
    elif action is TapeAction.BUILD_ROAD_THEN_PILLAGE:
        worker.append(Command(op="build_road", cell=cell))
        rover.append(Command(op="pillage_road", cell=cell))
    else:
        raise IllegalCommand(f"tape action {action} is not a BE/V action")
    return worker, rover


def execute_instruction(world: WorldState, program: ControllerProgram, index: int = 0) -> InstructionRecord:
    """Execute one machine instruction on the world.

    Reads the symbol under the tape worker, looks up the macro for the
    decoded state, issues the commands, and advances turns until the next
    instruction boundary. Raises :class:`MachineStuck` when no macro covers
    the pair; a world-level :class:`IllegalCommand` escaping from here means
    a compiler bug and is never swallowed.
    """
    if world.any_busy() or world.any_training():
        raise DecodeError("execute_instruction requires an instruction boundary")
    idx, _ = state_index(world)
    state = program.index_to_state[idx]
    head = world.units[TAPE_WORKER].position
    game_read = read_cell(world, head)

    if state in program.spec.halting:
        world.log("controller", "instruction_halt", {"index": index, "state_index": idx})
        return InstructionRecord(index=index, state_index=idx, read=game_read, macro=None, halted=True)

    macro = program.macros.get((idx, game_read))
    if macro is None:
        raise MachineStuck(state, program.symbol_from_game.get(game_read, game_read))

    start_turn = world.turn
    world.log("controller", "instruction_start", {"index": index, "state_index": idx, "read": game_read})
    record = InstructionRecord(index=index, state_index=idx, read=game_read, macro=macro, halted=macro.halt)

    if program.ruleset == RULESET_VI:
        _execute_vi(world, macro, head, record)
    else:
        _execute_be_v(world, macro, head, record)

    record.turns = world.turn - start_turn
    world.log(
        "controller",
        "instruction_end",
        {
            "index": index,
            "turns": record.turns,
            "movement_turns": record.movement_turns,
            "pre_train_wait": record.pre_train_wait,
            "extension": record.extension,
            "tape_length_before": record.tape_length_before,
            "settler_cost_production": record.settler_cost_production,
            "settler_cost_turns": record.settler_cost_turns,
            "halted": record.halted,
        },
    )
    return record


def _execute_be_v(world: WorldState, macro: CommandMacro, head: int, record: InstructionRecord) -> None:
    params = world.params
    worker_cmds, rover_cmds = _tape_plan(world, macro, head)
    if macro.head_move is not None:
        target = head + (1 if macro.head_move == "R" else -1)
        worker_cmds.append(Command(op="move", to=target))
        record.movement_turns = params.worker_move_turns_per_hex
    state_op = "build_state" if macro.state_delta > 0 else "remove_state"
    state_cmds = [Command(op=state_op) for _ in range(abs(macro.state_delta))]
    gates = {}
    if rover_cmds:
        cell = rover_cmds[0].cell
        gates[ROVER] = lambda w: w.hex_at(cell).improvement is Improvement.ROAD
    _drive(world, {TAPE_WORKER: worker_cmds, ROVER: rover_cmds, STATE_WORKER: state_cmds}, gates)


def _execute_vi(world: WorldState, macro: CommandMacro, head: int, record: InstructionRecord) -> None:
    if macro.tape_action is TapeAction.SET_WORKED:
        apply_command(world, PLAYER, Command(op="set_worked", cell=head, worked=True))
    elif macro.tape_action is TapeAction.SET_UNWORKED:
        apply_command(world, PLAYER, Command(op="set_worked", cell=head, worked=False))
    elif macro.tape_action is not TapeAction.LEAVE:
        raise IllegalCommand(f"tape action {macro.tape_action} is not a VI action")
    if macro.state_delta:
        apply_command(world, PLAYER, Command(op="shift_monasteries", count=macro.state_delta))
    if macro.head_move is None:
        return
    direction = macro.head_move
    target = head + (1 if direction == "R" else -1)
    if target // 2 == head // 2:
        apply_command(world, TAPE_WORKER, Command(op="move", to=target))
        _drive(world, {})
        record.movement_turns = world.params.hexes_per_tape_cell * world.params.worker_move_turns_per_hex
        return
    ext = extend_tape(world, direction)
    record.movement_turns = ext.movement_turns
    record.pre_train_wait = ext.pre_train_wait
    record.extension = ext.case == "settle"
    record.tape_length_before = ext.tape_length_before
    record.settler_cost_production = ext.settler_cost_production
    record.settler_cost_turns = ext.settler_cost_turns


def extend_tape(world: WorldState, direction: str) -> ExtensionRecord:
    """Carry the head across a city boundary, extending the strip if needed.

    If the next city already exists, the worker simply relocates to its near
    cell. Otherwise the end city (still at growth cap 4 unless it already
    extended the other way) trains a Settler once its population matches its
    cap, the Settler travels one spacing and founds the new city, and the
    worker waits on the new near cell until the city grows to its cap of 4 —
    at which point the four-citizen population again marks the end of tape.
    """
    if world.params.ruleset != RULESET_VI:
        raise IllegalCommand("tape extension applies to ruleset VI only")
    if direction not in ("L", "R"):
        raise IllegalCommand(f"direction {direction!r} is not L or R")
    params = world.params
    worker = world.units[TAPE_WORKER]
    head = worker.position
    step = 1 if direction == "R" else -1
    target = head + step
    src_index = head // 2
    new_index = target // 2
    if new_index == src_index:
        raise IllegalCommand("head move does not cross a city boundary")
    start_turn = world.turn
    move_cost = params.hexes_per_tape_cell * params.worker_move_turns_per_hex

    if new_index in world.cities:
        apply_command(world, TAPE_WORKER, Command(op="move", to=target))
        _drive(world, {})
        return ExtensionRecord(case="relocate", turns=world.turn - start_turn, movement_turns=move_cost)

    src = world.cities.get(src_index)
    if src is None or src_index not in (min(world.cities), max(world.cities)):
        raise IllegalCommand(f"cell {head} is not on the end city of the strip")

    pre_train_wait = 0
    while src.citizens < src.growth_cap:
        advance_turn(world)
        pre_train_wait += 1

    tape_length = 2 * len(world.cities)
    cost = params.settler_cost(tape_length)
    apply_command(world, PLAYER, Command(op="train_settler", city=src.index))
    while SETTLER not in world.units:
        advance_turn(world)

    queues = {
        SETTLER: [
            Command(op="move", to=params.city_spacing * new_index),
            Command(op="found_city", city=new_index),
        ],
        TAPE_WORKER: [Command(op="move", to=target)],
    }
    _drive(world, queues)

    new_city = world.cities[new_index]
    while new_city.citizens < new_city.growth_cap:
        advance_turn(world)

    return ExtensionRecord(
        case="settle",
        turns=world.turn - start_turn,
        movement_turns=params.city_spacing * params.worker_move_turns_per_hex,
        pre_train_wait=pre_train_wait,
        new_city=new_index,
        tape_length_before=tape_length,
        settler_cost_production=cost,
        settler_cost_turns=-(-cost // params.production_per_turn),
    )

"""Reference Turing machine core: specs, validation, stepping, built-in programs.

This interpreter is the ground-truth oracle for every game-side equivalence
check, so it stays deliberately small and side-effect free: specs and
configurations are values, and ``step`` builds a fresh configuration instead
of mutating the tape in place.

Tapes are sparse maps from signed cell index to symbol; the blank symbol is
never stored explicitly (canonical form). State and alphabet declaration
order is meaningful: the compiler assigns state/symbol indices from it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MachineStuck, SpecError

MOVES = ("L", "R")

HALTED = "halted"
STUCK = "stuck"
STEP_LIMIT = "step-limit"


@dataclass(frozen=True)
class Transition:
    """One entry of the transition function: write, move the head, set state."""

    write: str
    move: str
    next_state: str


@dataclass(frozen=True)
class HaltAction:
    """An explicit halt entry.

    ``write`` is applied before stopping (None leaves the cell untouched);
    the head never moves on a halt, even where a source table lists a
    direction next to the halt.
    """

    write: str | None = None


Rule = Transition | HaltAction


@dataclass(frozen=True)
class TMSpec:
    """A Turing machine description.

    ``states`` and ``alphabet`` are ordered tuples; the order doubles as the
    canonical index assignment used by the game-side compiler. ``transitions``
    maps (state, read symbol) to a :class:`Transition` or :class:`HaltAction`
    and may be partial.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    blank: str
    input_alphabet: tuple[str, ...]
    initial: str
    halting: tuple[str, ...]
    transitions: dict[tuple[str, str], Rule] = field(default_factory=dict)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_symbols(self) -> int:
        return len(self.alphabet)


@dataclass(frozen=True)
class TMConfig:
    """A machine configuration: state, sparse tape, head position."""

    state: str
    tape: dict[int, str] = field(default_factory=dict)
    head: int = 0


@dataclass(frozen=True)
class Halted:
    """Terminal outcome of ``step``, carrying the final configuration."""

    config: TMConfig


@dataclass(frozen=True)
class RunResult:
    trace: tuple[TMConfig, ...]
    outcome: str  # HALTED | STUCK | STEP_LIMIT
    steps: int  # transition applications, the halting application included


def canonical_tape(tape: dict[int, str], blank: str) -> dict[int, str]:
    """Drop explicit blanks so equal tapes compare equal."""
    return {cell: sym for cell, sym in sorted(tape.items()) if sym != blank}


def validate_spec(spec: TMSpec) -> TMSpec:
    """Check every well-formedness rule, reporting the first violation."""
    if len(set(spec.states)) != len(spec.states):
        raise SpecError("duplicate state identifiers")
    if len(set(spec.alphabet)) != len(spec.alphabet):
        raise SpecError("duplicate alphabet symbols")
    states = set(spec.states)
    alphabet = set(spec.alphabet)
    if spec.blank not in alphabet:
        raise SpecError(f"blank symbol {spec.blank!r} not in alphabet")
    for sym in spec.input_alphabet:
        if sym not in alphabet:
            raise SpecError(f"input symbol {sym!r} not in alphabet")
    if spec.blank in spec.input_alphabet:
        raise SpecError(f"blank symbol {spec.blank!r} must not be in the input alphabet")
    if spec.initial not in states:
        raise SpecError(f"initial state {spec.initial!r} unknown")
    for st in spec.halting:
        if st not in states:
            raise SpecError(f"halting state {st!r} unknown")
    halting = set(spec.halting)
    for (state, read), rule in spec.transitions.items():
        if state not in states:
            raise SpecError(f"transition from unknown state {state!r}")
        if state in halting:
            raise SpecError(f"transition from halting state {state!r}")
        if read not in alphabet:
            raise SpecError(f"transition on symbol {read!r} outside alphabet")
        if isinstance(rule, HaltAction):
            if rule.write is not None and rule.write not in alphabet:
                raise SpecError(f"halt write symbol {rule.write!r} outside alphabet")
            continue
        if rule.write not in alphabet:
            raise SpecError(f"write symbol {rule.write!r} outside alphabet")
        if rule.move not in MOVES:
            raise SpecError(f"move {rule.move!r} is not L or R")
        if rule.next_state not in states:
            raise SpecError(f"next state {rule.next_state!r} unknown")
    return spec


def initial_config(spec: TMSpec, tape: dict[int, str] | None = None, head: int = 0) -> TMConfig:
    return TMConfig(state=spec.initial, tape=canonical_tape(tape or {}, spec.blank), head=head)


def validate_config(spec: TMSpec, config: TMConfig) -> TMConfig:
    if config.state not in spec.states:
        raise SpecError(f"configuration state {config.state!r} unknown")
    for cell, sym in config.tape.items():
        if sym not in spec.alphabet:
            raise SpecError(f"tape symbol {sym!r} at cell {cell} outside alphabet")
        if sym == spec.blank:
            raise SpecError(f"tape stores the blank symbol explicitly at cell {cell}")
    return config


def step(spec: TMSpec, config: TMConfig) -> TMConfig | Halted:
    """Apply one transition, or report halting.

    A configuration whose state is halting absorbs: it is returned unchanged
    inside :class:`Halted`. An explicit halt entry applies its write first.
    Raises :class:`MachineStuck` on an undefined (state, symbol) pair.
    """
    if config.state in spec.halting:
        return Halted(config)
    read = config.tape.get(config.head, spec.blank)
    rule = spec.transitions.get((config.state, read))
    if rule is None:
        raise MachineStuck(config.state, read)
    if isinstance(rule, HaltAction):
        tape = config.tape
        if rule.write is not None and rule.write != read:
            tape = _written(tape, config.head, rule.write, spec.blank)
        return Halted(TMConfig(state=config.state, tape=tape, head=config.head))
    tape = _written(config.tape, config.head, rule.write, spec.blank)
    head = config.head + (1 if rule.move == "R" else -1)
    return TMConfig(state=rule.next_state, tape=tape, head=head)


def _written(tape: dict[int, str], cell: int, symbol: str, blank: str) -> dict[int, str]:
    new = dict(tape)
    if symbol == blank:
        new.pop(cell, None)
    else:
        new[cell] = symbol
    return new


def run(spec: TMSpec, config: TMConfig, max_steps: int) -> RunResult:
    """Run up to ``max_steps`` transition applications, collecting the trace.

    A halt entry counts as one application (it may write); reaching a halting
    state costs none. The returned step count is the oracle's instruction
    count for lockstep comparisons.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    validate_config(spec, config)
    trace = [config]
    steps = 0
    for _ in range(max_steps):
        cur = trace[-1]
        if cur.state in spec.halting:
            return RunResult(tuple(trace), HALTED, steps)
        try:
            nxt = step(spec, cur)
        except MachineStuck:
            return RunResult(tuple(trace), STUCK, steps)
        steps += 1
        if isinstance(nxt, Halted):
            if nxt.config != cur:
                trace.append(nxt.config)
            return RunResult(tuple(trace), HALTED, steps)
        trace.append(nxt)
    if trace[-1].state in spec.halting:
        return RunResult(tuple(trace), HALTED, steps)
    return RunResult(tuple(trace), STEP_LIMIT, steps)


def count_symbol(config: TMConfig, symbol: str) -> int:
    return sum(1 for sym in config.tape.values() if sym == symbol)


# ---------------------------------------------------------------------------
# Built-in programs.
#
# Row grammar: "state read write move next" or "state read HALT [write]".
# ---------------------------------------------------------------------------

_BB3_ROWS = """
q0 0 1 R q1
q0 1 1 L q2
q1 0 1 L q0
q1 1 1 R q1
q2 0 1 L q1
q2 1 HALT 1
"""

_ROGOZHIN_10_3_ROWS = """
q0 0 1 R q0
q0 1 0 L q1
q0 b b R q3
q1 0 0 L q2
q1 1 0 L q1
q1 b b L q1
q2 0 0 L q1
q2 1 b L q5
q2 b b R q0
q3 0 1 R q0
q3 1 1 R q4
q3 b 1 L q3
q4 0 b L q2
q4 1 1 R q4
q4 b b R q4
q5 0 1 L q6
q5 1 1 L q5
q5 b b L q5
q6 0 0 R q7
q6 1 HALT
q6 b b L q8
q7 0 1 L q5
q7 1 1 R q7
q7 b b R q7
q8 0 1 L q9
q8 1 0 R q9
q8 b 0 L q3
q9 0 0 R q4
q9 1 0 R q9
q9 b b R q8
"""

_ROGOZHIN_24_2_ROWS = """
q1 0 0 R q5
q1 1 1 R q2
q2 0 1 R q1
q2 1 1 L q3
q3 0 0 L q4
q3 1 0 L q2
q4 0 1 L q12
q4 1 0 L q9
q5 0 1 R q1
q5 1 0 L q6
q6 0 0 L q7
q6 1 1 L q7
q7 0 1 L q8
q7 1 0 L q6
q8 0 0 L q7
q8 1 1 R q2
q9 0 0 R q19
q9 1 1 L q4
q10 0 1 L q4
q10 1 0 R q13
q11 0 0 L q4
q11 1 HALT
q12 0 0 R q19
q12 1 1 L q14
q13 0 0 R q10
q13 1 1 R q24
q14 0 0 L q15
q14 1 1 L q11
q15 0 0 R q16
q15 1 1 R q17
q16 0 0 R q15
q16 1 1 R q10
q17 0 0 R q16
q17 1 1 R q21
q18 0 0 R q19
q18 1 1 R q20
q19 0 1 L q3
q19 1 1 R q18
q20 0 1 R q18
q20 1 0 R q18
q21 0 0 R q22
q21 1 1 R q23
q22 0 1 L q10
q22 1 1 R q21
q23 0 1 R q21
q23 1 0 R q21
q24 0 0 R q13
q24 1 0 L q3
"""


def _parse_rows(text: str) -> dict[tuple[str, str], Rule]:
    transitions: dict[tuple[str, str], Rule] = {}
    for line in text.strip().splitlines():
        parts = line.split()
        state, read = parts[0], parts[1]
        if parts[2] == "HALT":
            transitions[(state, read)] = HaltAction(write=parts[3] if len(parts) > 3 else None)
        else:
            transitions[(state, read)] = Transition(write=parts[2], move=parts[3], next_state=parts[4])
    return transitions


BUILTIN_NAMES = ("bb3", "rogozhin_10_3", "rogozhin_24_2")


def builtin_program(name: str) -> TMSpec:
    """Return one of the shipped machines, transcribed row by row.

    ``bb3`` is the three-state Busy Beaver; ``rogozhin_10_3`` the 10-state,
    3-symbol universal machine; ``rogozhin_24_2`` the 24-state, 2-symbol one.
    """
    if name == "bb3":
        spec = TMSpec(
            states=("q0", "q1", "q2"),
            alphabet=("0", "1"),
            blank="0",
            input_alphabet=("1",),
            initial="q0",
            halting=(),
            transitions=_parse_rows(_BB3_ROWS),
        )
    elif name == "rogozhin_10_3":
        spec = TMSpec(
            states=tuple(f"q{i}" for i in range(10)),
            alphabet=("0", "1", "b"),
            blank="0",
            input_alphabet=("1", "b"),
            initial="q0",
            halting=(),
            transitions=_parse_rows(_ROGOZHIN_10_3_ROWS),
        )
    elif name == "rogozhin_24_2":
        spec = TMSpec(
            states=tuple(f"q{i}" for i in range(1, 25)),
            alphabet=("0", "1"),
            blank="0",
            input_alphabet=("1",),
            initial="q1",
            halting=(),
            transitions=_parse_rows(_ROGOZHIN_24_2_ROWS),
        )
    else:
        raise KeyError(f"unknown built-in program {name!r}")
    return validate_spec(spec)


# ---------------------------------------------------------------------------
# JSON file format. Exactly these fields; unknown fields are rejected.
# ---------------------------------------------------------------------------

_SPEC_FIELDS = {"states", "alphabet", "blank", "input_alphabet", "initial", "halting", "transitions"}


def spec_to_json(spec: TMSpec) -> dict:
    records = []
    for (state, read), rule in spec.transitions.items():
        if isinstance(rule, HaltAction):
            rec: dict = {"state": state, "read": read, "halt": True}
            if rule.write is not None:
                rec["write"] = rule.write
        else:
            rec = {"state": state, "read": read, "write": rule.write, "move": rule.move, "next": rule.next_state}
        records.append(rec)
    return {
        "states": list(spec.states),
        "alphabet": list(spec.alphabet),
        "blank": spec.blank,
        "input_alphabet": list(spec.input_alphabet),
        "initial": spec.initial,
        "halting": list(spec.halting),
        "transitions": records,
    }


def spec_from_json(data: dict) -> TMSpec:
    if not isinstance(data, dict):
        raise SpecError("machine description must be a JSON object")
    unknown = set(data) - _SPEC_FIELDS
    if unknown:
        raise SpecError(f"unknown fields in machine description: {sorted(unknown)}")
    missing = _SPEC_FIELDS - set(data)
    if missing:
        raise SpecError(f"missing fields in machine description: {sorted(missing)}")
    transitions: dict[tuple[str, str], Rule] = {}
    for rec in data["transitions"]:
        extra = set(rec) - {"state", "read", "write", "move", "next", "halt"}
        if extra:
            raise SpecError(f"unknown fields in transition record: {sorted(extra)}")
        key = (rec["state"], rec["read"])
        if key in transitions:
            raise SpecError(f"duplicate transition record for {key}")
        if rec.get("halt"):
            if "move" in rec or "next" in rec:
                raise SpecError(f"halt record for {key} must not carry move/next")
            transitions[key] = HaltAction(write=rec.get("write"))
        else:
            transitions[key] = Transition(write=rec["write"], move=rec["move"], next_state=rec["next"])
    spec = TMSpec(
        states=tuple(data["states"]),
        alphabet=tuple(data["alphabet"]),
        blank=data["blank"],
        input_alphabet=tuple(data["input_alphabet"]),
        initial=data["initial"],
        halting=tuple(data["halting"]),
        transitions=transitions,
    )
    return validate_spec(spec)


def load_spec(path: str | Path) -> TMSpec:
    return spec_from_json(json.loads(Path(path).read_text()))


def save_spec(spec: TMSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec_to_json(spec), indent=2, sort_keys=True) + "\n")

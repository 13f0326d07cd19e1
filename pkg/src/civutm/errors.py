"""Exception types shared across the package."""

from __future__ import annotations


class CivUtmError(Exception):
    """Base class for all package errors."""


class SpecError(CivUtmError):
    """A Turing machine description violates a well-formedness rule."""


class MachineStuck(CivUtmError):
    """No transition is defined for the current (state, symbol) pair.

    Distinct from halting: a stuck machine is an error outcome, a halted
    machine is a normal one.
    """

    def __init__(self, state: str, symbol: str):
        super().__init__(f"machine stuck: no transition from state {state!r} reading {symbol!r}")
        self.state = state
        self.symbol = symbol


class IllegalCommand(CivUtmError):
    """A world command violates the active ruleset's legality rules."""


class Starvation(CivUtmError):
    """A city's food stock would drop below zero (must be unreachable)."""


class DecodeError(CivUtmError):
    """A world cannot be decoded back into a machine configuration.

    Signals world corruption or a compiler bug, never a normal outcome.
    """


class CompileError(CivUtmError):
    """A machine cannot be compiled for the requested ruleset."""

"""Deterministic state machine for the abstracted game world.

Three rulesets share one model:

* ``BE``  — tape symbols are Road / Pillaged Road improvements, the machine
  state is the number of Terrascapes standing in a reserved tile region.
* ``V``   — tape symbols are Road / Railroad improvements, the state is the
  Railroad count in the reserved region.
* ``VI``  — tape symbols are the worked/unworked flags of city-owned
  grassland cells, the state is the number of worked Monasteries; Farms
  absorb every state-region Citizen not on a Monastery.

Geometry is reduced to a 1-D integer line for the tape plus an abstract
finite state region: the 2-D hex map adds nothing to the computation. Turn
counters and cell indices are unbounded.

All operations mutate the passed ``WorldState`` in place and also return it;
they are deterministic functions of the state, and the append-only event log
records every accepted command and completion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from enum import Enum

from .errors import IllegalCommand, Starvation

RULESET_BE = "BE"
RULESET_V = "V"
RULESET_VI = "VI"
RULESETS = (RULESET_BE, RULESET_V, RULESET_VI)

SNAPSHOT_FORMAT_VERSION = 1
EVENT_LOG_FORMAT_VERSION = 1

TAPE_WORKER = "tape_worker"
STATE_WORKER = "state_worker"
ROVER = "rover"
SETTLER = "settler"
PLAYER = "player"  # pseudo-unit for instant, player-level micromanagement


class Improvement(str, Enum):
    NONE = "none"
    ROAD = "road"
    PILLAGED_ROAD = "pillaged_road"
    RAILROAD = "railroad"


# Which improvements a hex may ever hold, per ruleset.
LEGAL_IMPROVEMENTS = {
    RULESET_BE: (Improvement.NONE, Improvement.ROAD, Improvement.PILLAGED_ROAD),
    RULESET_V: (Improvement.NONE, Improvement.ROAD, Improvement.RAILROAD),
    RULESET_VI: (Improvement.NONE,),
}


@dataclass
class RulesetParams:
    """Per-game configuration: build durations, yields, population rules.

    Durations are in turns. ``city_growth_turns`` is the clock for one new
    Citizen; a freshly founded city (2 Citizens) therefore needs two clock
    periods to reach its cap of 4. ``settler_cost`` is in Production units,
    converted to turns through ``production_per_turn``.
    """

    ruleset: str
    road_build_turns: int = 1  # M
    terrascape_build_turns: int = 3  # T
    railroad_build_turns: int = 2  # B_rr, must be > 1
    remove_or_repair_turns: int = 1  # fixed
    terrascape_culture: int = 3
    base_culture: int = 1  # C_*
    monastery_faith: int = 2
    base_faith: int = 0  # F_*
    citizen_food_upkeep: int = 2
    city_base_food: int = 4  # base 2 + grassland center 2
    grassland_food: int = 2
    floodplains_food: int = 3
    city_growth_turns: int = 10  # C (per Citizen)
    settler_found_turns: int = 3
    city_spacing: int = 4
    worker_move_turns_per_hex: int = 1
    production_per_turn: int = 5
    state_region_tiles: int = 9

    @classmethod
    def defaults(cls, ruleset: str) -> "RulesetParams":
        if ruleset not in RULESETS:
            raise IllegalCommand(f"unknown ruleset {ruleset!r}")
        params = cls(ruleset=ruleset)
        if ruleset == RULESET_VI:
            params.state_region_tiles = 23
        return params

    def settler_cost(self, tape_length: int) -> int:
        """Production cost of a Settler when the tape is ``tape_length`` cells."""
        return 15 * tape_length + 50

    @property
    def hexes_per_tape_cell(self) -> int:
        """Physical hexes between adjacent tape cells (VI: cells sit at city
        center +/- 1 with centers ``city_spacing`` apart)."""
        return self.city_spacing // 2 if self.ruleset == RULESET_VI else 1

    def validate(self) -> "RulesetParams":
        if self.ruleset not in RULESETS:
            raise IllegalCommand(f"unknown ruleset {self.ruleset!r}")
        if self.railroad_build_turns <= 1:
            raise IllegalCommand("railroad_build_turns must be > 1")
        for name in (
            "road_build_turns",
            "terrascape_build_turns",
            "remove_or_repair_turns",
            "city_growth_turns",
            "worker_move_turns_per_hex",
            "production_per_turn",
        ):
            if getattr(self, name) < 1:
                raise IllegalCommand(f"{name} must be >= 1")
        for name in (
            "terrascape_culture",
            "base_culture",
            "monastery_faith",
            "base_faith",
            "citizen_food_upkeep",
            "city_base_food",
            "grassland_food",
            "floodplains_food",
            "settler_found_turns",
            "state_region_tiles",
        ):
            if getattr(self, name) < 0:
                raise IllegalCommand(f"{name} must be >= 0")
        if self.ruleset == RULESET_VI and (self.city_spacing < 2 or self.city_spacing % 2):
            raise IllegalCommand("city_spacing must be an even distance >= 2")
        return self


@dataclass
class Hex:
    improvement: Improvement = Improvement.NONE
    worked: bool = False
    terrain: str = "flat"


@dataclass
class StateRegion:
    """The reserved tiles encoding the machine state.

    ``tiles`` holds the improvement/worked flags (Terrascapes for BE,
    Railroads for V, worked Monasteries for VI). For VI, ``farm_tiles`` holds
    the worked-Farm flags; the region's Citizens all work something, so worked
    Farms are always the complement of worked Monasteries.
    """

    kind: str  # "terrascape" | "railroad" | "monastery"
    tiles: list[bool]
    base_yield: int
    farm_tiles: list[bool] | None = None

    @property
    def count(self) -> int:
        return sum(self.tiles)


@dataclass
class Command:
    """One primitive player command. Unused fields stay at their defaults."""

    op: str
    cell: int | None = None
    to: int | None = None
    count: int = 0
    worked: bool | None = None
    city: int | None = None

    def describe(self) -> dict:
        out = {"op": self.op}
        for key in ("cell", "to", "count", "worked", "city"):
            val = getattr(self, key)
            if val not in (None, 0) or (key == "count" and self.op == "shift_monasteries"):
                out[key] = val
        return out


@dataclass
class Job:
    command: Command
    completes_at: int


@dataclass
class Unit:
    uid: str
    kind: str
    position: int
    job: Job | None = None

    @property
    def busy(self) -> bool:
        return self.job is not None


@dataclass
class City:
    """A tape city (VI). ``index`` is signed; the city owns global tape cells
    ``2*index`` and ``2*index + 1`` and its center sits at
    ``city_spacing * index`` physical hexes."""

    index: int
    citizens: int
    growth_cap: int
    food_stock: int = 0
    production_stock: int = 0
    growth_progress: int = 0
    training_cost: int | None = None

    @property
    def tape_cells(self) -> tuple[int, int]:
        return (2 * self.index, 2 * self.index + 1)

    def center(self, spacing: int) -> int:
        return spacing * self.index


@dataclass
class WorldState:
    params: RulesetParams
    tape: dict[int, Hex]
    region: StateRegion
    units: dict[str, Unit]
    cities: dict[int, City]
    turn: int = 0
    event_log: list[dict] = field(default_factory=list)
    min_food_observed: int | None = None

    def hex_at(self, cell: int) -> Hex:
        terrain = "grassland" if self.params.ruleset == RULESET_VI else "flat"
        return self.tape.get(cell, Hex(terrain=terrain))

    def _ensure_hex(self, cell: int) -> Hex:
        if cell not in self.tape:
            terrain = "grassland" if self.params.ruleset == RULESET_VI else "flat"
            self.tape[cell] = Hex(terrain=terrain)
        return self.tape[cell]

    def city_of_cell(self, cell: int) -> City | None:
        return self.cities.get(cell // 2)

    def leftmost_city(self) -> City:
        return self.cities[min(self.cities)]

    def rightmost_city(self) -> City:
        return self.cities[max(self.cities)]

    def any_busy(self) -> bool:
        return any(unit.busy for unit in self.units.values())

    def any_training(self) -> bool:
        return any(city.training_cost is not None for city in self.cities.values())

    def log(self, unit: str, command: str, detail: dict | None = None) -> None:
        self.event_log.append({"turn": self.turn, "unit": unit, "command": command, "detail": detail or {}})


# ---------------------------------------------------------------------------
# World construction
# ---------------------------------------------------------------------------

# Game-symbol names accepted by init_world / produced by the codec.
GAME_BLANK = {RULESET_BE: "none", RULESET_V: "none", RULESET_VI: "unworked"}
GAME_SYMBOLS = {
    RULESET_BE: ("none", "road", "pillaged_road"),
    RULESET_V: ("none", "road", "railroad"),
    RULESET_VI: ("unworked", "worked"),
}


def init_world(ruleset: str, initial_content: dict[int, str] | None = None, params: RulesetParams | None = None) -> WorldState:
    """Build a world whose tape encodes ``initial_content`` and whose state
    region encodes state index 0.

    ``initial_content`` maps cell index to a non-blank game symbol (see
    ``GAME_SYMBOLS``); blank cells are simply absent. Units start at cell 0.
    For VI, enough cities are founded to cover cell 0 and every initial cell;
    the end cities start at 4 Citizens (growth cap 4), interior ones at 3.
    """
    params = (params or RulesetParams.defaults(ruleset)).validate()
    if params.ruleset != ruleset:
        raise IllegalCommand(f"params are for ruleset {params.ruleset!r}, not {ruleset!r}")
    content = initial_content or {}
    for cell, symbol in content.items():
        if symbol not in GAME_SYMBOLS[ruleset] or symbol == GAME_BLANK[ruleset]:
            raise IllegalCommand(f"symbol {symbol!r} at cell {cell} is illegal for ruleset {ruleset}")

    tape: dict[int, Hex] = {}
    cities: dict[int, City] = {}
    units = {TAPE_WORKER: Unit(uid=TAPE_WORKER, kind="TapeWorker", position=0)}

    if ruleset == RULESET_VI:
        region = StateRegion(
            kind="monastery",
            tiles=[False] * params.state_region_tiles,
            base_yield=params.base_faith,
            farm_tiles=[True] * params.state_region_tiles,
        )
        cells = set(content) | {0, 1}
        lo, hi = min(cells) // 2, max(cells) // 2
        for index in range(lo, hi + 1):
            end_city = index in (lo, hi)
            cities[index] = City(index=index, citizens=4 if end_city else 3, growth_cap=4 if end_city else 3)
        for cell, symbol in content.items():
            hx = Hex(terrain="grassland", worked=(symbol == "worked"))
            tape[cell] = hx
    else:
        region = StateRegion(
            kind="terrascape" if ruleset == RULESET_BE else "railroad",
            tiles=[False] * params.state_region_tiles,
            base_yield=params.base_culture,
        )
        units[STATE_WORKER] = Unit(uid=STATE_WORKER, kind="StateWorker", position=0)
        if ruleset == RULESET_BE:
            units[ROVER] = Unit(uid=ROVER, kind="Rover", position=0)
        for cell, symbol in content.items():
            tape[cell] = Hex(improvement=Improvement(symbol))

    world = WorldState(params=params, tape=tape, region=region, units=units, cities=cities)
    world.log("world", "init", {"ruleset": ruleset, "cells": {str(k): v for k, v in sorted(content.items())}})
    return world


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

_INSTANT_OPS = ("set_worked", "shift_monasteries", "train_settler")


def _command_duration(world: WorldState, unit: Unit, command: Command) -> int:
    p = world.params
    op = command.op
    if op == "build_road":
        return p.road_build_turns
    if op == "build_railroad":
        return p.railroad_build_turns
    if op in ("remove_improvement", "pillage_road", "repair_road", "remove_state"):
        return p.remove_or_repair_turns
    if op == "build_state":
        return p.terrascape_build_turns if p.ruleset == RULESET_BE else p.railroad_build_turns
    if op == "move":
        distance = abs(command.to - unit.position)
        per_cell = p.hexes_per_tape_cell if unit.uid == TAPE_WORKER else 1
        return distance * per_cell * p.worker_move_turns_per_hex
    if op == "found_city":
        return p.settler_found_turns
    raise IllegalCommand(f"unknown command {op!r}")


def _check_legality(world: WorldState, unit_id: str, command: Command) -> None:
    p = world.params
    op = command.op
    ruleset = p.ruleset

    if op in ("build_road", "build_railroad", "remove_improvement", "pillage_road", "repair_road"):
        if ruleset == RULESET_VI:
            raise IllegalCommand(f"{op} is not available in ruleset VI")
        hx = world.hex_at(command.cell)
        if op == "build_road" and hx.improvement is not Improvement.NONE:
            # Covers the forbidden build-a-Road-on-a-Road case and the V rule
            # that a Railroad must be removed before building over it.
            raise IllegalCommand(f"cannot build a road on {hx.improvement.value} at cell {command.cell}")
        if op == "build_railroad":
            if ruleset != RULESET_V:
                raise IllegalCommand("railroads exist only in ruleset V")
            if hx.improvement is not Improvement.NONE:
                raise IllegalCommand(f"cannot build a railroad on {hx.improvement.value}; remove it first")
        if op == "remove_improvement" and hx.improvement is Improvement.NONE:
            raise IllegalCommand(f"nothing to remove at cell {command.cell}")
        if op == "pillage_road":
            if ruleset != RULESET_BE or unit_id != ROVER:
                raise IllegalCommand("pillaging is available only to the BE rover")
            if hx.improvement is not Improvement.ROAD:
                raise IllegalCommand(f"no road to pillage at cell {command.cell}")
        if op == "repair_road":
            if ruleset != RULESET_BE:
                raise IllegalCommand("repair applies to pillaged roads, ruleset BE only")
            if hx.improvement is not Improvement.PILLAGED_ROAD:
                raise IllegalCommand(f"no pillaged road to repair at cell {command.cell}")
    elif op == "build_state":
        if ruleset == RULESET_VI:
            raise IllegalCommand("VI encodes state via citizen reassignment, not builds")
        if world.region.count >= len(world.region.tiles):
            raise IllegalCommand("state region is full")
    elif op == "remove_state":
        if ruleset == RULESET_VI:
            raise IllegalCommand("VI encodes state via citizen reassignment, not builds")
        if world.region.count <= 0:
            raise IllegalCommand("state region is empty")
    elif op == "set_worked":
        if ruleset != RULESET_VI:
            raise IllegalCommand("citizen assignment exists only in ruleset VI")
        city = world.city_of_cell(command.cell)
        if city is None:
            raise IllegalCommand(f"cell {command.cell} is not owned by any city")
        if command.worked:
            worked_now = sum(1 for c in city.tape_cells if world.hex_at(c).worked)
            if not world.hex_at(command.cell).worked and worked_now >= city.citizens - 1:
                raise IllegalCommand(f"city {city.index} has no free citizen to work cell {command.cell}")
    elif op == "shift_monasteries":
        if ruleset != RULESET_VI:
            raise IllegalCommand("monasteries exist only in ruleset VI")
        new_count = world.region.count + command.count
        if not 0 <= new_count <= len(world.region.tiles):
            raise IllegalCommand(f"cannot work {new_count} monasteries in a region of {len(world.region.tiles)}")
    elif op == "train_settler":
        if ruleset != RULESET_VI:
            raise IllegalCommand("settlers exist only in ruleset VI")
        city = world.cities.get(command.city)
        if city is None:
            raise IllegalCommand(f"no city at index {command.city}")
        if city.citizens <= 1:
            raise IllegalCommand("no settler can be trained in a one-citizen city")
        if city.training_cost is not None:
            raise IllegalCommand(f"city {city.index} is already training a settler")
        if SETTLER in world.units:
            raise IllegalCommand("a settler is already in the field")
    elif op == "found_city":
        if unit_id != SETTLER:
            raise IllegalCommand("only a settler can found a city")
        index = command.city
        if index in world.cities:
            raise IllegalCommand(f"city {index} already exists")
        if world.cities and index not in (min(world.cities) - 1, max(world.cities) + 1):
            raise IllegalCommand(f"city {index} would not extend the strip contiguously")
        # Centers are spacing*index, so contiguous extension keeps every pair
        # of adjacent centers exactly city_spacing apart.
    elif op == "move":
        pass
    else:
        raise IllegalCommand(f"unknown command {op!r}")


def apply_command(world: WorldState, unit_id: str, command: Command) -> WorldState:
    """Validate and accept a command.

    Instant commands (citizen reassignment, starting settler training) take
    effect in the same turn. Everything else becomes the unit's single
    pending job, completing in ``advance_turn`` after its duration.
    """
    if unit_id != PLAYER:
        unit = world.units.get(unit_id)
        if unit is None:
            raise IllegalCommand(f"no unit {unit_id!r}")
        if unit.busy:
            raise IllegalCommand(f"unit {unit_id} is busy until turn {unit.job.completes_at}")
    elif command.op not in _INSTANT_OPS:
        raise IllegalCommand(f"{command.op} must be issued to a unit")

    _check_legality(world, unit_id, command)

    if command.op == "set_worked":
        world._ensure_hex(command.cell).worked = bool(command.worked)
        world.log(unit_id, command.op, command.describe())
    elif command.op == "shift_monasteries":
        _shift_monasteries(world, command.count)
        world.log(unit_id, command.op, command.describe())
    elif command.op == "train_settler":
        city = world.cities[command.city]
        city.training_cost = world.params.settler_cost(2 * len(world.cities))
        world.log(unit_id, command.op, {"city": city.index, "cost": city.training_cost})
    else:
        duration = _command_duration(world, world.units[unit_id], command)
        world.units[unit_id].job = Job(command=command, completes_at=world.turn + duration)
        world.log(unit_id, command.op, {**command.describe(), "completes_at": world.turn + duration})
    return world


def _shift_monasteries(world: WorldState, delta: int) -> None:
    # Work the lowest-index idle monastery first, release the highest first;
    # released citizens flow to farms and vice versa (only counts decode).
    region = world.region
    remaining = delta
    while remaining > 0:
        i = region.tiles.index(False)
        region.tiles[i] = True
        j = len(region.farm_tiles) - 1 - region.farm_tiles[::-1].index(True)
        region.farm_tiles[j] = False
        remaining -= 1
    while remaining < 0:
        i = len(region.tiles) - 1 - region.tiles[::-1].index(True)
        region.tiles[i] = False
        j = region.farm_tiles.index(False)
        region.farm_tiles[j] = True
        remaining += 1


def _complete_job(world: WorldState, unit: Unit) -> None:
    command = unit.job.command
    op = command.op
    unit.job = None
    if op == "build_road":
        world._ensure_hex(command.cell).improvement = Improvement.ROAD
    elif op == "build_railroad":
        world._ensure_hex(command.cell).improvement = Improvement.RAILROAD
    elif op == "remove_improvement":
        world._ensure_hex(command.cell).improvement = Improvement.NONE
    elif op == "pillage_road":
        world._ensure_hex(command.cell).improvement = Improvement.PILLAGED_ROAD
    elif op == "repair_road":
        world._ensure_hex(command.cell).improvement = Improvement.ROAD
    elif op == "build_state":
        region = world.region
        region.tiles[region.tiles.index(False)] = True
    elif op == "remove_state":
        region = world.region
        region.tiles[len(region.tiles) - 1 - region.tiles[::-1].index(True)] = False
    elif op == "move":
        unit.position = command.to
        if unit.uid == TAPE_WORKER and ROVER in world.units:
            # The rover shadows the tape worker: both arrive together.
            world.units[ROVER].position = command.to
    elif op == "found_city":
        index = command.city
        world.cities[index] = City(index=index, citizens=2, growth_cap=4)
        del world.units[SETTLER]
        world.log("world", "city_founded", {"city": index, "citizens": 2})
        return
    world.log(unit.uid, f"{op}_done", command.describe())


def _city_food_delta(world: WorldState, city: City) -> tuple[int, int]:
    """(income, upkeep) for one turn. One citizen is locked to the center
    (its yield is inside city_base_food); citizens the tape demands work the
    grassland cells; everyone else works a floodplain."""
    p = world.params
    flags = sum(1 for c in city.tape_cells if world.hex_at(c).worked)
    tape_workers = min(flags, city.citizens - 1)
    idle = city.citizens - 1 - tape_workers
    income = p.city_base_food + p.grassland_food * tape_workers + p.floodplains_food * idle
    upkeep = p.citizen_food_upkeep * city.citizens
    return income, upkeep


def advance_turn(world: WorldState) -> WorldState:
    """Advance one turn: jobs whose time has come take effect, then cities
    collect food, make training progress, and grow toward their caps."""
    world.turn += 1
    for uid in sorted(world.units):
        unit = world.units[uid]
        if unit.busy and unit.job.completes_at <= world.turn:
            _complete_job(world, unit)

    if world.params.ruleset != RULESET_VI:
        return world

    p = world.params
    for index in sorted(world.cities):
        city = world.cities[index]
        income, upkeep = _city_food_delta(world, city)
        city.food_stock += income - upkeep
        if world.min_food_observed is None or city.food_stock < world.min_food_observed:
            world.min_food_observed = city.food_stock
        if city.food_stock < 0:
            raise Starvation(f"city {city.index} food stock fell to {city.food_stock} on turn {world.turn}")
        if city.training_cost is not None:
            city.production_stock += p.production_per_turn
            if city.production_stock >= city.training_cost:
                city.production_stock = 0
                city.training_cost = None
                city.citizens -= 1
                city.growth_cap = 3
                world.units[SETTLER] = Unit(uid=SETTLER, kind="Settler", position=city.center(p.city_spacing))
                world.log("world", "settler_trained", {"city": city.index, "citizens": city.citizens})
        if city.citizens < city.growth_cap:
            city.growth_progress += 1
            if city.growth_progress >= p.city_growth_turns:
                city.growth_progress = 0
                city.citizens += 1
                world.log("world", "citizen_born", {"city": city.index, "citizens": city.citizens})
        else:
            city.growth_progress = 0
    return world


def yields(world: WorldState) -> dict[str, int]:
    """Per-turn resource income as a pure function of the state."""
    p = world.params
    if p.ruleset == RULESET_VI:
        faith = world.region.base_yield + p.monastery_faith * world.region.count
        food = 0
        for city in world.cities.values():
            income, upkeep = _city_food_delta(world, city)
            food += income - upkeep
        return {"faith": faith, "food": food}
    culture = world.region.base_yield + (p.terrascape_culture * world.region.count if p.ruleset == RULESET_BE else 0)
    return {"culture": culture}


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------


def world_snapshot(world: WorldState) -> dict:
    tape = {
        str(cell): {"improvement": hx.improvement.value, "worked": hx.worked, "terrain": hx.terrain}
        for cell, hx in sorted(world.tape.items())
    }
    region = {
        "kind": world.region.kind,
        "tiles": list(world.region.tiles),
        "base_yield": world.region.base_yield,
    }
    if world.region.farm_tiles is not None:
        region["farm_tiles"] = list(world.region.farm_tiles)
    units = {
        uid: {
            "kind": u.kind,
            "position": u.position,
            "busy_until": u.job.completes_at if u.busy else None,
            "job": u.job.command.describe() if u.busy else None,
        }
        for uid, u in sorted(world.units.items())
    }
    cities = [
        {
            "index": c.index,
            "citizens": c.citizens,
            "growth_cap": c.growth_cap,
            "food_stock": c.food_stock,
            "production_stock": c.production_stock,
            "training_cost": c.training_cost,
            "tape_cells": list(c.tape_cells),
        }
        for _, c in sorted(world.cities.items())
    ]
    return {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "params": asdict(world.params),
        "tape": tape,
        "state_region": region,
        "units": units,
        "cities": cities,
        "turn": world.turn,
    }


def event_log_lines(world: WorldState) -> list[str]:
    header = {"format_version": EVENT_LOG_FORMAT_VERSION, "kind": "event_log"}
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps(event, sort_keys=True) for event in world.event_log]
    return lines

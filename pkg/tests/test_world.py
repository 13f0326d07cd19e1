"""World engine tests: legality, job timing, yields, VI city economy."""

from __future__ import annotations

import random

import pytest

from civutm.errors import IllegalCommand, Starvation
from civutm.world import (
    ROVER,
    RULESET_BE,
    RULESET_V,
    RULESET_VI,
    SETTLER,
    STATE_WORKER,
    TAPE_WORKER,
    Command,
    Improvement,
    LEGAL_IMPROVEMENTS,
    RulesetParams,
    advance_turn,
    apply_command,
    event_log_lines,
    init_world,
    world_snapshot,
    yields,
)


def test_params_require_railroad_cost_above_one():
    params = RulesetParams.defaults(RULESET_V)
    params.railroad_build_turns = 1
    with pytest.raises(IllegalCommand, match="railroad_build_turns"):
        params.validate()


def test_params_require_positive_durations():
    params = RulesetParams.defaults(RULESET_BE)
    params.road_build_turns = 0
    with pytest.raises(IllegalCommand):
        params.validate()


def test_params_vi_spacing_must_be_even():
    params = RulesetParams.defaults(RULESET_VI)
    params.city_spacing = 3
    with pytest.raises(IllegalCommand, match="city_spacing"):
        params.validate()


def test_init_rejects_symbols_outside_ruleset():
    with pytest.raises(IllegalCommand):
        init_world(RULESET_BE, {0: "railroad"})
    with pytest.raises(IllegalCommand):
        init_world(RULESET_V, {0: "pillaged_road"})
    with pytest.raises(IllegalCommand):
        init_world(RULESET_VI, {0: "road"})


def test_init_be_empty_tape():
    world = init_world(RULESET_BE, {})
    assert world.region.count == 0
    assert yields(world)["culture"] == world.params.base_culture
    assert world.units[TAPE_WORKER].position == 0
    assert ROVER in world.units and STATE_WORKER in world.units


def test_init_v_encodes_tape_directly():
    world = init_world(RULESET_V, {0: "road", 1: "railroad"})
    assert world.hex_at(0).improvement is Improvement.ROAD
    assert world.hex_at(1).improvement is Improvement.RAILROAD
    assert world.region.count == 0


def test_init_vi_single_city():
    world = init_world(RULESET_VI, {})
    assert sorted(world.cities) == [0]
    city = world.cities[0]
    assert city.citizens == 4 and city.growth_cap == 4
    assert city.tape_cells == (0, 1)
    assert not world.hex_at(0).worked and not world.hex_at(1).worked
    assert yields(world)["faith"] == world.params.base_faith


def test_init_vi_covers_initial_cells():
    world = init_world(RULESET_VI, {5: "worked"})
    assert sorted(world.cities) == [0, 1, 2]
    assert world.cities[0].growth_cap == 4  # left end
    assert world.cities[2].growth_cap == 4  # right end
    assert world.cities[1].growth_cap == 3  # interior
    assert world.hex_at(5).worked


def test_road_job_timing():
    # A road scheduled on turn 5 with M=1 stands on turn 6.
    world = init_world(RULESET_BE, {})
    for _ in range(5):
        advance_turn(world)
    apply_command(world, TAPE_WORKER, Command(op="build_road", cell=0))
    assert world.hex_at(0).improvement is Improvement.NONE
    advance_turn(world)
    assert world.turn == 6
    assert world.hex_at(0).improvement is Improvement.ROAD


def test_build_road_on_road_is_illegal():
    world = init_world(RULESET_BE, {0: "road"})
    with pytest.raises(IllegalCommand, match="cannot build a road"):
        apply_command(world, TAPE_WORKER, Command(op="build_road", cell=0))


def test_v_build_over_railroad_requires_removal():
    world = init_world(RULESET_V, {0: "railroad"})
    with pytest.raises(IllegalCommand):
        apply_command(world, TAPE_WORKER, Command(op="build_road", cell=0))
    apply_command(world, TAPE_WORKER, Command(op="remove_improvement", cell=0))
    advance_turn(world)
    apply_command(world, TAPE_WORKER, Command(op="build_road", cell=0))
    advance_turn(world)
    assert world.hex_at(0).improvement is Improvement.ROAD


def test_pillage_is_rover_only_and_be_only():
    world = init_world(RULESET_BE, {0: "road"})
    with pytest.raises(IllegalCommand, match="rover"):
        apply_command(world, TAPE_WORKER, Command(op="pillage_road", cell=0))
    apply_command(world, ROVER, Command(op="pillage_road", cell=0))
    advance_turn(world)
    assert world.hex_at(0).improvement is Improvement.PILLAGED_ROAD
    world_v = init_world(RULESET_V, {0: "road"})
    with pytest.raises(IllegalCommand):
        apply_command(world_v, TAPE_WORKER, Command(op="pillage_road", cell=0))


def test_repair_restores_road():
    world = init_world(RULESET_BE, {0: "pillaged_road"})
    apply_command(world, TAPE_WORKER, Command(op="repair_road", cell=0))
    advance_turn(world)
    assert world.hex_at(0).improvement is Improvement.ROAD


def test_busy_unit_rejects_second_command():
    world = init_world(RULESET_BE, {})
    apply_command(world, TAPE_WORKER, Command(op="build_road", cell=0))
    with pytest.raises(IllegalCommand, match="busy"):
        apply_command(world, TAPE_WORKER, Command(op="move", to=1))


def test_state_region_build_and_remove():
    world = init_world(RULESET_BE, {})
    apply_command(world, STATE_WORKER, Command(op="build_state"))
    for _ in range(world.params.terrascape_build_turns):
        advance_turn(world)
    assert world.region.count == 1
    assert yields(world)["culture"] == world.params.base_culture + world.params.terrascape_culture
    apply_command(world, STATE_WORKER, Command(op="remove_state"))
    advance_turn(world)
    assert world.region.count == 0


def test_state_region_capacity():
    params = RulesetParams.defaults(RULESET_BE)
    params.state_region_tiles = 1
    world = init_world(RULESET_BE, {}, params)
    apply_command(world, STATE_WORKER, Command(op="build_state"))
    for _ in range(params.terrascape_build_turns):
        advance_turn(world)
    with pytest.raises(IllegalCommand, match="full"):
        apply_command(world, STATE_WORKER, Command(op="build_state"))


def test_vi_citizen_reassignment_is_instant():
    world = init_world(RULESET_VI, {})
    base = yields(world)["faith"]
    apply_command(world, "player", Command(op="shift_monasteries", count=1))
    assert yields(world)["faith"] == base + world.params.monastery_faith
    assert world.region.farm_tiles.count(True) == world.params.state_region_tiles - 1
    apply_command(world, "player", Command(op="set_worked", cell=0, worked=True))
    assert world.hex_at(0).worked


def test_vi_monastery_bounds():
    world = init_world(RULESET_VI, {})
    with pytest.raises(IllegalCommand):
        apply_command(world, "player", Command(op="shift_monasteries", count=-1))
    with pytest.raises(IllegalCommand):
        apply_command(world, "player", Command(op="shift_monasteries", count=world.params.state_region_tiles + 1))


def test_vi_food_balance_full_city():
    # Both tape cells worked by a 4-citizen city: the center and grassland
    # income alone exactly covers the upkeep (the published worst case); the
    # spare citizen's floodplain keeps the net positive.
    world = init_world(RULESET_VI, {0: "worked", 1: "worked"})
    p = world.params
    grass_income = p.city_base_food + 2 * p.grassland_food
    upkeep = p.citizen_food_upkeep * 4
    assert grass_income == upkeep == 8
    assert yields(world)["food"] == p.floodplains_food
    advance_turn(world)
    assert world.cities[0].food_stock == p.floodplains_food


def test_vi_food_never_negative_when_idle():
    world = init_world(RULESET_VI, {})
    for _ in range(50):
        advance_turn(world)
    assert world.cities[0].food_stock > 0
    assert world.min_food_observed >= 0


def test_vi_starvation_guard_raises():
    # Force a deficit (no floodplain fallback) to prove the guard trips.
    params = RulesetParams.defaults(RULESET_VI)
    params.floodplains_food = 0
    world = init_world(RULESET_VI, {}, params)
    with pytest.raises(Starvation):
        for _ in range(10):
            advance_turn(world)


def test_vi_growth_clock_and_cap():
    world = init_world(RULESET_VI, {})
    city = world.cities[0]
    city.citizens = 2  # below cap
    for _ in range(world.params.city_growth_turns):
        advance_turn(world)
    assert city.citizens == 3
    for _ in range(world.params.city_growth_turns):
        advance_turn(world)
    assert city.citizens == 4
    for _ in range(2 * world.params.city_growth_turns):
        advance_turn(world)
    assert city.citizens == 4  # holds at cap


def test_vi_settler_training_and_founding():
    world = init_world(RULESET_VI, {})
    p = world.params
    cost = p.settler_cost(2)
    apply_command(world, "player", Command(op="train_settler", city=0))
    turns = -(-cost // p.production_per_turn)
    for _ in range(turns):
        advance_turn(world)
    assert SETTLER in world.units
    city = world.cities[0]
    assert city.citizens == 3 and city.growth_cap == 3
    apply_command(world, SETTLER, Command(op="move", to=p.city_spacing))
    for _ in range(p.city_spacing):
        advance_turn(world)
    apply_command(world, SETTLER, Command(op="found_city", city=1))
    for _ in range(p.settler_found_turns):
        advance_turn(world)
    assert SETTLER not in world.units
    new = world.cities[1]
    assert new.citizens == 2 and new.growth_cap == 4
    for _ in range(2 * p.city_growth_turns):
        advance_turn(world)
    assert new.citizens == 4


def test_vi_settler_needs_two_citizens():
    world = init_world(RULESET_VI, {})
    world.cities[0].citizens = 1
    with pytest.raises(IllegalCommand, match="one-citizen"):
        apply_command(world, "player", Command(op="train_settler", city=0))


def test_vi_found_city_must_extend_contiguously():
    world = init_world(RULESET_VI, {})
    world.units[SETTLER] = type(world.units[TAPE_WORKER])(uid=SETTLER, kind="Settler", position=0)
    with pytest.raises(IllegalCommand, match="contiguously"):
        apply_command(world, SETTLER, Command(op="found_city", city=5))


def test_vi_set_worked_needs_free_citizen():
    world = init_world(RULESET_VI, {})
    world.cities[0].citizens = 2  # center + one worker
    apply_command(world, "player", Command(op="set_worked", cell=0, worked=True))
    with pytest.raises(IllegalCommand, match="free citizen"):
        apply_command(world, "player", Command(op="set_worked", cell=1, worked=True))


def _scripted_run(seed: int):
    rng = random.Random(seed)
    world = init_world(RULESET_BE, {})
    for _ in range(40):
        roll = rng.random()
        try:
            if roll < 0.3:
                apply_command(world, STATE_WORKER, Command(op="build_state"))
            elif roll < 0.5:
                apply_command(world, STATE_WORKER, Command(op="remove_state"))
            elif roll < 0.7:
                cell = rng.randint(-2, 2)
                apply_command(world, TAPE_WORKER, Command(op="build_road", cell=cell))
            else:
                apply_command(world, ROVER, Command(op="pillage_road", cell=rng.randint(-2, 2)))
        except IllegalCommand:
            pass
        advance_turn(world)
    return world


def test_determinism_identical_histories():
    a, b = _scripted_run(7), _scripted_run(7)
    assert a.event_log == b.event_log
    assert world_snapshot(a) == world_snapshot(b)


def test_yield_linearity_and_legality_closure():
    for seed in range(5):
        world = _scripted_run(seed)
        assert yields(world)["culture"] - world.params.base_culture == (
            world.params.terrascape_culture * world.region.count
        )
        for hx in world.tape.values():
            assert hx.improvement in LEGAL_IMPROVEMENTS[RULESET_BE]


def test_snapshot_and_event_log_are_versioned():
    world = init_world(RULESET_V, {0: "road"})
    snap = world_snapshot(world)
    assert snap["format_version"] == 1
    assert snap["tape"]["0"]["improvement"] == "road"
    lines = event_log_lines(world)
    assert '"format_version": 1' in lines[0]

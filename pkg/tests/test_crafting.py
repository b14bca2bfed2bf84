import pytest

from questforge.crafting import (
    LevelingError,
    UncraftableError,
    cost,
    dependency_closure,
    dependency_closure_many,
    leveling_schedule,
    total_difficulty,
)


def test_raw_resource_closure(toy_world):
    closure = dependency_closure(toy_world, "ore", 3)
    assert closure.gather_steps == (("ore_vein", 3),)
    assert closure.craft_steps == ()
    assert closure.fight_steps == ()


def test_sword_closure_hand_expanded(toy_world):
    closure = dependency_closure(toy_world, "sword", 1)
    assert dict(closure.gather_steps) == {"ore_vein": 2, "young_woods": 1}
    assert [(r.output_id, n) for r, n in closure.craft_steps] == [("sword", 1)]
    assert closure.required_levels == {"mining": 1, "woodcutting": 1}


def test_drop_closure_uses_fights(toy_world):
    closure = dependency_closure(toy_world, "ring", 1)
    assert closure.fight_steps == (("rat", 1),)
    assert dict(closure.gather_steps) == {"ore_vein": 1}
    assert closure.required_levels["mining"] == 2


def test_closure_scales_linearly(toy_world):
    one = dependency_closure(toy_world, "sword", 2)
    two = dependency_closure(toy_world, "sword", 4)
    assert dict(two.gather_steps) == {n: 2 * q for n, q in one.gather_steps}
    assert dict(two.fight_steps) == {m: 2 * k for m, k in one.fight_steps}


def test_closure_merges_shared_ingredients(toy_world):
    merged = dependency_closure_many(toy_world, {"sword": 1, "ring": 1})
    # ore demand pools across both items: 2 for the sword, 1 for the ring
    assert dict(merged.gather_steps)["ore_vein"] == 3
    outputs = [r.output_id for r, _n in merged.craft_steps]
    assert sorted(outputs) == ["ring", "sword"]


def test_cost_values(toy_world):
    assert cost(toy_world, "ore") == 1  # one gather
    assert cost(toy_world, "club") == 1
    assert cost(toy_world, "sword") == 4  # 3 gathers + 1 craft
    assert cost(toy_world, "ring") == 3  # gather + kill + craft
    assert cost(toy_world, "cap") == 4


def test_cost_of_item_with_subcraft_exceeds_subcost(reference_world):
    sub = cost(reference_world, "copper_bar")
    full = cost(reference_world, "tier1_fire_blade")
    assert full >= sub + 1


def test_uncraftable_item_raises(toy_world):
    with pytest.raises(UncraftableError) as err:
        cost(toy_world, "ceremonial_blade")
    assert "void_crystal" in str(err.value)


def test_total_difficulty_formula(toy_world):
    assert total_difficulty(toy_world, []) == 0
    assert total_difficulty(toy_world, ["club"]) == 2
    assert total_difficulty(toy_world, ["sword", "ring"]) == 2 + 4 + 3


def test_total_difficulty_exceeds_missing_count(toy_world):
    assert total_difficulty(toy_world, ["sword"]) > 1


def test_leveling_schedule_identity(toy_world):
    assert leveling_schedule(toy_world, "mining", 2, 2) == []


def test_leveling_schedule_single_node(toy_world):
    # threshold(1 -> 2) is 100 xp; the ore vein grants 10 per gather
    assert leveling_schedule(toy_world, "mining", 1, 2) == [("ore_vein", 10)]


def test_leveling_schedule_switches_to_better_node(toy_world):
    schedule = leveling_schedule(toy_world, "woodcutting", 1, 6)
    assert schedule == [("young_woods", 100), ("old_grove_trees", 17)]


def test_leveling_unreachable_level(toy_world):
    with pytest.raises(LevelingError):
        leveling_schedule(toy_world, "herbalism", 1, 2)  # no such profession nodes


def test_leveling_xp_carryover(toy_world):
    # 10 gathers of 10 xp hit exactly 100; an 11th would carry over
    schedule = leveling_schedule(toy_world, "mining", 1, 3)
    assert schedule[0] == ("ore_vein", 30)  # 100 + 200 xp at 10 xp per gather

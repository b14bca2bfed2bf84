#!/usr/bin/env python3
"""Builds the reference world bundle and calibrates difficulty brackets.

The world is fully synthetic but carefully balanced: nine gear tiers, each
with one or two target monsters tuned (against the real combat engine) so the
intended tier loadout is a minimal winning set of a known size. Output JSON
goes to src/questforge/data/worlds/reference/ and the calibrated bracket
boundaries to src/questforge/data/brackets.json.

Run from the repository root:  python3 tools/gen_reference_world.py [--check]
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from questforge import combat  # noqa: E402
from questforge.stats import ELEMENTS, StatVector  # noqa: E402
from questforge.world import load_world_dir  # noqa: E402

OUT_DIR = REPO / "src/questforge/data/worlds/reference"
BRACKETS_PATH = REPO / "src/questforge/data/brackets.json"

TIERS = range(1, 10)
TIER_LEVEL = {t: 3 * t - 2 for t in TIERS}  # 1, 4, 7, ... 25
MAT_TIER = {t: math.ceil(t / 2) for t in TIERS}  # 1..5
MAT_LEVEL = {m: 6 * m - 5 for m in range(1, 6)}  # 1, 7, 13, 19, 25

ORES = {1: "copper_ore", 2: "iron_ore", 3: "silver_ore", 4: "gold_ore", 5: "mithril_ore"}
WOODS = {1: "ash_wood", 2: "birch_wood", 3: "oak_wood", 4: "maple_wood", 5: "yew_wood"}
HERBS = {1: "nettle_leaf", 2: "sage_leaf", 3: "moss_flower", 4: "sun_herb"}
GEMS = {"quartz_shard": 7, "azure_crystal": 13, "ember_stone": 22}
BARS = {m: ORES[m].replace("_ore", "_bar").replace("coal", "coal") for m in ORES}
PLANKS = {m: WOODS[m].replace("_wood", "_plank") for m in WOODS}
EXTRACTS = {m: HERBS[m].replace("_leaf", "_extract").replace("_flower", "_extract")
            .replace("_herb", "_extract") for m in HERBS}

# gem used by jewelry of tier t (tiers 1-2: no gem)
def jewel_gem(t: int):
    if t <= 2:
        return None
    if t <= 4:
        return "quartz_shard"
    if t <= 7:
        return "azure_crystal"
    return "ember_stone"


DROP_MONSTERS = [
    # (monster id, drop item, hp, attack, band level)
    ("green_slime", "slime_gel", 45, 3, 1),
    ("dire_wolf", "wolf_pelt", 90, 5, 4),
    ("ironhide_boar", "boar_tusk", 120, 6, 7),
    ("cave_bat", "bat_wing", 150, 7, 10),
    ("widow_spider", "spider_silk", 190, 8, 13),
    ("stone_golem", "golem_core", 240, 10, 16),
    ("young_wyvern", "wyvern_scale", 300, 12, 19),
]
WEAPON_DROP = {4: "wolf_pelt", 5: "boar_tusk", 6: "bat_wing", 7: "spider_silk",
               8: "golem_core", 9: "wyvern_scale"}

TARGET_NAMES = {
    1: ("bandit_scout", "mud_crab"),
    2: ("feral_hound", "marsh_lurker"),
    3: ("ogre_brute", "hollow_knight"),
    4: ("bone_warden", "river_troll"),
    5: ("frost_shade", "iron_revenant"),
    6: ("storm_harpy", "gloom_stalker"),
    7: ("obsidian_sentinel", "pit_fiend"),
    8: ("eld_lich", "sky_tyrant"),
    9: ("ancient_dragon", "void_colossus"),
}

NOISE_SPECIALS = ["void_shard", "demon_horn", "phoenix_feather",
                  "abyssal_pearl", "rune_fragment", "dragon_bone"]

# (noise item id, tier, slot, special ingredient)
NOISE_GEAR = [
    ("gladiator_blade", 1, "weapon", "void_shard"),
    ("duelist_buckler", 1, "shield", "demon_horn"),
    ("warlord_edge", 2, "weapon", "phoenix_feather"),
    ("basilisk_helm", 3, "helmet", "abyssal_pearl"),
    ("executioner_axe", 3, "weapon", "rune_fragment"),
    ("juggernaut_plate", 4, "body_armor", "dragon_bone"),
    ("tempest_saber", 5, "weapon", "void_shard"),
    ("mirage_band", 5, "ring", "phoenix_feather"),
    ("colossus_greaves", 6, "leg_armor", "demon_horn"),
    ("seraphim_crown", 7, "helmet", "abyssal_pearl"),
    ("oblivion_cleaver", 8, "weapon", "rune_fragment"),
    ("worldbreaker_maul", 9, "weapon", "dragon_bone"),
]


def weapon_elements(t: int) -> list[str]:
    return [ELEMENTS[(t - 1) % 4], ELEMENTS[t % 4], ELEMENTS[(t + 1) % 4]]


def weapon_attack(t: int) -> int:
    return 14 + 8 * (t - 1)


def armor_hp(t: int, slot: str) -> int:
    base = {"body_armor": 12, "helmet": 8, "leg_armor": 10, "boots": 6, "shield": 6}[slot]
    per = {"body_armor": 6, "helmet": 4, "leg_armor": 5, "boots": 3, "shield": 3}[slot]
    return base + per * (t - 1)


def armor_resist(slot: str) -> int:
    return 10 if slot == "shield" else 4


def amulet_amp(t: int) -> int:
    return 10 + 2 * t


def ring_amp(t: int) -> int:
    return 4 + t


def node_xp(level: int) -> int:
    return 10 + 5 * level


def vec(**kv) -> dict:
    out = {}
    for key, val in kv.items():
        if key in ("hp",):
            out["hp"] = val
        else:
            out[key] = val
    return out


def all_elem(value: int) -> dict:
    return {e: value for e in ELEMENTS}


class WorldBuilder:
    def __init__(self):
        self.items: list[dict] = []
        self.recipes: list[dict] = []
        self.monsters: list[dict] = []
        self.nodes: list[dict] = []
        self.locations: list[dict] = []
        self.skills = [
            {"id": "herbalism", "name": "Herbalism"},
            {"id": "mining", "name": "Mining"},
            {"id": "woodcutting", "name": "Woodcutting"},
        ]
        self._item_ids = set()

    def item(self, item_id, name, level, stats, sources, slot=None):
        assert item_id not in self._item_ids, item_id
        self._item_ids.add(item_id)
        entry = {"id": item_id, "name": name, "level": level,
                 "stats": stats, "sources": sources}
        if slot:
            entry["slot"] = slot
        self.items.append(entry)

    def recipe(self, output_id, skill, skill_level, ingredients, workshop, output_qty=1):
        self.recipes.append({
            "output_id": output_id, "output_qty": output_qty, "skill": skill,
            "skill_level": skill_level,
            "ingredients": [{"item_id": i, "qty": q} for i, q in ingredients],
            "workshop": workshop,
        })

    def build_materials(self):
        for m, ore in ORES.items():
            level = MAT_LEVEL[m]
            node_id = f"{ore}_vein"
            self.item(ore, _title(ore), 1, {}, [{"type": "gather", "node_id": node_id}])
            self.nodes.append({"id": node_id, "resource_item_id": ore, "skill": "mining",
                               "skill_level": level, "xp_reward": node_xp(level),
                               "location_id": None})
            bar = BARS[m]
            self.item(bar, _title(bar), 1, {}, [{"type": "craft"}])
            self.recipe(bar, "mining", level, [(ore, 2)], "forge")
        for m, wood in WOODS.items():
            level = MAT_LEVEL[m]
            node_id = f"{wood}_grove"
            self.item(wood, _title(wood), 1, {}, [{"type": "gather", "node_id": node_id}])
            self.nodes.append({"id": node_id, "resource_item_id": wood, "skill": "woodcutting",
                               "skill_level": level, "xp_reward": node_xp(level),
                               "location_id": None})
            plank = PLANKS[m]
            self.item(plank, _title(plank), 1, {}, [{"type": "craft"}])
            self.recipe(plank, "woodcutting", level, [(wood, 2)], "sawmill")
        for m, herb in HERBS.items():
            level = MAT_LEVEL[m]
            node_id = f"{herb}_patch"
            self.item(herb, _title(herb), 1, {}, [{"type": "gather", "node_id": node_id}])
            self.nodes.append({"id": node_id, "resource_item_id": herb, "skill": "herbalism",
                               "skill_level": level, "xp_reward": node_xp(level),
                               "location_id": None})
            extract = EXTRACTS[m]
            self.item(extract, _title(extract), 1, {}, [{"type": "craft"}])
            self.recipe(extract, "herbalism", level, [(herb, 2)], "apothecary")
        for gem, level in GEMS.items():
            node_id = f"{gem}_deposit"
            self.item(gem, _title(gem), 1, {}, [{"type": "gather", "node_id": node_id}])
            self.nodes.append({"id": gem + "_deposit", "resource_item_id": gem,
                               "skill": "mining", "skill_level": level,
                               "xp_reward": node_xp(level), "location_id": None})
        for mon_id, drop, _hp, _atk, band in DROP_MONSTERS:
            # drop materials carry the hunting band's level so craft tasks
            # targeting them start a character that can plausibly win the fight
            self.item(drop, _title(drop), band, {},
                      [{"type": "drop", "monster_id": mon_id}])

    def _weapon_recipe(self, t: int) -> list[tuple[str, int]]:
        m = MAT_TIER[t]
        if t == 1:
            return [(BARS[m], 1)]
        bars = 2 if t <= 5 else (3 if t <= 8 else 4)
        planks = 1 if t <= 7 else 2
        ings = [(BARS[m], bars), (PLANKS[m], planks)]
        if t in WEAPON_DROP:
            ings.append((WEAPON_DROP[t], 2 if t == 9 else 1))
        return ings

    def _armor_recipe(self, t: int, slot: str) -> tuple[list[tuple[str, int]], str, str]:
        m = MAT_TIER[t]
        me = min(m, 4)
        if slot == "body_armor":
            qty = 3 if t <= 5 else (4 if t <= 8 else 5)
            return [(BARS[m], qty)], "mining", "forge"
        if slot == "helmet":
            qty = 2 if t <= 6 else (3 if t <= 8 else 4)
            return [(BARS[m], qty)], "mining", "forge"
        if slot == "leg_armor":
            bars = 2 if t <= 8 else 3
            planks = 1 if t <= 6 else 2
            return [(BARS[m], bars), (PLANKS[m], planks)], "mining", "forge"
        if slot == "boots":
            planks = 1 if t <= 6 else 2
            extracts = 1 if t <= 8 else 2
            return [(PLANKS[m], planks), (EXTRACTS[me], extracts)], "woodcutting", "sawmill"
        if slot == "shield":
            qty = 2 if t <= 6 else (3 if t <= 8 else 4)
            return [(PLANKS[m], qty)], "woodcutting", "sawmill"
        raise ValueError(slot)

    def build_gear(self):
        for t in TIERS:
            level = TIER_LEVEL[t]
            m = MAT_TIER[t]
            me = min(m, 4)
            gem = jewel_gem(t)
            for elem in weapon_elements(t):
                wid = f"tier{t}_{elem}_blade"
                self.item(wid, _title(wid), level,
                          {"attack": {elem: weapon_attack(t)}},
                          [{"type": "craft"}], slot="weapon")
                self.recipe(wid, "mining", level, self._weapon_recipe(t), "forge")
            for slot, short in (("shield", "shield"), ("helmet", "helm"),
                                ("body_armor", "plate"), ("leg_armor", "greaves"),
                                ("boots", "boots")):
                primary = f"tier{t}_{short}"
                hp = armor_hp(t, slot)
                res = armor_resist(slot)
                ings, skill, workshop = self._armor_recipe(t, slot)
                self.item(primary, _title(primary), level,
                          {"hp": hp, "resist": all_elem(res)},
                          [{"type": "craft"}], slot=slot)
                self.recipe(primary, skill, level, ings, workshop)
                # clearly weaker sibling: target fights are tuned tight enough
                # that these rarely squeeze into alternative minimal sets
                variant = f"tier{t}_worn_{short}"
                self.item(variant, _title(variant), level,
                          {"hp": max(1, (hp * 3) // 5), "resist": all_elem(max(0, res - 2))},
                          [{"type": "craft"}], slot=slot)
                self.recipe(variant, skill, level, ings, workshop)
            # amulets (tier 1 has no variant: keeps the item census at 208)
            amulet = f"tier{t}_amulet"
            am_ings = [(EXTRACTS[me], 2 if t == 9 else 1)]
            if gem:
                am_ings.append((gem, 2 if t == 9 else 1))
            self.item(amulet, _title(amulet), level,
                      {"dmg_amp": all_elem(amulet_amp(t))}, [{"type": "craft"}],
                      slot="amulet")
            self.recipe(amulet, "herbalism", level, am_ings, "apothecary")
            if t >= 2:
                variant = f"tier{t}_dull_amulet"
                self.item(variant, _title(variant), level,
                          {"dmg_amp": all_elem(max(1, amulet_amp(t) - 7))}, [{"type": "craft"}],
                          slot="amulet")
                self.recipe(variant, "herbalism", level, am_ings, "apothecary")
            ring = f"tier{t}_ring"
            ring_ings = [(BARS[m], 2 if t == 9 else 1)]
            if gem:
                ring_ings.append((gem, 2 if t == 9 else 1))
            self.item(ring, _title(ring), level,
                      {"dmg_amp": all_elem(ring_amp(t))}, [{"type": "craft"}], slot="ring")
            self.recipe(ring, "mining", level, ring_ings, "jeweler")
            variant = f"tier{t}_cracked_ring"
            self.item(variant, _title(variant), level,
                      {"dmg_amp": all_elem(max(1, ring_amp(t) - 4))}, [{"type": "craft"}],
                      slot="ring")
            self.recipe(variant, "mining", level, ring_ings, "jeweler")

    def build_noise(self):
        for special in NOISE_SPECIALS:
            self.item(special, _title(special), 1, {}, [])  # no acquisition route
        for noise_id, t, slot, special in NOISE_GEAR:
            level = TIER_LEVEL[t]
            m = MAT_TIER[t]
            if slot == "weapon":
                elem = ELEMENTS[(t - 1) % 4]
                stats = {"attack": {elem: weapon_attack(t) + 6}}
                ings = [(BARS[m], 2), (special, 1)]
                skill, workshop = "mining", "forge"
            elif slot == "ring":
                stats = {"dmg_amp": all_elem(ring_amp(t) + 2)}
                ings = [(BARS[m], 1), (special, 1)]
                skill, workshop = "mining", "jeweler"
            else:
                stats = {"hp": armor_hp(t, slot) + 6, "resist": all_elem(armor_resist(slot) + 1)}
                ings = [(BARS[m], 2), (special, 1)]
                skill, workshop = ("mining", "forge") if slot != "shield" else ("woodcutting", "sawmill")
            self.item(noise_id, _title(noise_id), level, stats, [{"type": "craft"}],
                      slot=slot)
            self.recipe(noise_id, skill, level, ings, workshop)

    def intended_gear(self, t: int, weak_elem: str) -> list[str]:
        # defense added strongest-first (shield's resist beats boots' hp), so
        # no same-size slot substitution can out-survive a pinned losing subset
        order = [f"tier{t}_{weak_elem}_blade", f"tier{t}_plate", f"tier{t}_shield",
                 f"tier{t}_greaves", f"tier{t}_helm", f"tier{t}_boots",
                 f"tier{t}_amulet", f"tier{t}_ring"]
        size = min(t, 8)
        return order[:size]

    def build_targets(self):
        stats_by_id = {i["id"]: StatVector.from_json(i["stats"]) for i in self.items}
        for t in TIERS:
            for idx, mon_id in enumerate(TARGET_NAMES[t]):
                weak = weapon_elements(t)[1 + idx % 2]
                attack_elem = ELEMENTS[(t - 1 + idx) % 4]
                resist = {e: 60 for e in ELEMENTS}
                resist[weak] = 0
                gear_ids = self.intended_gear(t, weak)
                base = combat.player_base_stats(TIER_LEVEL[t])
                eff = base
                for gid in gear_ids:
                    eff = eff + stats_by_id[gid]
                tau = 8 + t + idx
                proto = StatVector(hp=1, resist=tuple(resist[e] for e in ELEMENTS))
                dmg = combat.damage_per_turn(eff, proto)
                hp = dmg * tau
                attack_value = self._solve_attack(eff, stats_by_id, gear_ids, base,
                                                  hp, resist, attack_elem, tau)
                self.monsters.append({
                    "id": mon_id,
                    "stats": {"hp": hp, "attack": {attack_elem: attack_value},
                              "resist": resist},
                    "difficulty_level": TIER_LEVEL[t],
                    "drops": [],
                    "location_id": None,
                })

    def _solve_attack(self, eff, stats_by_id, gear_ids, base, hp, resist,
                      attack_elem, tau) -> int:
        def monster(attack_value) -> StatVector:
            return StatVector(
                hp=hp,
                attack=tuple(attack_value if e == attack_elem else 0 for e in ELEMENTS),
                resist=tuple(resist[e] for e in ELEMENTS),
            )

        def wins(gear_subset, attack_value) -> bool:
            total = base
            for gid in gear_subset:
                total = total + stats_by_id[gid]
            return combat.simulate(total, monster(attack_value)).player_won

        feasible = []
        for attack_value in range(1, 400):
            if not wins(gear_ids, attack_value):
                break
            removals_lose = all(
                not wins([g for g in gear_ids if g != gid], attack_value)
                for gid in gear_ids
            )
            if removals_lose:
                feasible.append(attack_value)
        if not feasible:
            raise RuntimeError(f"no feasible attack for {gear_ids} (tau={tau})")
        # hardest feasible attack: keeps alternative winning sets rare, which
        # keeps element/slot choice meaningful and the search frontier tight
        return feasible[-1]

    def build_drop_monsters(self):
        for mon_id, drop, hp, atk, band in DROP_MONSTERS:
            elem = ELEMENTS[band % 4]
            self.monsters.append({
                "id": mon_id,
                "stats": {"hp": hp, "attack": {elem: atk}},
                "difficulty_level": band,
                "drops": [{"item_id": drop, "rate": 1.0}],
                "location_id": None,
            })

    def build_locations(self):
        width, height = 10, 7
        coords = [(x, y) for y in range(height) for x in range(width)]
        self.locations.append({
            "id": "town", "x": 0, "y": 0,
            "elements": [{"type": "workshop", "id": w}
                         for w in ("apothecary", "forge", "jeweler", "sawmill")],
        })
        cursor = 1
        for node in self.nodes:
            x, y = coords[cursor]
            cursor += 1
            node["location_id"] = f"loc_{x}_{y}"
            self.locations.append({
                "id": f"loc_{x}_{y}", "x": x, "y": y,
                "elements": [{"type": "node", "id": node["id"]}],
            })
        for mon in self.monsters:
            x, y = coords[cursor]
            cursor += 1
            mon["location_id"] = f"loc_{x}_{y}"
            self.locations.append({
                "id": f"loc_{x}_{y}", "x": x, "y": y,
                "elements": [{"type": "monster", "id": mon["id"]}],
            })
        while cursor < len(coords):
            x, y = coords[cursor]
            cursor += 1
            self.locations.append({"id": f"loc_{x}_{y}", "x": x, "y": y, "elements": []})

    def write(self, out_dir: Path):
        out_dir.mkdir(parents=True, exist_ok=True)
        docs = {
            "items.json": {"schema_version": 1,
                           "items": sorted(self.items, key=lambda i: i["id"])},
            "recipes.json": {"schema_version": 1,
                             "recipes": sorted(self.recipes, key=lambda r: r["output_id"])},
            "monsters.json": {"schema_version": 1,
                              "monsters": sorted(self.monsters, key=lambda m: m["id"])},
            "resource_nodes.json": {"schema_version": 1,
                                    "nodes": sorted(self.nodes, key=lambda n: n["id"])},
            "locations.json": {"schema_version": 1, "grid": {"width": 10, "height": 7},
                               "locations": self.locations},
            "skills.json": {"schema_version": 1, "skills": self.skills},
        }
        for name, doc in docs.items():
            with open(out_dir / name, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")


def _title(ident: str) -> str:
    return ident.replace("_", " ").title()


def candidate_difficulties(world, gear_cache: dict) -> list[int]:
    """Difficulty of every task the suite generator could emit."""
    from questforge.taskgen import enumerate_candidates

    difficulties = [cand[0] for cand in
                    enumerate_candidates(world, 0, False, 0, gear_cache=gear_cache)]
    difficulties.sort()
    return difficulties


# hand-shaped progression; the generator asserts every range holds a healthy
# candidate pool and prints the histogram when it does not
BOUNDARIES = [[2, 4], [5, 7], [8, 11], [12, 16], [17, 24],
              [25, 35], [36, 50], [51, 70], [71, 97]]


def calibrate_brackets(world, gear_cache: dict) -> list[list[int]]:
    difficulties = candidate_difficulties(world, gear_cache)
    lo, hi = difficulties[0], difficulties[-1]
    print(f"candidate difficulties: n={len(difficulties)} range=[{lo}, {hi}]")
    assert lo == 2, f"minimum difficulty {lo} != 2"
    assert hi <= 97, f"maximum difficulty {hi} > 97"

    ok = True
    for idx, (b_lo, b_hi) in enumerate(BOUNDARIES, start=1):
        count = sum(1 for d in difficulties if b_lo <= d <= b_hi)
        print(f"bracket {idx}: [{b_lo}, {b_hi}] with {count} candidates")
        if count < 20:
            ok = False
    if not ok:
        from collections import Counter
        print("histogram:", dict(sorted(Counter(difficulties).items())))
        raise RuntimeError("a bracket has fewer than 20 candidates; retune recipes")
    return BOUNDARIES


def self_check(world, gear_cache: dict) -> None:
    import time

    from questforge.crafting import cost
    from questforge.gear import minimal_winning_gear

    assert world.counts["locations"] == 70, world.counts
    assert world.counts["monsters"] == 25, world.counts
    assert world.counts["items"] == 208, world.counts
    assert world.counts["resource_types"] == 17, world.counts
    print("counts ok:", world.counts)

    for t in TIERS:
        for idx, mon_id in enumerate(TARGET_NAMES[t]):
            monster = world.monsters[mon_id]
            t0 = time.perf_counter()
            sets = minimal_winning_gear(world, monster)
            dt = time.perf_counter() - t0
            gear_cache[mon_id] = sets
            assert sets, f"{mon_id}: no winning gear"
            sizes = {len(s) for s in sets}
            expected = min(t, 8)
            assert sizes == {expected}, f"{mon_id}: sizes {sizes} != {expected}"
            full_d = len(sets[0]) + sum(cost(world, i) for i in sets[0].item_ids)
            print(f"tier {t} {mon_id}: {len(sets)} set(s) of size {expected}, "
                  f"full-missing D={full_d}, search {dt:.2f}s")
    for monster in world.monsters.values():
        if monster.id not in gear_cache:
            gear_cache[monster.id] = minimal_winning_gear(world, monster)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--check", action="store_true",
                        help="only run the self-check against the existing bundle")
    args = parser.parse_args()

    if not args.check:
        builder = WorldBuilder()
        builder.build_materials()
        builder.build_gear()
        builder.build_noise()
        builder.build_drop_monsters()
        builder.build_targets()
        builder.build_locations()
        builder.write(OUT_DIR)
        print(f"wrote bundle to {OUT_DIR}")

    world = load_world_dir(OUT_DIR)
    gear_cache: dict = {}
    self_check(world, gear_cache)

    if not args.check:
        boundaries = calibrate_brackets(world, gear_cache)
        with open(BRACKETS_PATH, "w", encoding="utf-8") as fh:
            json.dump({"schema_version": 1, "boundaries": boundaries}, fh, indent=1)
            fh.write("\n")
        print(f"wrote {BRACKETS_PATH}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end task construction.

A task bundles a goal (defeat a monster or obtain an item), a character
snapshot, a pruned world excerpt, distractor entries, a difficulty score and
the milestone list used for progress scoring. Generation is deterministic:
the same world, target and options always produce byte-identical task JSON.

Every generated task is self-verified before it is returned: the canonical
solution is executed and must succeed with a spotless log.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources as importlib_resources

from . import evaluator, executor
from .crafting import cost, dependency_closure_many, leveling_schedule
from .dsl import ActionCall, ForLoop, PlanProgram
from .gear import (
    AuxiliaryInfeasibleError,
    PartitionPolicy,
    TaskDraft,
    auxiliary_items,
    minimal_winning_gear,
    noise_items,
    partition_gear,
)
from .prompts import TEMPLATE_HASH
from .rng import counter_hash
from .world import (
    SLOT_CAPACITY,
    Item,
    Location,
    Monster,
    Recipe,
    ResourceNode,
    SkillDef,
    StatVector,
    WorldDef,
)

TASK_SCHEMA_VERSION = 1
START_POSITION = (0, 0)


class InfeasibleTaskError(Exception):
    """Target cannot yield a well-formed task (no gear, no aux split, ...)."""


@dataclass(frozen=True)
class TaskOptions:
    missing_count: int = 1
    leveling: bool = False
    noise_count: int = 0
    seed: int = 0
    # suite generation pins the exact split for bracket coverage; when unset,
    # the split is the seeded shuffle of partition_gear
    missing_override: tuple = ()


def load_brackets() -> list[tuple[int, int]]:
    ref = importlib_resources.files("questforge").joinpath("data/brackets.json")
    doc = json.loads(ref.read_text())
    return [tuple(pair) for pair in doc["boundaries"]]


def bracket_of(difficulty: int, boundaries=None):
    """1-based bracket index for a difficulty, or None if out of range."""
    if boundaries is None:
        boundaries = load_brackets()
    for idx, (lo, hi) in enumerate(boundaries, start=1):
        if lo <= difficulty <= hi:
            return idx
    return None


def dumps_task(task: dict) -> str:
    """Canonical serialization; determinism contract for task files."""
    return json.dumps(task, sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------------------
# environment excerpt


def _item_entry(item: Item, keep_nodes: set, keep_monsters: set, keep_recipes: set) -> dict:
    sources = []
    for src in item.sources:
        if src["type"] == "gather" and src["node_id"] in keep_nodes:
            sources.append(dict(src))
        elif src["type"] == "drop" and src["monster_id"] in keep_monsters:
            sources.append(dict(src))
        elif src["type"] == "craft" and item.id in keep_recipes:
            sources.append(dict(src))
    return {
        "id": item.id,
        "name": item.name,
        "slot": item.slot,
        "level": item.level,
        "stats": item.stats.to_json(),
        "sources": sources,
    }


def _monster_entry(world: WorldDef, monster: Monster, keep_items: set) -> dict:
    loc = world.locations[monster.location_id]
    return {
        "id": monster.id,
        "stats": monster.stats.to_json(),
        "difficulty_level": monster.difficulty_level,
        "drops": [{"item_id": i, "rate": r} for i, r in monster.drops if i in keep_items],
        "location": list(loc.coords),
    }


def _node_entry(world: WorldDef, node: ResourceNode) -> dict:
    loc = world.locations[node.location_id]
    return {
        "id": node.id,
        "resource_item_id": node.resource_item_id,
        "skill": node.skill,
        "skill_level": node.skill_level,
        "xp_reward": node.xp_reward,
        "location": list(loc.coords),
    }


def _build_environment(world: WorldDef, closure, extra_item_ids: set,
                       monster_ids: set, leveling: bool) -> dict:
    item_ids = set(closure.requirements) | set(extra_item_ids)
    node_ids = {node_id for node_id, _q in closure.gather_steps}
    recipe_ids = {rec.output_id for rec, _n in closure.craft_steps}

    if leveling:
        # leveling needs the whole ladder of nodes below each required tier
        for prof, req_level in closure.required_levels.items():
            for node in world.nodes.values():
                if node.skill == prof and node.skill_level <= req_level:
                    node_ids.add(node.id)
                    item_ids.add(node.resource_item_id)

    workshop_ids = {world.recipes[rid].workshop for rid in recipe_ids}
    env = {
        "grid": list(world.grid),
        "items": [],
        "recipes": [world.recipes[rid].to_json() for rid in sorted(recipe_ids)],
        "monsters": [_monster_entry(world, world.monsters[mid], item_ids)
                     for mid in sorted(monster_ids)],
        "resource_nodes": [_node_entry(world, world.nodes[nid]) for nid in sorted(node_ids)],
        "workshops": [],
    }
    for ws_id in sorted(workshop_ids):
        loc = world.workshop_location(ws_id)
        env["workshops"].append({"id": ws_id, "location": list(loc.coords)})
    for item_id in sorted(item_ids):
        env["items"].append(_item_entry(world.items[item_id], node_ids, monster_ids, recipe_ids))
    return env


def _inject_noise(world: WorldDef, env: dict, noise: list[Item]) -> None:
    keep_nodes = {n["id"] for n in env["resource_nodes"]}
    keep_monsters = {m["id"] for m in env["monsters"]}
    keep_recipes = {r["output_id"] for r in env["recipes"]} | {it.id for it in noise}
    known_workshops = {w["id"] for w in env["workshops"]}
    for item in noise:
        env["items"].append(_item_entry(item, keep_nodes, keep_monsters, keep_recipes))
        env["recipes"].append(item.recipe.to_json())
        # the recipe's workshop must be locatable or the lure is obviously fake
        if item.recipe.workshop not in known_workshops:
            loc = world.workshop_location(item.recipe.workshop)
            env["workshops"].append({"id": item.recipe.workshop,
                                     "location": list(loc.coords)})
            known_workshops.add(item.recipe.workshop)
    env["items"].sort(key=lambda e: e["id"])
    env["recipes"].sort(key=lambda e: e["output_id"])
    env["workshops"].sort(key=lambda e: e["id"])


def env_to_world(task: dict) -> WorldDef:
    """Reconstruct a miniature world from a task's environment excerpt.

    Enough for canonical-solution planning: dangling references inside noise
    recipes are tolerated (their items simply do not exist here).
    """
    env = task["environment"]
    recipes = {}
    for raw in env["recipes"]:
        recipes[raw["output_id"]] = Recipe(
            output_id=raw["output_id"], output_qty=raw["output_qty"], skill=raw["skill"],
            skill_level=raw["skill_level"],
            ingredients=tuple((i["item_id"], i["qty"]) for i in raw["ingredients"]),
            workshop=raw["workshop"],
        )
    items = {}
    for raw in env["items"]:
        items[raw["id"]] = Item(
            id=raw["id"], name=raw["name"], slot=raw.get("slot"), level=raw["level"],
            stats=StatVector.from_json(raw["stats"]),
            sources=tuple(raw["sources"]), recipe=recipes.get(raw["id"]),
        )
    elements: dict[tuple[int, int], list] = {}
    monsters = {}
    for raw in env["monsters"]:
        coords = tuple(raw["location"])
        monsters[raw["id"]] = Monster(
            id=raw["id"], stats=StatVector.from_json(raw["stats"]),
            difficulty_level=raw["difficulty_level"],
            drops=tuple((d["item_id"], d["rate"]) for d in raw["drops"]),
            location_id=f"loc_{coords[0]}_{coords[1]}",
        )
        elements.setdefault(coords, []).append({"type": "monster", "id": raw["id"]})
    nodes = {}
    for raw in env["resource_nodes"]:
        coords = tuple(raw["location"])
        nodes[raw["id"]] = ResourceNode(
            id=raw["id"], resource_item_id=raw["resource_item_id"], skill=raw["skill"],
            skill_level=raw["skill_level"], xp_reward=raw["xp_reward"],
            location_id=f"loc_{coords[0]}_{coords[1]}",
        )
        elements.setdefault(coords, []).append({"type": "node", "id": raw["id"]})
    for raw in env["workshops"]:
        coords = tuple(raw["location"])
        elements.setdefault(coords, []).append({"type": "workshop", "id": raw["id"]})
    locations = {}
    for coords, els in sorted(elements.items()):
        loc_id = f"loc_{coords[0]}_{coords[1]}"
        locations[loc_id] = Location(id=loc_id, coords=coords, elements=tuple(els))
    skills = {}
    for node in nodes.values():
        skills[node.skill] = SkillDef(id=node.skill, name=node.skill)
    for recipe in recipes.values():
        skills[recipe.skill] = SkillDef(id=recipe.skill, name=recipe.skill)
    return WorldDef(
        items=items, recipes=recipes, monsters=monsters, nodes=nodes,
        locations=locations, skills=skills, grid=tuple(env["grid"]),
        world_hash="env:" + task["world_hash"],
    )


# ---------------------------------------------------------------------------
# canonical solution


def canonical_solution(task: dict) -> PlanProgram:
    """Reference plan solving the task; derived from the task file alone."""
    env_world = env_to_world(task)
    demands = {item_id: 1 for item_id in task["missing"]}
    statements: list = []
    here = [tuple(task["character"]["position"])]

    def move_to(coords) -> None:
        coords = (coords[0], coords[1])
        if coords != here[0]:
            statements.append(ActionCall("move", coords))
            here[0] = coords

    if not demands:
        return PlanProgram(tuple(statements))
    closure = dependency_closure_many(env_world, demands)

    if task["mechanics"]["leveling"]:
        for prof in sorted(closure.required_levels):
            target_level = closure.required_levels[prof]
            for node_id, count in leveling_schedule(env_world, prof, 1, target_level):
                move_to(env_world.locations[env_world.nodes[node_id].location_id].coords)
                if count == 1:
                    statements.append(ActionCall("gather"))
                else:
                    statements.append(ForLoop(count, (ActionCall("gather"),)))

    for monster_id, kills in closure.fight_steps:
        move_to(env_world.locations[env_world.monsters[monster_id].location_id].coords)
        body = (ActionCall("rest"), ActionCall("fight"))
        if kills == 1:
            statements.extend(body)
        else:
            statements.append(ForLoop(kills, body))

    for node_id, qty in closure.gather_steps:
        move_to(env_world.locations[env_world.nodes[node_id].location_id].coords)
        if qty == 1:
            statements.append(ActionCall("gather"))
        else:
            statements.append(ForLoop(qty, (ActionCall("gather"),)))

    for recipe, execs in closure.craft_steps:
        move_to(env_world.workshop_location(recipe.workshop).coords)
        statements.append(ActionCall("craft", (recipe.output_id, execs)))

    if task["kind"] == "combat":
        worn: dict[str, int] = {}
        for item_id in task["character"]["equipment"]:
            slot = env_world.items[item_id].slot
            worn[slot] = worn.get(slot, 0) + 1

        for item_id in sorted(task["missing"]):
            slot = env_world.items[item_id].slot
            while worn.get(slot, 0) >= SLOT_CAPACITY[slot]:
                statements.append(ActionCall("unequip", (slot,)))
                worn[slot] -= 1
            statements.append(ActionCall("equip", (item_id,)))
            worn[slot] = worn.get(slot, 0) + 1

        target = env_world.monsters[task["target"]]
        statements.append(ActionCall("rest"))
        move_to(env_world.locations[target.location_id].coords)
        statements.append(ActionCall("fight"))

    return PlanProgram(tuple(statements))


# ---------------------------------------------------------------------------
# milestones


def _missing_requirements(world: WorldDef, missing: list[str]) -> dict:
    """Per-item (un-merged) closure quotas, for execution-error attribution."""
    out = {}
    for item_id in missing:
        closure = dependency_closure_many(world, {item_id: 1})
        gathered: dict[str, int] = {}
        for node_id, qty in closure.gather_steps:
            res = world.nodes[node_id].resource_item_id
            gathered[res] = gathered.get(res, 0) + qty
        out[item_id] = {
            "gather": gathered,
            "defeat": {mid: kills for mid, kills in closure.fight_steps},
            "craft": {rec.output_id: execs for rec, execs in closure.craft_steps},
        }
    return out


def _milestones(world: WorldDef, closure, task_kind: str, missing: list[str],
                target: str) -> list[dict]:
    out = []
    gathered: dict[str, int] = {}
    for node_id, qty in closure.gather_steps:
        item_id = world.nodes[node_id].resource_item_id
        gathered[item_id] = gathered.get(item_id, 0) + qty
    for item_id in sorted(gathered):
        out.append({"type": "gather", "key": item_id, "qty": gathered[item_id]})
    for monster_id, kills in closure.fight_steps:
        out.append({"type": "defeat", "key": monster_id, "qty": kills})
    for recipe, execs in closure.craft_steps:
        out.append({"type": "craft", "key": recipe.output_id, "qty": execs})
    if task_kind == "combat":
        for item_id in sorted(missing):
            out.append({"type": "equip", "key": item_id, "qty": 1})
    out.append({"type": "goal", "key": target, "qty": 1})
    return out


# ---------------------------------------------------------------------------
# generation


def _stable_hash(text: str) -> int:
    """Process-independent 32-bit hash (built-in hash() is salted per run)."""
    return int(hashlib.sha256(text.encode()).hexdigest()[:8], 16)


def _task_id(world: WorldDef, kind: str, target: str, options: TaskOptions) -> str:
    payload = json.dumps({
        "world": world.world_hash, "kind": kind, "target": target,
        "missing_count": options.missing_count, "leveling": options.leveling,
        "noise_count": options.noise_count, "seed": options.seed,
        "missing_override": sorted(options.missing_override),
    }, sort_keys=True)
    return f"{kind[0]}{hashlib.sha256(payload.encode()).hexdigest()[:12]}"


def _character(world: WorldDef, level: int, required_levels: dict,
               leveling: bool, equipment: list[str]) -> dict:
    skills = {}
    for prof in sorted(world.skills):
        if leveling:
            skills[prof] = [1, 0]
        else:
            skills[prof] = [max(1, required_levels.get(prof, 1)), 0]
    return {
        "level": level,
        "position": list(START_POSITION),
        "skills": skills,
        "inventory": {},
        "equipment": list(equipment),
    }


def _verify_canonical(world: WorldDef, task: dict) -> None:
    plan = canonical_solution(task)
    log = executor.run(world, task, plan)
    failed = [e for e in log.events if not e.ok]
    if failed or not log.summary["target_achieved"]:
        raise InfeasibleTaskError(
            f"canonical solution broken for {task['id']}: "
            f"achieved={log.summary['target_achieved']}, "
            f"first_failure={failed[0].to_json() if failed else None}")
    report = evaluator.progress_score(log, task)
    if report != 100.0:
        raise InfeasibleTaskError(f"canonical progress {report} != 100 for {task['id']}")


def generate_combat_task(world: WorldDef, monster_id: str, options: TaskOptions,
                         gear_cache: dict | None = None) -> dict:
    """Build a defeat-the-monster task; deterministic in (world, target, options)."""
    if monster_id not in world.monsters:
        raise InfeasibleTaskError(f"unknown monster '{monster_id}'")
    monster = world.monsters[monster_id]

    if gear_cache is not None and monster_id in gear_cache:
        gear_sets = gear_cache[monster_id]
    else:
        gear_sets = minimal_winning_gear(world, monster)
        if gear_cache is not None:
            gear_cache[monster_id] = gear_sets
    if not gear_sets:
        raise InfeasibleTaskError(f"no winning gear exists against '{monster_id}'")
    gear = gear_sets[0]  # lexicographically least among the minimal sets
    if len(gear) == 0:
        raise InfeasibleTaskError(f"'{monster_id}' falls bare-handed; nothing to plan")

    if options.missing_override:
        missing = sorted(options.missing_override)
        if not set(missing) <= set(gear.item_ids) or len(missing) != options.missing_count:
            raise InfeasibleTaskError("missing_override is not a valid split of the gear set")
        equipped = sorted(set(gear.item_ids) - set(missing))
    else:
        equipped, missing = partition_gear(
            gear, PartitionPolicy(options.missing_count, counter_hash(options.seed, 0xA)))

    closure = dependency_closure_many(world, {m: 1 for m in missing})
    scenario = [mid for mid, _k in closure.fight_steps]
    if monster_id in scenario:
        raise InfeasibleTaskError(f"'{monster_id}' drops its own gear prerequisites")

    try:
        aux = auxiliary_items(world, TaskDraft(
            level=monster.difficulty_level, target_id=monster_id,
            gear_ids=tuple(gear.item_ids), equipped_ids=tuple(equipped),
            scenario_monster_ids=tuple(scenario),
        ))
    except AuxiliaryInfeasibleError as exc:
        raise InfeasibleTaskError(str(exc)) from exc
    aux_ids = [it.id for it in aux]

    extra_items = set(equipped) | set(missing) | set(aux_ids)
    env = _build_environment(world, closure, extra_items,
                             monster_ids=set(scenario) | {monster_id},
                             leveling=options.leveling)
    env_item_ids = {e["id"] for e in env["items"]}
    noise = noise_items(world, monster.difficulty_level, env_item_ids,
                        set(closure.requirements), options.noise_count,
                        counter_hash(options.seed, 0xB))
    _inject_noise(world, env, noise)

    warnings = []
    if len(noise) < options.noise_count:
        warnings.append(f"noise quota unmet: wanted {options.noise_count}, found {len(noise)}")

    difficulty = len(missing) + sum(cost(world, m) for m in missing)
    task = {
        "schema_version": TASK_SCHEMA_VERSION,
        "id": _task_id(world, "combat", monster_id, options),
        "kind": "combat",
        "target": monster_id,
        "equipped": sorted(equipped),
        "missing": sorted(missing),
        "gear_alternatives": [list(gs.item_ids) for gs in gear_sets],
        "aux_items": sorted(aux_ids),
        "noise_items": [it.id for it in noise],
        "character": _character(world, monster.difficulty_level, closure.required_levels,
                                options.leveling, sorted(equipped) + sorted(aux_ids)),
        "environment": env,
        "milestones": _milestones(world, closure, "combat", missing, monster_id),
        "missing_requirements": _missing_requirements(world, missing),
        "difficulty": difficulty,
        "bracket": bracket_of(difficulty),
        "mechanics": {"leveling": options.leveling, "noise_count": options.noise_count},
        "seed": options.seed,
        "warnings": warnings,
        "world_hash": world.world_hash,
        "template_hash": TEMPLATE_HASH,
    }
    _verify_canonical(world, task)
    return task


def generate_craft_task(world: WorldDef, item_id: str, options: TaskOptions) -> dict:
    """Build an obtain-the-item task; difficulty is 1 + crafting cost."""
    if item_id not in world.items:
        raise InfeasibleTaskError(f"unknown item '{item_id}'")
    if item_id not in world.obtainable_ids:
        raise InfeasibleTaskError(f"'{item_id}' has no acquisition route")
    item = world.items[item_id]

    closure = dependency_closure_many(world, {item_id: 1})
    scenario = [mid for mid, _k in closure.fight_steps]
    try:
        aux = auxiliary_items(world, TaskDraft(
            level=item.level, target_id=None, gear_ids=(),
            equipped_ids=(), scenario_monster_ids=tuple(scenario),
        ))
    except AuxiliaryInfeasibleError as exc:
        raise InfeasibleTaskError(str(exc)) from exc
    aux_ids = [it.id for it in aux]

    env = _build_environment(world, closure, {item_id} | set(aux_ids),
                             monster_ids=set(scenario), leveling=options.leveling)
    env_item_ids = {e["id"] for e in env["items"]}
    noise = noise_items(world, item.level, env_item_ids, set(closure.requirements),
                        options.noise_count, counter_hash(options.seed, 0xB))
    _inject_noise(world, env, noise)

    warnings = []
    if len(noise) < options.noise_count:
        warnings.append(f"noise quota unmet: wanted {options.noise_count}, found {len(noise)}")

    difficulty = 1 + cost(world, item_id)
    task = {
        "schema_version": TASK_SCHEMA_VERSION,
        "id": _task_id(world, "craft", item_id, options),
        "kind": "craft",
        "target": item_id,
        "equipped": [],
        "missing": [item_id],
        "gear_alternatives": [],
        "aux_items": sorted(aux_ids),
        "noise_items": [it.id for it in noise],
        "character": _character(world, item.level, closure.required_levels,
                                options.leveling, sorted(aux_ids)),
        "environment": env,
        "milestones": _milestones(world, closure, "craft", [item_id], item_id),
        "missing_requirements": _missing_requirements(world, [item_id]),
        "difficulty": difficulty,
        "bracket": bracket_of(difficulty),
        "mechanics": {"leveling": options.leveling, "noise_count": options.noise_count},
        "seed": options.seed,
        "warnings": warnings,
        "world_hash": world.world_hash,
        "template_hash": TEMPLATE_HASH,
    }
    _verify_canonical(world, task)
    return task


# ---------------------------------------------------------------------------
# suite generation


def enumerate_candidates(world: WorldDef, seed: int, leveling: bool, noise_count: int,
                         splits_per_count: int = 12,
                         gear_cache: dict | None = None) -> list[tuple]:
    """Deterministic candidate specs: (difficulty, kind, target, missing, options).

    Craft candidates cover every obtainable item. Combat candidates cover, for
    each beatable monster and each missing-count, up to ``splits_per_count``
    distinct splits of the minimal gear set, enumerated as combinations (not
    sampled) so difficulty coverage does not depend on the seed.
    """
    import itertools

    out: list[tuple] = []
    for item_id in sorted(world.obtainable_ids):
        options = TaskOptions(missing_count=1, leveling=leveling,
                              noise_count=noise_count,
                              seed=counter_hash(seed, 1, _stable_hash(item_id)))
        out.append((1 + cost(world, item_id), "craft", item_id, (item_id,), options))

    if gear_cache is None:
        gear_cache = {}
    monsters = sorted(world.monsters.values(), key=lambda m: (m.difficulty_level, m.id))
    for monster in monsters:
        if monster.id not in gear_cache:
            gear_cache[monster.id] = minimal_winning_gear(world, monster)
        gear_sets = gear_cache[monster.id]
        if not gear_sets or len(gear_sets[0]) == 0:
            continue
        gear_ids = gear_sets[0].item_ids
        for missing_count in range(1, len(gear_ids) + 1):
            combos = list(itertools.combinations(sorted(gear_ids), missing_count))
            if len(combos) > splits_per_count:
                # evenly spaced sample keeps the difficulty spread of the full set
                step = (len(combos) - 1) / (splits_per_count - 1)
                combos = [combos[round(i * step)] for i in range(splits_per_count)]
            for idx, missing in enumerate(combos):
                options = TaskOptions(
                    missing_count=missing_count, leveling=leveling,
                    noise_count=noise_count,
                    seed=counter_hash(seed, 2, missing_count, idx, _stable_hash(monster.id)),
                    missing_override=tuple(missing),
                )
                difficulty = missing_count + sum(cost(world, m) for m in missing)
                out.append((difficulty, "combat", monster.id, tuple(missing), options))
    return out


def generate_suite(world: WorldDef, suite_spec: dict) -> tuple[list[dict], dict]:
    """Build a bracketed task suite; returns (tasks, manifest).

    Candidates are enumerated deterministically, binned by difficulty bracket,
    and built in order until each bracket's quota is met. Infeasible
    candidates are skipped; an exhausted bracket is reported as a shortfall,
    never silently padded.
    """
    per_bracket = int(suite_spec["per_bracket_count"])
    seed = int(suite_spec.get("seed", 0))
    brackets = list(suite_spec.get("brackets", range(1, 10)))
    mechanics = suite_spec.get("mechanics", {})
    leveling = bool(mechanics.get("leveling", False))
    noise_count = int(mechanics.get("noise_count", 0))
    splits = int(suite_spec.get("splits_per_count", 12))
    boundaries = load_brackets()

    gear_cache: dict[str, list] = {}
    candidates: dict[int, list] = {b: [] for b in brackets}
    for cand in enumerate_candidates(world, seed, leveling, noise_count,
                                     splits_per_count=splits, gear_cache=gear_cache):
        bracket = bracket_of(cand[0], boundaries)
        if bracket in candidates:
            candidates[bracket].append(cand)

    tasks: list[dict] = []
    bracket_counts: dict[int, int] = {}
    shortfalls: dict[int, int] = {}
    for bracket in brackets:
        built = 0
        pool = sorted(candidates[bracket],
                      key=lambda c: (c[0], c[1], c[2], c[3]))
        for difficulty, kind, target, _missing, options in pool:
            if built >= per_bracket:
                break
            try:
                if kind == "craft":
                    task = generate_craft_task(world, target, options)
                else:
                    task = generate_combat_task(world, target, options, gear_cache)
            except InfeasibleTaskError:
                continue
            tasks.append(task)
            built += 1
        bracket_counts[bracket] = built
        if built < per_bracket:
            shortfalls[bracket] = per_bracket - built

    tasks.sort(key=lambda t: (t["bracket"], t["id"]))
    manifest = {
        "schema_version": TASK_SCHEMA_VERSION,
        "seed": seed,
        "world_hash": world.world_hash,
        "template_hash": TEMPLATE_HASH,
        "per_bracket_count": per_bracket,
        "mechanics": {"leveling": leveling, "noise_count": noise_count},
        "bracket_ranges": {str(i): list(pair) for i, pair in enumerate(boundaries, start=1)},
        "bracket_counts": {str(b): n for b, n in sorted(bracket_counts.items())},
        "shortfalls": {str(b): n for b, n in sorted(shortfalls.items())},
        "tasks": [{"id": t["id"], "bracket": t["bracket"], "difficulty": t["difficulty"],
                   "kind": t["kind"], "target": t["target"]} for t in tasks],
    }
    return tasks, manifest

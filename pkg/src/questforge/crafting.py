"""Crafting/resource dependency traversal, item costs and leveling schedules.

The recipe graph is a DAG (checked at world load), so requirements can be
propagated outputs-first and crafted ingredients-first. An item's cost is the
count of atomic acquisition actions in its closure: one per gathered unit,
one per monster kill, one per craft invocation. Movement is deliberately not
counted; it depends on task layout, not on the item.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .world import Recipe, WorldDef


class CraftError(Exception):
    pass


class UncraftableError(CraftError):
    """Item has no acquisition route; by construction a distractor item."""

    def __init__(self, item_id: str, via: str | None = None):
        self.item_id = item_id
        chain = f" (required by {via})" if via else ""
        super().__init__(f"no acquisition route for '{item_id}'{chain}")


class LevelingError(CraftError):
    pass


def xp_to_next(level: int) -> int:
    """XP needed to go from `level` to `level + 1`."""
    return 100 * level


@dataclass(frozen=True)
class DependencyClosure:
    requirements: dict  # item id -> transitive qty needed
    gather_steps: tuple[tuple[str, int], ...]  # (node id, units)
    fight_steps: tuple[tuple[str, int], ...]  # (monster id, kills)
    craft_steps: tuple[tuple[Recipe, int], ...]  # (recipe, executions), deps first
    required_levels: dict  # profession -> min level
    locations_touched: tuple[tuple[int, int], ...]

    @property
    def action_count(self) -> int:
        gathers = sum(q for _n, q in self.gather_steps)
        kills = sum(q for _m, q in self.fight_steps)
        return gathers + kills + len(self.craft_steps)


@lru_cache(maxsize=8)
def _craft_order(world: WorldDef) -> tuple[str, ...]:
    """Craftable items ordered outputs-before-ingredients (reverse postorder)."""
    post: list[str] = []
    seen: set[str] = set()

    def visit(item_id: str) -> None:
        seen.add(item_id)
        for ing_id, _q in world.recipes[item_id].ingredients:
            if ing_id in world.recipes and ing_id not in seen:
                visit(ing_id)
        post.append(item_id)

    for output_id in sorted(world.recipes):
        if output_id not in seen:
            visit(output_id)
    return tuple(reversed(post))


def _route(world: WorldDef, item_id: str) -> str:
    """Preferred acquisition route: gather beats drop beats craft."""
    item = world.items[item_id]
    kinds = {src["type"] for src in item.sources}
    for kind in ("gather", "drop", "craft"):
        if kind in kinds:
            return kind
    raise UncraftableError(item_id)


def dependency_closure(world: WorldDef, item_id: str, qty: int,
                       deterministic: bool = True) -> DependencyClosure:
    """Everything needed to produce `qty` units of an item from nothing.

    With deterministic drops every kill yields one unit per drop entry; in
    stochastic mode planned kills are ceil(qty / rate) so the closure stays
    integral.
    """
    return dependency_closure_many(world, {item_id: qty}, deterministic=deterministic)


def dependency_closure_many(world: WorldDef, targets: dict,
                            deterministic: bool = True) -> DependencyClosure:
    """Merged closure for several target items; shared sub-ingredients pool."""
    for item_id, qty in targets.items():
        if item_id not in world.items:
            raise CraftError(f"unknown item '{item_id}'")
        if qty < 1:
            raise ValueError("qty must be >= 1")

    demand: dict[str, int] = dict(targets)
    demanded_by: dict[str, str] = {}
    craft_execs: dict[str, int] = {}
    for out_id in _craft_order(world):
        if out_id not in demand or _route(world, out_id) != "craft":
            continue
        recipe = world.recipes[out_id]
        execs = math.ceil(demand[out_id] / recipe.output_qty)
        craft_execs[out_id] = execs
        for ing_id, ing_qty in recipe.ingredients:
            if ing_id not in world.items:
                raise CraftError(f"recipe for {out_id} uses unknown item '{ing_id}'")
            demand[ing_id] = demand.get(ing_id, 0) + execs * ing_qty
            demanded_by.setdefault(ing_id, out_id)

    gather: dict[str, int] = {}
    fights: dict[str, int] = {}
    professions: dict[str, int] = {}
    coords: set[tuple[int, int]] = set()

    for need_id in sorted(demand):
        item = world.items[need_id]
        try:
            route = _route(world, need_id)
        except UncraftableError:
            raise UncraftableError(need_id, via=demanded_by.get(need_id)) from None
        if route == "gather":
            node_ids = sorted(item.gather_node_ids(),
                              key=lambda nid: (world.nodes[nid].skill_level, nid))
            node = world.nodes[node_ids[0]]
            gather[node.id] = gather.get(node.id, 0) + demand[need_id]
            professions[node.skill] = max(professions.get(node.skill, 0), node.skill_level)
            coords.add(world.locations[node.location_id].coords)
        elif route == "drop":
            monster_ids = sorted(item.drop_monster_ids(),
                                 key=lambda mid: (world.monsters[mid].difficulty_level, mid))
            monster = world.monsters[monster_ids[0]]
            rate = dict(monster.drops)[need_id]
            kills = demand[need_id] if deterministic else math.ceil(demand[need_id] / rate)
            fights[monster.id] = max(fights.get(monster.id, 0), kills)
            coords.add(world.locations[monster.location_id].coords)

    craft_steps = []
    for out_id in reversed(_craft_order(world)):
        if out_id in craft_execs:
            recipe = world.recipes[out_id]
            craft_steps.append((recipe, craft_execs[out_id]))
            professions[recipe.skill] = max(professions.get(recipe.skill, 0), recipe.skill_level)
            loc = world.workshop_location(recipe.workshop)
            if loc is not None:
                coords.add(loc.coords)

    return DependencyClosure(
        requirements=dict(sorted(demand.items())),
        gather_steps=tuple(sorted(gather.items())),
        fight_steps=tuple(sorted(fights.items())),
        craft_steps=tuple(craft_steps),
        required_levels=dict(sorted(professions.items())),
        locations_touched=tuple(sorted(coords)),
    )


@lru_cache(maxsize=65536)
def _cost_cached(world: WorldDef, item_id: str) -> int:
    return dependency_closure(world, item_id, 1).action_count


def cost(world: WorldDef, item_id: str) -> int:
    """Atomic actions (gathers + kills + craft invocations) to obtain one unit."""
    return _cost_cached(world, item_id)


def total_difficulty(world: WorldDef, missing: list) -> int:
    """Missing-item count plus the summed per-item crafting cost."""
    ids = [m if isinstance(m, str) else m.id for m in missing]
    return len(ids) + sum(cost(world, item_id) for item_id in ids)


def leveling_schedule(world: WorldDef, profession: str, from_level: int,
                      to_level: int) -> list[tuple[str, int]]:
    """Gather counts that raise a profession from one level to another.

    Greedy over accessible nodes: at each level, gather the highest-xp node
    whose requirement is already met; surplus xp carries over. Adjacent steps
    on the same node are merged.
    """
    if from_level > to_level:
        raise ValueError("from_level must be <= to_level")
    nodes = sorted((n for n in world.nodes.values() if n.skill == profession),
                   key=lambda n: (n.skill_level, -n.xp_reward, n.id))
    schedule: list[tuple[str, int]] = []
    level, xp = from_level, 0
    while level < to_level:
        accessible = [n for n in nodes if n.skill_level <= level]
        if not accessible:
            raise LevelingError(f"no {profession} node accessible at level {level}")
        best = max(accessible, key=lambda n: (n.xp_reward, n.id))
        needed = xp_to_next(level) - xp
        count = math.ceil(needed / best.xp_reward)
        if schedule and schedule[-1][0] == best.id:
            schedule[-1] = (best.id, schedule[-1][1] + count)
        else:
            schedule.append((best.id, count))
        xp = xp + count * best.xp_reward - xp_to_next(level)
        level += 1
    return schedule

"""Applies flattened plans to a task's initial state under world rules.

One run is strictly sequential over a single mutable state. Failed actions are
logged with a machine-readable reason and skipped; they never mutate state,
with one documented exception: a lost fight restores hp to full (there is no
further death penalty). Every event records the state deltas it caused, so a
log can be replayed from the initial state to the identical final state.

Deterministic mode has no randomness source at all; stochastic drop draws are
pure functions of (seed, event index, drop slot).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import combat
from .dsl import ActionCall, PlanProgram, flatten
from .rng import uniform
from .stats import StatVector
from .world import SLOT_CAPACITY, WorldDef

FAIL_REASONS = (
    "wrong_location", "missing_ingredients", "insufficient_level", "unknown_item",
    "slot_conflict", "combat_loss", "not_a_node", "not_a_workshop", "no_monster",
)


class TaskWorldMismatch(Exception):
    """Task was generated against a different world bundle."""


@dataclass
class SimState:
    world: WorldDef
    level: int
    position: tuple[int, int]
    hp: int
    inventory: dict  # item id -> qty
    equipment: dict  # slot -> list of item ids (sorted)
    skills: dict  # profession -> [level, xp]
    defeated: dict  # monster id -> kills
    known_recipes: set
    mode: str = "deterministic"
    seed: int = 0

    def gear_stats(self) -> StatVector:
        total = StatVector()
        for ids in self.equipment.values():
            for item_id in ids:
                total = total + self.world.items[item_id].stats
        return total

    def effective_stats(self) -> StatVector:
        return combat.player_base_stats(self.level) + self.gear_stats()

    @property
    def max_hp(self) -> int:
        return self.effective_stats().hp

    def fingerprint(self) -> str:
        return json.dumps({
            "level": self.level, "position": list(self.position), "hp": self.hp,
            "inventory": {k: v for k, v in sorted(self.inventory.items()) if v},
            "equipment": {k: sorted(v) for k, v in sorted(self.equipment.items()) if v},
            "skills": {k: list(v) for k, v in sorted(self.skills.items())},
            "defeated": dict(sorted(self.defeated.items())),
        }, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class Event:
    index: int
    action: ActionCall
    ok: bool
    reason: Optional[str]
    deltas: dict

    def to_json(self) -> dict:
        return {
            "i": self.index,
            "action": {"name": self.action.name, "args": list(self.action.args)},
            "ok": self.ok,
            "reason": self.reason,
            "deltas": self.deltas,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Event":
        return cls(
            index=data["i"],
            action=ActionCall(name=data["action"]["name"], args=tuple(data["action"]["args"])),
            ok=data["ok"], reason=data["reason"], deltas=data["deltas"],
        )


@dataclass
class ExecutionLog:
    events: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_jsonl(self) -> str:
        lines = [json.dumps(e.to_json(), sort_keys=True, separators=(",", ":"))
                 for e in self.events]
        lines.append(json.dumps({"summary": self.summary}, sort_keys=True,
                                separators=(",", ":")))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "ExecutionLog":
        events, summary = [], {}
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            if "summary" in doc:
                summary = doc["summary"]
            else:
                events.append(Event.from_json(doc))
        return cls(events=events, summary=summary)


def init_state(world: WorldDef, task: dict, mode: str = "deterministic",
               seed: int = 0) -> SimState:
    """Initial simulation state for a task; verifies the task/world pairing."""
    if task.get("world_hash") != world.world_hash:
        raise TaskWorldMismatch(
            f"task world hash {task.get('world_hash', '?')[:12]} != loaded world "
            f"{world.world_hash[:12]}")
    char = task["character"]
    equipment: dict[str, list[str]] = {slot: [] for slot in SLOT_CAPACITY}
    for item_id in char["equipment"]:
        item = world.items[item_id]
        equipment[item.slot].append(item_id)
        equipment[item.slot].sort()
    state = SimState(
        world=world,
        level=char["level"],
        position=tuple(char["position"]),
        hp=0,  # set to max below, after equipment is known
        inventory=dict(char.get("inventory", {})),
        equipment=equipment,
        skills={prof: list(lv) for prof, lv in char["skills"].items()},
        defeated={},
        known_recipes={r["output_id"] for r in task["environment"]["recipes"]},
        mode=mode,
        seed=seed,
    )
    state.hp = state.max_hp
    return state


def _grant_xp(state: SimState, profession: str, amount: int) -> None:
    entry = state.skills.setdefault(profession, [1, 0])
    entry[1] += amount
    while entry[1] >= 100 * entry[0]:
        entry[1] -= 100 * entry[0]
        entry[0] += 1


def _fail(index: int, action: ActionCall, reason: str) -> Event:
    return Event(index=index, action=action, ok=False, reason=reason, deltas={})


def step(state: SimState, action: ActionCall, index: int = 0) -> Event:
    """Apply one action; failures are events, not exceptions."""
    handler = _HANDLERS[action.name]
    return handler(state, action, index)


def _do_move(state: SimState, action: ActionCall, index: int) -> Event:
    coords = (action.args[0], action.args[1])
    if not state.world.in_bounds(coords) or state.world.location_at(coords) is None:
        return _fail(index, action, "wrong_location")
    state.position = coords
    return Event(index, action, True, None, {"position": list(coords)})


def _do_gather(state: SimState, action: ActionCall, index: int) -> Event:
    nodes = state.world.nodes_at(state.position)
    if not nodes:
        return _fail(index, action, "not_a_node")
    usable = [n for n in nodes if state.skills.get(n.skill, [1, 0])[0] >= n.skill_level]
    if not usable:
        return _fail(index, action, "insufficient_level")
    node = usable[0]
    state.inventory[node.resource_item_id] = state.inventory.get(node.resource_item_id, 0) + 1
    _grant_xp(state, node.skill, node.xp_reward)
    return Event(index, action, True, None, {
        "inventory": {node.resource_item_id: 1},
        "skills": {node.skill: list(state.skills[node.skill])},
    })


def _do_fight(state: SimState, action: ActionCall, index: int) -> Event:
    monsters = state.world.monsters_at(state.position)
    if not monsters:
        return _fail(index, action, "no_monster")
    monster = monsters[0]
    eff = state.effective_stats()
    fighter = StatVector(hp=state.hp, attack=eff.attack, dmg_amp=eff.dmg_amp,
                        resist=eff.resist)
    outcome = combat.simulate(fighter, monster.stats)
    if not outcome.player_won:
        # lost fights reset hp to full; no other penalty, no other state change
        restored = state.max_hp
        deltas = {} if state.hp == restored else {"hp": restored}
        state.hp = restored
        return Event(index, action, False, "combat_loss", deltas)
    hp_after = state.hp
    for turn in outcome.turn_log:
        if turn.actor == "monster":
            hp_after = turn.defender_hp
    state.hp = hp_after
    state.defeated[monster.id] = state.defeated.get(monster.id, 0) + 1
    drops: dict[str, int] = {}
    for slot_idx, (item_id, rate) in enumerate(monster.drops):
        if state.mode == "deterministic" or uniform(state.seed, index, slot_idx) < rate:
            drops[item_id] = drops.get(item_id, 0) + 1
            state.inventory[item_id] = state.inventory.get(item_id, 0) + 1
    deltas = {"defeated": {monster.id: 1}, "hp": state.hp}
    if drops:
        deltas["inventory"] = drops
    return Event(index, action, True, None, deltas)


def _do_craft(state: SimState, action: ActionCall, index: int) -> Event:
    item_id, times = action.args
    recipe = state.world.recipes.get(item_id)
    if recipe is None or item_id not in state.known_recipes:
        return _fail(index, action, "unknown_item")
    if recipe.workshop not in state.world.workshops_at(state.position):
        return _fail(index, action, "not_a_workshop")
    if state.skills.get(recipe.skill, [1, 0])[0] < recipe.skill_level:
        return _fail(index, action, "insufficient_level")
    for ing_id, qty in recipe.ingredients:
        if state.inventory.get(ing_id, 0) < qty * times:
            return _fail(index, action, "missing_ingredients")
    changes: dict[str, int] = {}
    for ing_id, qty in recipe.ingredients:
        state.inventory[ing_id] -= qty * times
        changes[ing_id] = changes.get(ing_id, 0) - qty * times
    produced = recipe.output_qty * times
    state.inventory[item_id] = state.inventory.get(item_id, 0) + produced
    changes[item_id] = changes.get(item_id, 0) + produced
    return Event(index, action, True, None, {"inventory": changes})


def _do_equip(state: SimState, action: ActionCall, index: int) -> Event:
    item_id = action.args[0]
    item = state.world.items.get(item_id)
    if item is None or not item.equippable or state.inventory.get(item_id, 0) < 1:
        return _fail(index, action, "unknown_item")
    if state.level < item.level:
        return _fail(index, action, "insufficient_level")
    worn = state.equipment.setdefault(item.slot, [])
    if len(worn) >= SLOT_CAPACITY[item.slot] or item_id in worn:
        return _fail(index, action, "slot_conflict")
    state.inventory[item_id] -= 1
    worn.append(item_id)
    worn.sort()
    return Event(index, action, True, None, {
        "inventory": {item_id: -1},
        "equipment": {"equip": [item.slot, item_id]},
    })


def _do_unequip(state: SimState, action: ActionCall, index: int) -> Event:
    slot = action.args[0]
    worn = state.equipment.get(slot, [])
    if slot not in SLOT_CAPACITY or not worn:
        return _fail(index, action, "slot_conflict")
    item_id = worn.pop()  # lexicographically last; worn is kept sorted
    state.inventory[item_id] = state.inventory.get(item_id, 0) + 1
    deltas = {"inventory": {item_id: 1}, "equipment": {"unequip": [slot, item_id]}}
    if state.hp > state.max_hp:
        state.hp = state.max_hp
        deltas["hp"] = state.hp
    return Event(index, action, True, None, deltas)


def _do_recycle(state: SimState, action: ActionCall, index: int) -> Event:
    item_id, qty = action.args
    recipe = state.world.recipes.get(item_id)
    if recipe is None or item_id not in state.known_recipes:
        return _fail(index, action, "unknown_item")
    if state.inventory.get(item_id, 0) < qty:
        return _fail(index, action, "missing_ingredients")
    changes = {item_id: -qty}
    state.inventory[item_id] -= qty
    for ing_id, ing_qty in recipe.ingredients:
        refund = (ing_qty * qty) // 2
        if refund:
            state.inventory[ing_id] = state.inventory.get(ing_id, 0) + refund
            changes[ing_id] = changes.get(ing_id, 0) + refund
    return Event(index, action, True, None, {"inventory": changes})


def _do_rest(state: SimState, action: ActionCall, index: int) -> Event:
    full = state.max_hp
    deltas = {} if state.hp == full else {"hp": full}
    state.hp = full
    return Event(index, action, True, None, deltas)


_HANDLERS = {
    "move": _do_move,
    "gather": _do_gather,
    "fight": _do_fight,
    "craft": _do_craft,
    "equip": _do_equip,
    "unequip": _do_unequip,
    "recycle": _do_recycle,
    "rest": _do_rest,
}


def _target_achieved(state: SimState, task: dict) -> bool:
    if task["kind"] == "combat":
        return state.defeated.get(task["target"], 0) >= 1
    equipped = any(task["target"] in ids for ids in state.equipment.values())
    return state.inventory.get(task["target"], 0) >= 1 or equipped


def run(world: WorldDef, task: dict, program: PlanProgram,
        mode: str = "deterministic", seed: int = 0) -> ExecutionLog:
    """Execute a parsed plan start to finish; failures are logged, never fatal."""
    actions = flatten(program)
    state = init_state(world, task, mode=mode, seed=seed)
    log = ExecutionLog()
    for index, action in enumerate(actions):
        log.events.append(step(state, action, index))
    ok = sum(1 for e in log.events if e.ok)
    log.summary = {
        "task_id": task["id"],
        "kind": task["kind"],
        "target": task["target"],
        "target_achieved": _target_achieved(state, task),
        "actions": len(log.events),
        "ok_actions": ok,
        "failed_actions": len(log.events) - ok,
        "final_position": list(state.position),
        "final_hp": state.hp,
        "mode": mode,
        "seed": seed,
    }
    return log


def replay(world: WorldDef, task: dict, log: ExecutionLog,
           mode: str = "deterministic", seed: int = 0) -> SimState:
    """Re-apply logged deltas from the initial state (log-completeness check)."""
    state = init_state(world, task, mode=mode, seed=seed)
    for event in log.events:
        d = event.deltas
        if "position" in d:
            state.position = tuple(d["position"])
        for item_id, delta in d.get("inventory", {}).items():
            state.inventory[item_id] = state.inventory.get(item_id, 0) + delta
        eq = d.get("equipment")
        if eq:
            if "equip" in eq:
                slot, item_id = eq["equip"]
                state.equipment.setdefault(slot, []).append(item_id)
                state.equipment[slot].sort()
            if "unequip" in eq:
                slot, item_id = eq["unequip"]
                state.equipment[slot].remove(item_id)
        for prof, pair in d.get("skills", {}).items():
            state.skills[prof] = list(pair)
        for monster_id, delta in d.get("defeated", {}).items():
            state.defeated[monster_id] = state.defeated.get(monster_id, 0) + delta
        if "hp" in d:
            state.hp = d["hp"]
    return state

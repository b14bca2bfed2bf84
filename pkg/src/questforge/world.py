"""World registry: loads, validates and indexes the game-world JSON bundle.

A world bundle is a directory of six JSON files (items, recipes, monsters,
resource_nodes, locations, skills), each carrying a ``schema_version`` field.
Field names are documented in docs/world-schema.md. Unknown fields are
rejected rather than ignored: silent schema drift corrupts generated tasks.

Everything downstream reads the world through :class:`WorldDef`, which is
immutable after load and safe to share across threads.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .stats import ELEMENTS, StatVector

SCHEMA_VERSION = 1

GEAR_SLOTS = (
    "weapon",
    "shield",
    "helmet",
    "body_armor",
    "leg_armor",
    "boots",
    "amulet",
    "ring",
)

# A character wears at most one item per slot, except two rings.
SLOT_CAPACITY = {slot: (2 if slot == "ring" else 1) for slot in GEAR_SLOTS}

BUNDLE_FILES = (
    "items.json",
    "recipes.json",
    "monsters.json",
    "resource_nodes.json",
    "locations.json",
    "skills.json",
)


class WorldError(Exception):
    """Raised by load_world when the bundle violates the schema or invariants."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        preview = "; ".join(violations[:3])
        more = f" (+{len(violations) - 3} more)" if len(violations) > 3 else ""
        super().__init__(f"invalid world bundle: {preview}{more}")


@dataclass(frozen=True)
class Recipe:
    output_id: str
    output_qty: int
    skill: str
    skill_level: int
    ingredients: tuple[tuple[str, int], ...]
    workshop: str

    def to_json(self) -> dict:
        return {
            "output_id": self.output_id,
            "output_qty": self.output_qty,
            "skill": self.skill,
            "skill_level": self.skill_level,
            "ingredients": [{"item_id": i, "qty": q} for i, q in self.ingredients],
            "workshop": self.workshop,
        }


@dataclass(frozen=True)
class Item:
    id: str
    name: str
    slot: Optional[str]  # None for materials
    level: int
    stats: StatVector
    sources: tuple[dict, ...]  # {"type": "gather"|"drop"|"craft", ...}
    recipe: Optional[Recipe] = None

    @property
    def equippable(self) -> bool:
        return self.slot is not None

    def gather_node_ids(self) -> list[str]:
        return [s["node_id"] for s in self.sources if s["type"] == "gather"]

    def drop_monster_ids(self) -> list[str]:
        return [s["monster_id"] for s in self.sources if s["type"] == "drop"]


@dataclass(frozen=True)
class Monster:
    id: str
    stats: StatVector
    difficulty_level: int
    drops: tuple[tuple[str, float], ...]  # (item id, rate in (0, 1])
    location_id: str


@dataclass(frozen=True)
class ResourceNode:
    id: str
    resource_item_id: str
    skill: str
    skill_level: int
    xp_reward: int
    location_id: str


@dataclass(frozen=True)
class Location:
    id: str
    coords: tuple[int, int]
    elements: tuple[dict, ...]  # {"type": "node"|"workshop"|"monster", "id": ...}


@dataclass(frozen=True)
class SkillDef:
    id: str
    name: str


@dataclass(frozen=True)
class ValidationReport:
    counts: dict
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"counts": self.counts, "violations": self.violations, "ok": self.ok}


@dataclass(frozen=True, eq=False)  # identity hash: worlds are singletons for caching
class WorldDef:
    items: dict[str, Item]
    recipes: dict[str, Recipe]  # keyed by output item id
    monsters: dict[str, Monster]
    nodes: dict[str, ResourceNode]
    locations: dict[str, Location]
    skills: dict[str, SkillDef]
    grid: tuple[int, int]  # (width, height)
    world_hash: str
    counts: dict = field(default_factory=dict)

    # -- derived indexes ---------------------------------------------------
    @cached_property
    def _by_coords(self) -> dict:
        return {loc.coords: loc for loc in self.locations.values()}

    @cached_property
    def _workshop_locations(self) -> dict:
        out = {}
        for loc in sorted(self.locations.values(), key=lambda l: l.id):
            for el in loc.elements:
                if el["type"] == "workshop":
                    out.setdefault(el["id"], loc)
        return out

    @cached_property
    def obtainable_ids(self) -> frozenset:
        """Items with a resolvable acquisition route.

        Gatherable or dropped items are obtainable; crafted items are
        obtainable only if every ingredient is. Equippable items outside this
        set exist to serve as distractors: their recipes dead-end.
        """
        memo: dict[str, bool] = {}

        def check(item_id: str) -> bool:
            if item_id in memo:
                return memo[item_id]
            item = self.items[item_id]
            kinds = {s["type"] for s in item.sources}
            if "gather" in kinds or "drop" in kinds:
                memo[item_id] = True
            elif "craft" in kinds and item_id in self.recipes:
                memo[item_id] = True  # acyclic graph: safe to assume while recursing
                memo[item_id] = all(check(i) for i, _q in self.recipes[item_id].ingredients)
            else:
                memo[item_id] = False
            return memo[item_id]

        return frozenset(i for i in self.items if check(i))

    def location_at(self, coords: tuple[int, int]) -> Optional[Location]:
        return self._by_coords.get(tuple(coords))

    def workshop_location(self, workshop_id: str) -> Optional[Location]:
        return self._workshop_locations.get(workshop_id)

    def monsters_at(self, coords: tuple[int, int]) -> list[Monster]:
        loc = self.location_at(coords)
        if loc is None:
            return []
        out = [self.monsters[el["id"]] for el in loc.elements if el["type"] == "monster"]
        return sorted(out, key=lambda m: m.id)

    def nodes_at(self, coords: tuple[int, int]) -> list[ResourceNode]:
        loc = self.location_at(coords)
        if loc is None:
            return []
        out = [self.nodes[el["id"]] for el in loc.elements if el["type"] == "node"]
        return sorted(out, key=lambda n: n.id)

    def workshops_at(self, coords: tuple[int, int]) -> list[str]:
        loc = self.location_at(coords)
        if loc is None:
            return []
        return sorted(el["id"] for el in loc.elements if el["type"] == "workshop")

    def in_bounds(self, coords: tuple[int, int]) -> bool:
        x, y = coords
        return 0 <= x < self.grid[0] and 0 <= y < self.grid[1]


# ---------------------------------------------------------------------------
# parsing helpers


def _check_keys(obj: dict, where: str, required: dict, optional: dict, out: list[str]) -> bool:
    """Validate presence and primitive types; reject unknown keys."""
    ok = True
    for key in obj:
        if key not in required and key not in optional:
            out.append(f"{where}: unknown field '{key}'")
            ok = False
    for key, typ in required.items():
        if key not in obj:
            out.append(f"{where}: missing required field '{key}'")
            ok = False
        elif typ is not None and not isinstance(obj[key], typ):
            out.append(f"{where}: field '{key}' has wrong type")
            ok = False
    for key, typ in optional.items():
        if key in obj and typ is not None and obj[key] is not None and not isinstance(obj[key], typ):
            out.append(f"{where}: field '{key}' has wrong type")
            ok = False
    return ok


def _parse_stats(raw: dict, where: str, out: list[str]) -> StatVector:
    if not isinstance(raw, dict):
        out.append(f"{where}: stats must be an object")
        return StatVector()
    ok = _check_keys(
        raw, f"{where}.stats",
        required={}, optional={"hp": int, "attack": dict, "dmg_amp": dict, "resist": dict},
        out=out,
    )
    for vec_name in ("attack", "dmg_amp", "resist"):
        vec = raw.get(vec_name) or {}
        for elem, val in vec.items():
            if elem not in ELEMENTS:
                out.append(f"{where}.stats.{vec_name}: unknown element '{elem}'")
                ok = False
            elif not isinstance(val, int):
                out.append(f"{where}.stats.{vec_name}.{elem}: must be an integer")
                ok = False
    if not ok:
        return StatVector()
    sv = StatVector.from_json(raw)
    if sv.hp < 0:
        out.append(f"{where}.stats: hp must be >= 0")
    for elem, r in zip(ELEMENTS, sv.resist):
        if not -100 <= r <= 100:
            out.append(f"{where}.stats.resist.{elem}: must be in [-100, 100]")
    return sv


def _read_doc(path: Path, out: list[str]) -> Optional[dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        out.append(f"{path.name}: file not found")
        return None
    except json.JSONDecodeError as exc:
        out.append(f"{path.name}: not valid JSON ({exc.msg} at line {exc.lineno})")
        return None
    if not isinstance(doc, dict):
        out.append(f"{path.name}: top level must be an object")
        return None
    if doc.get("schema_version") != SCHEMA_VERSION:
        out.append(f"{path.name}: schema_version must be {SCHEMA_VERSION}")
        return None
    return doc


def _find_crafting_cycle(recipes: dict[str, Recipe]) -> Optional[list[str]]:
    """Return one dependency cycle among craftable items, if any."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {out_id: WHITE for out_id in recipes}
    stack: list[str] = []

    def visit(item_id: str) -> Optional[list[str]]:
        color[item_id] = GREY
        stack.append(item_id)
        for ing_id, _qty in recipes[item_id].ingredients:
            if ing_id not in recipes:
                continue
            if color[ing_id] == GREY:
                return stack[stack.index(ing_id):] + [ing_id]
            if color[ing_id] == WHITE:
                found = visit(ing_id)
                if found:
                    return found
        color[item_id] = BLACK
        stack.pop()
        return None

    for out_id in sorted(recipes):
        if color[out_id] == WHITE:
            found = visit(out_id)
            if found:
                return found
    return None


def _build(paths: dict[str, Path]) -> tuple[Optional[WorldDef], ValidationReport]:
    v: list[str] = []
    docs = {}
    for name in BUNDLE_FILES:
        if name not in paths:
            v.append(f"{name}: missing from bundle")
            continue
        doc = _read_doc(paths[name], v)
        if doc is not None:
            docs[name] = doc
    if len(docs) < len(BUNDLE_FILES):
        return None, ValidationReport(counts={}, violations=v)

    # skills
    skills: dict[str, SkillDef] = {}
    _check_keys(docs["skills.json"], "skills.json", {"schema_version": int, "skills": list}, {}, v)
    for raw in docs["skills.json"].get("skills", []):
        where = f"skills.json:{raw.get('id', '?')}"
        if _check_keys(raw, where, {"id": str, "name": str}, {}, v):
            skills[raw["id"]] = SkillDef(id=raw["id"], name=raw["name"])

    # locations
    locations: dict[str, Location] = {}
    loc_doc = docs["locations.json"]
    _check_keys(loc_doc, "locations.json",
                {"schema_version": int, "grid": dict, "locations": list}, {}, v)
    grid_raw = loc_doc.get("grid", {})
    _check_keys(grid_raw, "locations.json.grid", {"width": int, "height": int}, {}, v)
    grid = (int(grid_raw.get("width", 0)), int(grid_raw.get("height", 0)))
    seen_coords: dict[tuple[int, int], str] = {}
    for raw in loc_doc.get("locations", []):
        where = f"locations.json:{raw.get('id', '?')}"
        if not _check_keys(raw, where, {"id": str, "x": int, "y": int, "elements": list}, {}, v):
            continue
        coords = (raw["x"], raw["y"])
        if coords in seen_coords:
            v.append(f"{where}: duplicate coords {coords} (also {seen_coords[coords]})")
        seen_coords[coords] = raw["id"]
        if not (0 <= raw["x"] < grid[0] and 0 <= raw["y"] < grid[1]):
            v.append(f"{where}: coords {coords} outside grid {grid}")
        elements = []
        for el in raw["elements"]:
            if _check_keys(el, f"{where}.element", {"type": str, "id": str}, {}, v):
                if el["type"] not in ("node", "workshop", "monster"):
                    v.append(f"{where}: unknown element type '{el['type']}'")
                else:
                    elements.append({"type": el["type"], "id": el["id"]})
        locations[raw["id"]] = Location(id=raw["id"], coords=coords, elements=tuple(elements))

    # recipes
    recipes: dict[str, Recipe] = {}
    _check_keys(docs["recipes.json"], "recipes.json", {"schema_version": int, "recipes": list}, {}, v)
    for raw in docs["recipes.json"].get("recipes", []):
        where = f"recipes.json:{raw.get('output_id', '?')}"
        if not _check_keys(
            raw, where,
            {"output_id": str, "output_qty": int, "skill": str, "skill_level": int,
             "ingredients": list, "workshop": str},
            {}, v,
        ):
            continue
        if raw["output_id"] in recipes:
            v.append(f"{where}: duplicate recipe for same output")
            continue
        if raw["output_qty"] < 1:
            v.append(f"{where}: output_qty must be >= 1")
        if raw["skill_level"] < 1:
            v.append(f"{where}: skill_level must be >= 1")
        if not raw["ingredients"]:
            v.append(f"{where}: ingredient list must be non-empty")
        ings = []
        for ing in raw["ingredients"]:
            if _check_keys(ing, f"{where}.ingredient", {"item_id": str, "qty": int}, {}, v):
                if ing["qty"] < 1:
                    v.append(f"{where}: ingredient {ing['item_id']} qty must be >= 1")
                ings.append((ing["item_id"], ing["qty"]))
        recipes[raw["output_id"]] = Recipe(
            output_id=raw["output_id"], output_qty=raw["output_qty"],
            skill=raw["skill"], skill_level=raw["skill_level"],
            ingredients=tuple(ings), workshop=raw["workshop"],
        )

    # items
    items: dict[str, Item] = {}
    _check_keys(docs["items.json"], "items.json", {"schema_version": int, "items": list}, {}, v)
    for raw in docs["items.json"].get("items", []):
        where = f"items.json:{raw.get('id', '?')}"
        if not _check_keys(
            raw, where,
            {"id": str, "name": str, "level": int, "stats": dict, "sources": list},
            {"slot": str}, v,
        ):
            continue
        slot = raw.get("slot")
        if slot is not None and slot not in GEAR_SLOTS:
            v.append(f"{where}: unknown slot '{slot}'")
            continue
        if raw["level"] < 1:
            v.append(f"{where}: level must be >= 1")
        stats = _parse_stats(raw["stats"], where, v)
        sources = []
        for src in raw["sources"]:
            styp = src.get("type")
            if styp == "gather":
                if _check_keys(src, f"{where}.source", {"type": str, "node_id": str}, {}, v):
                    sources.append({"type": "gather", "node_id": src["node_id"]})
            elif styp == "drop":
                if _check_keys(src, f"{where}.source", {"type": str, "monster_id": str}, {}, v):
                    sources.append({"type": "drop", "monster_id": src["monster_id"]})
            elif styp == "craft":
                if _check_keys(src, f"{where}.source", {"type": str}, {}, v):
                    sources.append({"type": "craft"})
            else:
                v.append(f"{where}: unknown source type '{styp}'")
        items[raw["id"]] = Item(
            id=raw["id"], name=raw["name"], slot=slot, level=raw["level"],
            stats=stats, sources=tuple(sources), recipe=recipes.get(raw["id"]),
        )

    # resource nodes
    nodes: dict[str, ResourceNode] = {}
    _check_keys(docs["resource_nodes.json"], "resource_nodes.json",
                {"schema_version": int, "nodes": list}, {}, v)
    for raw in docs["resource_nodes.json"].get("nodes", []):
        where = f"resource_nodes.json:{raw.get('id', '?')}"
        if not _check_keys(
            raw, where,
            {"id": str, "resource_item_id": str, "skill": str, "skill_level": int,
             "xp_reward": int, "location_id": str},
            {}, v,
        ):
            continue
        if raw["xp_reward"] < 1:
            v.append(f"{where}: xp_reward must be >= 1")
        if raw["skill_level"] < 1:
            v.append(f"{where}: skill_level must be >= 1")
        nodes[raw["id"]] = ResourceNode(
            id=raw["id"], resource_item_id=raw["resource_item_id"], skill=raw["skill"],
            skill_level=raw["skill_level"], xp_reward=raw["xp_reward"],
            location_id=raw["location_id"],
        )

    # monsters
    monsters: dict[str, Monster] = {}
    _check_keys(docs["monsters.json"], "monsters.json", {"schema_version": int, "monsters": list}, {}, v)
    for raw in docs["monsters.json"].get("monsters", []):
        where = f"monsters.json:{raw.get('id', '?')}"
        if not _check_keys(
            raw, where,
            {"id": str, "stats": dict, "difficulty_level": int, "drops": list, "location_id": str},
            {}, v,
        ):
            continue
        if raw["difficulty_level"] < 1:
            v.append(f"{where}: difficulty_level must be >= 1")
        stats = _parse_stats(raw["stats"], where, v)
        drops = []
        for d in raw["drops"]:
            if _check_keys(d, f"{where}.drop", {"item_id": str, "rate": (int, float)}, {}, v):
                if not 0 < d["rate"] <= 1:
                    v.append(f"{where}: drop rate for {d['item_id']} must be in (0, 1]")
                drops.append((d["item_id"], float(d["rate"])))
        monsters[raw["id"]] = Monster(
            id=raw["id"], stats=stats, difficulty_level=raw["difficulty_level"],
            drops=tuple(drops), location_id=raw["location_id"],
        )

    # -- cross references ---------------------------------------------------
    workshop_ids = {
        el["id"] for loc in locations.values() for el in loc.elements if el["type"] == "workshop"
    }
    for loc in locations.values():
        for el in loc.elements:
            if el["type"] == "node" and el["id"] not in nodes:
                v.append(f"locations.json:{loc.id}: element references unknown node '{el['id']}'")
            if el["type"] == "monster" and el["id"] not in monsters:
                v.append(f"locations.json:{loc.id}: element references unknown monster '{el['id']}'")
    for rec in recipes.values():
        if rec.output_id not in items:
            v.append(f"recipes.json:{rec.output_id}: output is not a known item")
        if rec.skill not in skills:
            v.append(f"recipes.json:{rec.output_id}: unknown skill '{rec.skill}'")
        if rec.workshop not in workshop_ids:
            v.append(f"recipes.json:{rec.output_id}: workshop '{rec.workshop}' not placed in any location")
        for ing_id, _q in rec.ingredients:
            if ing_id not in items:
                v.append(f"recipes.json:{rec.output_id}: ingredient '{ing_id}' is not a known item")
    for node in nodes.values():
        if node.resource_item_id not in items:
            v.append(f"resource_nodes.json:{node.id}: resource item '{node.resource_item_id}' unknown")
        if node.skill not in skills:
            v.append(f"resource_nodes.json:{node.id}: unknown skill '{node.skill}'")
        if node.location_id not in locations:
            v.append(f"resource_nodes.json:{node.id}: unknown location '{node.location_id}'")
    for mon in monsters.values():
        if mon.location_id not in locations:
            v.append(f"monsters.json:{mon.id}: unknown location '{mon.location_id}'")
        for item_id, _rate in mon.drops:
            if item_id not in items:
                v.append(f"monsters.json:{mon.id}: drop item '{item_id}' unknown")
    for item in items.values():
        if item.equippable and item.stats == StatVector():
            v.append(f"items.json:{item.id}: equippable item has no stats")
        for src in item.sources:
            if src["type"] == "gather":
                node = nodes.get(src["node_id"])
                if node is None:
                    v.append(f"items.json:{item.id}: gather source references unknown node '{src['node_id']}'")
                elif node.resource_item_id != item.id:
                    v.append(f"items.json:{item.id}: node '{node.id}' yields '{node.resource_item_id}', not this item")
            elif src["type"] == "drop":
                mon = monsters.get(src["monster_id"])
                if mon is None:
                    v.append(f"items.json:{item.id}: drop source references unknown monster '{src['monster_id']}'")
                elif item.id not in {i for i, _r in mon.drops}:
                    v.append(f"items.json:{item.id}: monster '{src['monster_id']}' does not drop this item")
            elif src["type"] == "craft" and item.id not in recipes:
                v.append(f"items.json:{item.id}: craft source but no recipe")
        if item.id in recipes and not any(s["type"] == "craft" for s in item.sources):
            v.append(f"items.json:{item.id}: has a recipe but no craft source entry")

    cycle = _find_crafting_cycle(recipes)
    if cycle:
        v.append("recipes.json: crafting cycle " + " -> ".join(cycle))

    counts = {
        "locations": len(locations),
        "monsters": len(monsters),
        "items": len(items),
        "recipes": len(recipes),
        "resource_nodes": len(nodes),
        "resource_types": len({n.resource_item_id for n in nodes.values()}),
        "skills": len(skills),
        "workshops": len(workshop_ids),
    }
    report = ValidationReport(counts=counts, violations=v)
    if v:
        return None, report

    canonical = json.dumps({n: docs[n] for n in BUNDLE_FILES}, sort_keys=True,
                           separators=(",", ":")).encode()
    world = WorldDef(
        items=items, recipes=recipes, monsters=monsters, nodes=nodes,
        locations=locations, skills=skills, grid=grid,
        world_hash=hashlib.sha256(canonical).hexdigest(),
        counts=counts,
    )
    return world, report


def _path_map(paths: Iterable[str | Path]) -> dict[str, Path]:
    return {Path(p).name: Path(p) for p in paths}


def load_world(paths: Sequence[str | Path]) -> WorldDef:
    """Load and fully validate a world bundle; raises WorldError on any violation."""
    world, report = _build(_path_map(paths))
    if world is None:
        raise WorldError(report.violations)
    return world


def load_world_dir(directory: str | Path) -> WorldDef:
    d = Path(directory)
    return load_world([d / name for name in BUNDLE_FILES])


def validate_bundle(directory: str | Path) -> ValidationReport:
    """Tolerant validation of a possibly-broken bundle; never raises."""
    d = Path(directory)
    _world, report = _build(_path_map(d / name for name in BUNDLE_FILES))
    return report


def validate_world(world: WorldDef) -> ValidationReport:
    """Report for an already-loaded world. Loaded worlds are violation-free."""
    return ValidationReport(counts=dict(world.counts), violations=[])


def items_at_or_below_level(world: WorldDef, level: int) -> list[Item]:
    """Equippable items whose level requirement is satisfied, ordered by id."""
    if level < 1:
        raise ValueError("level must be >= 1")
    out = [it for it in world.items.values() if it.equippable and it.level <= level]
    return sorted(out, key=lambda it: it.id)

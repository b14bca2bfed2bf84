"""Deterministic natural-language prompt rendering for tasks.

The template is versioned and hashed; the hash is embedded in every task so
scores remain comparable across template revisions. Rendering must be
byte-identical across runs: everything is emitted from sorted task data and
no timestamps, randomness or float formatting ambiguity is allowed.

Distractor (noise) entries are rendered through exactly the same code paths
as genuine ones; the rendered text carries no marker that could give them
away.
"""
from __future__ import annotations

import hashlib

from .stats import ELEMENTS

TEMPLATE_VERSION = "1"

RULES_TEXT = """\
== HOW THE WORLD WORKS ==

The world is a grid of locations. You occupy exactly one location at a time.
Moving is a single action that teleports you to any valid grid coordinate,
regardless of distance; moving to a coordinate that is not a listed location
fails. Everything you can interact with (resource nodes, workshops, monsters)
sits at a fixed location given in this briefing, and every interaction only
works while you are standing on the right tile.

Gathering: standing on a resource node, one gather action yields exactly one
unit of that node's resource and grants the node's experience reward to the
corresponding profession. A node can only be used if your profession level is
at least the node's required level. Professions level up automatically:
advancing from level N to level N+1 requires exactly 100*N experience points,
and surplus experience carries over.

Crafting: standing on the workshop named by a recipe, one craft action with a
count of N performs the recipe N times in a single action: it consumes N times
the listed ingredients from your inventory and produces N times the recipe
output. Crafting fails if you are at the wrong workshop, your profession level
is below the recipe requirement, or any ingredient is short. Failed actions
consume the turn but change nothing.

Equipment: each item occupies one gear slot (weapon, shield, helmet,
body_armor, leg_armor, boots, amulet, ring; the ring slot holds up to two
different rings). Equipping moves an item from your inventory onto your
character and requires your character level to be at least the item level.
Unequipping a slot returns the most recently equipped item in that slot to
your inventory.

Combat: fighting is turn-based and fully deterministic, and you strike first.
Your total stats are your base stats plus the sum of every equipped item's
stats. On each of your turns you deal, per element e in (fire, earth, water,
air):

    floor( attack_e * (1 + dmg_amp_e/100) * (1 - resist_e(defender)/100) )

damage, with any negative per-element term counted as zero; the monster deals
damage to you by the same formula on its turns. Turns alternate strictly
(you, monster, you, ...). Whoever reduces the opponent's hit points to zero
or below first wins. If neither side has won after 50 total turns, the fight
counts as your loss. Losing a fight restores your hit points to full and
nothing else happens; winning keeps your remaining hit points and grants the
monster's drops. Resting restores hit points to full. Your base hit points
are 100 + 10 * character_level; your base attack, amplification and
resistance are all zero, so every point of offense and defense comes from
equipment. Choose gear carefully: simulate the fight against the target's
stats before committing to a crafting plan.

Worked example: a level 4 character (140 base hit points) wearing a shield
with hp +10 and resist.water +30 fights a monster with 120 hit points that
attacks for 25 water. The character's sword deals attack.fire 20 into zero
fire resistance, so each of the character's turns removes 20 hit points and
the kill needs 6 strikes. The monster's turns deal floor(25 * 1.0 * 0.70) =
17 against the character's 150 total hit points, so the character survives 8
monster strikes. Because the character moves first, strike 6 lands on overall
turn 11 while the monster would only land its killing blow on turn 16: the
character wins. Removing the shield drops survival to 5 monster strikes and
the same fight is lost. Run this arithmetic for every gear combination you
consider, both for the target and for any monster you must farm for drops.

== ACTIONS ==

move(x, y)        teleport to grid coordinate (x, y); fails off-grid
gather()          harvest 1 unit from the node you are standing on
fight()           fight the monster at your location
craft('item', n)  perform the item's recipe n times at its workshop
equip('item')     equip one unit of 'item' from your inventory
unequip('slot')   return the newest item in that gear slot to your inventory
recycle('item', n) destroy n units, refunding half the ingredients (rounded down)
rest()            restore hit points to full

== OUTPUT FORMAT ==

Reply with a single fenced code block containing only straight-line calls to
the actions above, one per line, in execution order. The only control
structure allowed is a repeat loop of the exact form:

    for i in range(N):
        gather()

where N is a positive integer literal. Loops may be nested at most two deep.
No variables, arithmetic, conditionals, while loops, function definitions,
imports or comments referencing other code are allowed; any other construct
invalidates the whole plan. String arguments use the exact ids given in this
briefing. Actions that fail are skipped but still consume a step, so plan
exact quantities. The plan is executed exactly as written and scored on
whether the goal is achieved.
"""

TEMPLATE_HASH = hashlib.sha256(
    (TEMPLATE_VERSION + "\n" + RULES_TEXT).encode()
).hexdigest()


def _fmt_stats(stats: dict) -> str:
    parts = []
    hp = stats.get("hp", 0)
    if hp:
        parts.append(f"hp +{hp}")
    for channel, label in (("attack", "attack"), ("dmg_amp", "dmg_amp"), ("resist", "resist")):
        vec = stats.get(channel, {})
        for elem in ELEMENTS:
            val = vec.get(elem, 0)
            if val:
                parts.append(f"{label}.{elem} {val:+d}")
    return ", ".join(parts) if parts else "no stat bonuses"


def _fmt_rate(rate: float) -> str:
    return f"{rate:g}"


def _item_lines(task: dict) -> list[str]:
    env = task["environment"]
    lines = ["== ITEMS =="]
    for item in env["items"]:
        slot = item.get("slot")
        kind = f"{slot} gear, requires level {item['level']}" if slot else "material"
        lines.append(f"- {item['id']} ({kind}): {_fmt_stats(item['stats'])}")
        for src in item["sources"]:
            if src["type"] == "gather":
                lines.append(f"    obtained by gathering at node '{src['node_id']}'")
            elif src["type"] == "drop":
                lines.append(f"    dropped by monster '{src['monster_id']}'")
            elif src["type"] == "craft":
                lines.append("    craftable (see recipes)")
    return lines


def _recipe_lines(task: dict) -> list[str]:
    env = task["environment"]
    if not env["recipes"]:
        return []
    lines = ["== RECIPES =="]
    for rec in env["recipes"]:
        ings = " + ".join(f"{ing['qty']} {ing['item_id']}" for ing in rec["ingredients"])
        lines.append(
            f"- {rec['output_id']} x{rec['output_qty']}: {ings}  "
            f"[workshop '{rec['workshop']}', {rec['skill']} level {rec['skill_level']}]"
        )
    return lines


def _monster_lines(task: dict) -> list[str]:
    env = task["environment"]
    if not env["monsters"]:
        return []
    lines = ["== MONSTERS =="]
    for mon in env["monsters"]:
        lines.append(
            f"- {mon['id']} at ({mon['location'][0]}, {mon['location'][1]}): "
            f"{_fmt_stats(mon['stats'])}"
        )
        for drop in mon["drops"]:
            lines.append(f"    drops {drop['item_id']} (rate {_fmt_rate(drop['rate'])})")
    return lines


def _node_lines(task: dict) -> list[str]:
    env = task["environment"]
    if not env["resource_nodes"]:
        return []
    lines = ["== RESOURCE NODES =="]
    for node in env["resource_nodes"]:
        lines.append(
            f"- {node['id']} at ({node['location'][0]}, {node['location'][1]}): "
            f"yields {node['resource_item_id']}, {node['skill']} level "
            f"{node['skill_level']}+, {node['xp_reward']} xp per gather"
        )
    return lines


def _workshop_lines(task: dict) -> list[str]:
    env = task["environment"]
    if not env["workshops"]:
        return []
    lines = ["== WORKSHOPS =="]
    for ws in env["workshops"]:
        lines.append(f"- {ws['id']} at ({ws['location'][0]}, {ws['location'][1]})")
    return lines


def _character_lines(task: dict) -> list[str]:
    char = task["character"]
    lines = ["== YOUR CHARACTER =="]
    lines.append(f"Character level: {char['level']}")
    lines.append(f"Base hit points: {100 + 10 * char['level']} (100 + 10 * level)")
    lines.append(f"Starting position: ({char['position'][0]}, {char['position'][1]})")
    profs = ", ".join(f"{prof} level {lv[0]}" for prof, lv in sorted(char["skills"].items()))
    lines.append(f"Professions: {profs}")
    if char["equipment"]:
        lines.append("Equipped at start:")
        env_items = {it["id"]: it for it in task["environment"]["items"]}
        for item_id in char["equipment"]:
            stats = env_items[item_id]["stats"] if item_id in env_items else {}
            lines.append(f"- {item_id} ({_fmt_stats(stats)})")
    else:
        lines.append("Equipped at start: nothing")
    if char.get("inventory"):
        inv = ", ".join(f"{qty}x {iid}" for iid, qty in sorted(char["inventory"].items()))
        lines.append(f"Inventory: {inv}")
    else:
        lines.append("Inventory: empty")
    return lines


def _goal_lines(task: dict) -> list[str]:
    if task["kind"] == "combat":
        target = next(m for m in task["environment"]["monsters"] if m["id"] == task["target"])
        return [
            "== GOAL ==",
            f"Defeat the monster '{task['target']}' at "
            f"({target['location'][0]}, {target['location'][1]}).",
            "You will need better equipment than you start with; work out the",
            "smallest set of gear that wins the fight, acquire it, equip it,",
            "then fight the target.",
        ]
    return [
        "== GOAL ==",
        f"Obtain at least one unit of the item '{task['target']}'.",
        "Gather, fight and craft as needed until the item is in your",
        "possession.",
    ]


def render_prompt(task: dict) -> str:
    """Deterministic prompt text for a task (byte-identical across runs)."""
    sections = [
        "You control a character in a deterministic RPG world through a short",
        "action program. Read the rules and the world data, plan carefully,",
        "then output your full plan.",
        "",
    ]
    sections.extend(_goal_lines(task))
    sections.append("")
    sections.append(RULES_TEXT)
    sections.extend(_character_lines(task))
    sections.append("")
    sections.extend(_monster_lines(task))
    sections.append("")
    sections.extend(_node_lines(task))
    sections.append("")
    sections.extend(_workshop_lines(task))
    sections.append("")
    sections.extend(_item_lines(task))
    sections.append("")
    sections.extend(_recipe_lines(task))
    if task["mechanics"]["leveling"]:
        sections.append("")
        sections.append("== LEVELING NOTICE ==")
        sections.append(
            "All professions start at level 1. Recipes and nodes above your"
        )
        sections.append(
            "current profession level fail until you level up by gathering at"
        )
        sections.append(
            "accessible nodes (thresholds: 100 * current_level xp per level)."
        )
    sections.append("")
    sections.append("Output your plan now.")
    return "\n".join(sections) + "\n"


def token_estimate(text: str) -> int:
    """Whitespace tokenizer proxy used for prompt-length accounting."""
    return len(text.split())

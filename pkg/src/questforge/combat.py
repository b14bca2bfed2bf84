"""Deterministic turn-based combat between a geared character and a monster.

The damage model sums, per element, ``floor(attack * (1 + amp/100) *
(1 - resist/100))`` with each term clamped at zero. All arithmetic is exact
integer math so that every implementation (interpreted, compiled, test
oracles) agrees bit-for-bit. The player always strikes first; a fight that
reaches the turn cap counts as a player loss.

The win-only fast path dispatches to a compiled kernel when the extension
built, and to the pure-Python twin otherwise; set ``QUESTFORGE_PURE=1`` to
force the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .stats import StatVector
from .world import SLOT_CAPACITY, Item, WorldDef

TURN_CAP = 50

if os.environ.get("QUESTFORGE_PURE"):
    from . import _turnloop_py as _kernel

    KERNEL_BACKEND = "python"
else:
    try:
        from . import _turnloop as _kernel  # type: ignore[attr-defined]

        KERNEL_BACKEND = "compiled"
    except ImportError:
        from . import _turnloop_py as _kernel

        KERNEL_BACKEND = "python"


class GearError(ValueError):
    """Gear set violates slot capacity or level requirements."""


@dataclass(frozen=True)
class GearPiece:
    id: str
    slot: str
    level: int
    stats: StatVector


@dataclass(frozen=True)
class GearSet:
    """Resolved equipment: at most one item per slot, two for rings."""

    pieces: tuple[GearPiece, ...] = ()

    @classmethod
    def from_items(cls, items: Iterable[Item]) -> "GearSet":
        pieces = []
        used: dict[str, int] = {}
        seen: set[str] = set()
        for item in sorted(items, key=lambda i: i.id):
            if item.slot is None:
                raise GearError(f"{item.id} is a material, not equippable")
            if item.id in seen:
                raise GearError(f"duplicate item {item.id} in gear set")
            seen.add(item.id)
            used[item.slot] = used.get(item.slot, 0) + 1
            if used[item.slot] > SLOT_CAPACITY[item.slot]:
                raise GearError(f"slot '{item.slot}' over capacity with {item.id}")
            pieces.append(GearPiece(id=item.id, slot=item.slot, level=item.level, stats=item.stats))
        return cls(pieces=tuple(pieces))

    @classmethod
    def from_ids(cls, world: WorldDef, item_ids: Iterable[str]) -> "GearSet":
        items = []
        for item_id in item_ids:
            item = world.items.get(item_id)
            if item is None:
                raise GearError(f"unknown item {item_id}")
            items.append(item)
        return cls.from_items(items)

    @property
    def item_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.pieces)

    def by_slot(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {}
        for p in self.pieces:
            out.setdefault(p.slot, []).append(p.id)
        return {slot: tuple(ids) for slot, ids in out.items()}

    def stat_sum(self) -> StatVector:
        total = StatVector()
        for p in self.pieces:
            total = total + p.stats
        return total

    def __len__(self) -> int:
        return len(self.pieces)


@dataclass(frozen=True)
class CharacterState:
    """Snapshot of a playable character outside combat."""

    level: int
    base_stats: StatVector
    skills: dict = field(default_factory=dict)  # profession -> (level, xp)
    inventory: dict = field(default_factory=dict)  # item id -> qty
    equipment: GearSet = field(default_factory=GearSet)
    position: tuple[int, int] = (0, 0)


def player_base_stats(level: int) -> StatVector:
    """Bare character: hp scales with level, no offense or defense.

    Victory therefore always hinges on equipment, which is the premise of
    every generated combat task.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    return StatVector(hp=100 + 10 * level)


def effective_stats(character: CharacterState, gear: GearSet) -> StatVector:
    """Base stats plus the componentwise sum of equipped item stats."""
    for piece in gear.pieces:
        if piece.level > character.level:
            raise GearError(f"{piece.id} requires level {piece.level}, character is {character.level}")
    return character.base_stats + gear.stat_sum()


def damage_breakdown(attacker: StatVector, defender: StatVector) -> tuple[int, int, int, int]:
    """Per-element damage of one strike; each term clamped at >= 0."""
    out = []
    for e in range(4):
        term = attacker.attack[e] * (100 + attacker.dmg_amp[e]) * (100 - defender.resist[e])
        out.append(term // 10000 if term > 0 else 0)
    return tuple(out)


def damage_per_turn(attacker: StatVector, defender: StatVector) -> int:
    return sum(damage_breakdown(attacker, defender))


@dataclass(frozen=True)
class CombatTurn:
    actor: str  # "player" | "monster"
    damage: tuple[int, int, int, int]
    defender_hp: int


@dataclass(frozen=True)
class CombatOutcome:
    winner: str  # "player" | "monster"
    turns: int
    turn_log: tuple[CombatTurn, ...]
    capped: bool

    @property
    def player_won(self) -> bool:
        return self.winner == "player"


def simulate(char_stats: StatVector, monster_stats: StatVector,
             turn_cap: int = TURN_CAP) -> CombatOutcome:
    """Full fight with per-turn log. Player strikes on odd turns.

    Pure function: identical inputs produce identical outcomes including the
    log. Gear contributions must already be folded into ``char_stats``.
    """
    if char_stats.hp <= 0 or monster_stats.hp <= 0:
        raise ValueError("both combatants must start with hp > 0")
    dmg_p = damage_breakdown(char_stats, monster_stats)
    dmg_m = damage_breakdown(monster_stats, char_stats)
    hp_p, hp_m = char_stats.hp, monster_stats.hp
    log: list[CombatTurn] = []
    for turn in range(1, turn_cap + 1):
        if turn % 2 == 1:
            hp_m -= sum(dmg_p)
            log.append(CombatTurn(actor="player", damage=dmg_p, defender_hp=max(hp_m, 0)))
            if hp_m <= 0:
                return CombatOutcome(winner="player", turns=turn, turn_log=tuple(log), capped=False)
        else:
            hp_p -= sum(dmg_m)
            log.append(CombatTurn(actor="monster", damage=dmg_m, defender_hp=max(hp_p, 0)))
            if hp_p <= 0:
                return CombatOutcome(winner="monster", turns=turn, turn_log=tuple(log), capped=False)
    return CombatOutcome(winner="monster", turns=turn_cap, turn_log=tuple(log), capped=True)


def player_wins(char_stats: StatVector, monster_stats: StatVector,
                turn_cap: int = TURN_CAP) -> bool:
    """Win-only fast path; agrees with simulate() on every input."""
    p = np.asarray(char_stats.flat(), dtype=np.int64)
    m = np.asarray(monster_stats.flat(), dtype=np.int64)
    return bool(_kernel.player_wins(p, m, turn_cap))


def _dmg_flat(att, dfn) -> int:
    total = 0
    for e in range(4):
        term = att[1 + e] * (100 + att[5 + e]) * (100 - dfn[9 + e])
        if term > 0:
            total += term // 10000
    return total


def wins_closed_form(player_flat, monster_flat, turn_cap: int = TURN_CAP) -> bool:
    """Exact closed form of the alternating turn loop, on flat 13-int rows.

    Both sides deal constant damage per strike, so the loop reduces to
    comparing kill-turn counts with the player moving first. Property-tested
    equal to simulate(); used where per-call overhead matters (search bounds).
    """
    dmg_p = _dmg_flat(player_flat, monster_flat)
    if dmg_p <= 0:
        return False
    strikes_p = -(-monster_flat[0] // dmg_p)
    if 2 * strikes_p - 1 > turn_cap:
        return False  # cap reached before the killing blow
    dmg_m = _dmg_flat(monster_flat, player_flat)
    if dmg_m <= 0:
        return True
    strikes_m = -(-player_flat[0] // dmg_m)
    return strikes_p <= strikes_m


def wins_batch(char_rows: Sequence[Sequence[int]] | np.ndarray,
               monster_stats: StatVector, turn_cap: int = TURN_CAP) -> np.ndarray:
    """Evaluate many candidate aggregates against one monster in one call."""
    rows = np.ascontiguousarray(np.asarray(char_rows, dtype=np.int64))
    if rows.ndim != 2 or rows.shape[1] != 13:
        raise ValueError("expected an (n, 13) array of flat stat rows")
    out = np.zeros(rows.shape[0], dtype=np.uint8)
    m = np.asarray(monster_stats.flat(), dtype=np.int64)
    _kernel.wins_batch(rows, m, turn_cap, out)
    return out.astype(bool)

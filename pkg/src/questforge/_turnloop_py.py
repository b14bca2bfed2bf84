"""Pure-Python twin of the compiled turn loop (fallback backend).

Same flat 13-int stat rows, same alternating turn loop, same results; only
slower. Selected at import time by :mod:`questforge.combat` when the compiled
extension is unavailable or disabled.
"""
from __future__ import annotations


def _dmg(att, dfn) -> int:
    total = 0
    for e in range(4):
        term = att[1 + e] * (100 + att[5 + e]) * (100 - dfn[9 + e])
        if term > 0:
            total += term // 10000
    return total


def damage_per_turn(attacker, defender) -> int:
    return _dmg(attacker, defender)


def player_wins(player, monster, turn_cap: int) -> bool:
    dmg_p = _dmg(player, monster)
    dmg_m = _dmg(monster, player)
    hp_p = player[0]
    hp_m = monster[0]
    for turn in range(1, turn_cap + 1):
        if turn % 2 == 1:
            hp_m -= dmg_p
            if hp_m <= 0:
                return True
        else:
            hp_p -= dmg_m
            if hp_p <= 0:
                return False
    return False  # cap reached: monster wins


def wins_batch(players, monster, turn_cap: int, out) -> None:
    monster = tuple(monster)
    for i in range(len(players)):
        out[i] = player_wins(tuple(players[i]), monster, turn_cap)

"""Minimal winning gear search and its satellites (partition, auxiliary, noise).

A minimal winning gear set is a smallest slot-valid item subset that beats the
target; removing any single item from it loses. Because victory is monotone in
the aggregate stat vector (for non-negative item stats), every minimum-size
winning set is minimal, and the search can prune branches whose componentwise
optimistic completion still loses.

The search enumerates by set size: for each k it walks slots depth-first,
batches all surviving size-k aggregates through the combat kernel, and stops
at the first k with winners, returning all of them. On worlds containing
negative item stats the optimistic bound is disabled and enumeration is
exhaustive per size.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import combat
from .combat import GearSet
from .rng import SeededShuffler
from .stats import StatVector
from .world import SLOT_CAPACITY, Item, Monster, WorldDef, items_at_or_below_level


class GearSearchBudgetError(Exception):
    """Enumeration exceeded the node budget; the pool is adversarially shaped."""


class PartitionError(ValueError):
    pass


class AuxiliaryInfeasibleError(Exception):
    """No small auxiliary set separates the target from the scenario monsters."""


def default_pool(world: WorldDef, monster: Monster) -> list[Item]:
    """Equippable, obtainable items at or below the monster's difficulty level.

    Unobtainable gear (a dead-end crafting chain) can never be part of a
    solvable task, so it is not a solution candidate.
    """
    return [it for it in items_at_or_below_level(world, monster.difficulty_level)
            if it.id in world.obtainable_ids]


# ---------------------------------------------------------------------------
# size-k enumeration


def _slot_groups(pool: list[Item]) -> list[tuple[str, list[Item]]]:
    groups: dict[str, list[Item]] = {}
    for item in sorted(pool, key=lambda i: i.id):
        groups.setdefault(item.slot, []).append(item)
    # weapons first: without one the damage side of the bound dies immediately
    order = sorted(groups, key=lambda s: (s != "weapon", s))
    return [(slot, groups[slot]) for slot in order]


def _suffix_bounds(groups, budget_k: int) -> list[list[tuple[int, ...]]]:
    """opt[i][j]: componentwise upper bound on any <=j-pick sum from slots i.."""
    zero = (0,) * 13
    opt = [[zero for _ in range(budget_k + 1)] for _ in range(len(groups) + 1)]
    for i in range(len(groups) - 1, -1, -1):
        slot, items = groups[i]
        maxvec = tuple(max(it.stats.flat()[d] for it in items) for d in range(13))
        cap = min(SLOT_CAPACITY[slot], len(items))
        for j in range(budget_k + 1):
            best = list(opt[i + 1][j])
            for c in range(1, min(cap, j) + 1):
                prev = opt[i + 1][j - c]
                for d in range(13):
                    cand = c * maxvec[d] + prev[d]
                    if cand > best[d]:
                        best[d] = cand
            opt[i][j] = tuple(best)
    return opt


def _winning_sets_of_size(world: WorldDef, monster: Monster, groups,
                          base: StatVector, k: int, memo: dict,
                          use_bound: bool, bounds, node_budget: int) -> list[tuple[str, ...]]:
    """All slot-valid size-k subsets of the pool that win, as sorted id tuples.

    Interior nodes are pruned with the closed-form win predicate on an
    optimistic completion (plain integer math: this loop is allocation-hot);
    surviving leaf aggregates go through the batched kernel in one call.
    """
    base_flat = base.flat()
    monster_flat = monster.stats.flat()
    leaves: list[tuple[tuple[int, ...], tuple[str, ...]]] = []
    nodes_seen = 0

    cap_suffix = [0] * (len(groups) + 1)
    for i in range(len(groups) - 1, -1, -1):
        slot, items = groups[i]
        cap_suffix[i] = cap_suffix[i + 1] + min(SLOT_CAPACITY[slot], len(items))

    # per-slot choice lists: (summed stat tuple, item ids) for c picks at once
    choices: list[list[list[tuple[tuple[int, ...], tuple[str, ...]]]]] = []
    for slot, items in groups:
        per_count = [[((0,) * 13, ())]]
        cap = min(SLOT_CAPACITY[slot], len(items))
        for c in range(1, cap + 1):
            row = []
            for combo in itertools.combinations(items, c):
                total = combo[0].stats.flat()
                for it in combo[1:]:
                    flat = it.stats.flat()
                    total = tuple(a + b for a, b in zip(total, flat))
                row.append((total, tuple(it.id for it in combo)))
            per_count.append(row)
        choices.append(per_count)

    def descend(i: int, remaining: int, agg: tuple, chosen: tuple[str, ...]):
        nonlocal nodes_seen
        nodes_seen += 1
        if nodes_seen > node_budget:
            raise GearSearchBudgetError(f"exceeded {node_budget} search nodes")
        if remaining == 0:
            leaves.append((agg, chosen))
            return
        if i == len(groups) or remaining > cap_suffix[i]:
            return
        if use_bound:
            bound = bounds[i][remaining]
            optimistic = tuple(a + b for a, b in zip(agg, bound))
            if not combat.wins_closed_form(optimistic, monster_flat):
                return
        per_count = choices[i]
        take_max = min(len(per_count) - 1, remaining)
        for c in range(0, take_max + 1):
            if c == 0:
                descend(i + 1, remaining, agg, chosen)
                continue
            for add, ids in per_count[c]:
                child = tuple(a + b for a, b in zip(agg, add))
                descend(i + 1, remaining - c, child, chosen + ids)

    descend(0, k, base_flat, ())

    if not leaves:
        return []
    unseen = sorted({agg for agg, _ in leaves if agg not in memo})
    if unseen:
        wins = combat.wins_batch(np.asarray(unseen, dtype=np.int64), monster.stats)
        for agg, won in zip(unseen, wins):
            memo[agg] = bool(won)
    return sorted({tuple(sorted(chosen)) for agg, chosen in leaves if memo[agg]})


def minimal_winning_gear(world: WorldDef, monster: Monster,
                         pool: list[Item] | None = None,
                         char_stats: StatVector | None = None,
                         node_budget: int = 5_000_000) -> list[GearSet]:
    """All minimum-size winning gear sets, sorted by item-id tuple.

    Empty list means the monster is unbeatable with the candidate pool; a
    single empty GearSet means it falls bare-handed.
    """
    if pool is None:
        pool = default_pool(world, monster)
    base = char_stats if char_stats is not None else combat.player_base_stats(monster.difficulty_level)
    if combat.player_wins(base, monster.stats):
        return [GearSet()]
    if not pool:
        return []

    groups = _slot_groups(pool)
    max_k = sum(min(SLOT_CAPACITY[slot], len(items)) for slot, items in groups)
    use_bound = all(it.stats.is_nonnegative() for it in pool)
    bounds = _suffix_bounds(groups, max_k) if use_bound else None
    memo: dict[tuple[int, ...], bool] = {}
    by_id = {it.id: it for it in pool}

    for k in range(1, max_k + 1):
        winners = _winning_sets_of_size(world, monster, groups, base, k, memo,
                                        use_bound, bounds, node_budget)
        if winners:
            return [GearSet.from_items([by_id[i] for i in ids]) for ids in winners]
    return []


def exhaustive_minimal_gear(world: WorldDef, monster: Monster, pool: list[Item],
                            char_stats: StatVector | None = None) -> list[GearSet]:
    """Ground truth by full subset enumeration; guards against large pools.

    Deliberately shares nothing with the search above except the combat
    rules: it walks every bitmask, filters slot-valid subsets, and runs the
    plain simulator on each.
    """
    if len(pool) > 20:
        raise ValueError(f"pool of {len(pool)} items is too large to enumerate")
    base = char_stats if char_stats is not None else combat.player_base_stats(monster.difficulty_level)
    items = sorted(pool, key=lambda i: i.id)
    best_size: int | None = None
    winners: list[tuple[str, ...]] = []
    for mask in range(1 << len(items)):
        subset = [items[i] for i in range(len(items)) if mask >> i & 1]
        if best_size is not None and len(subset) > best_size:
            continue
        used: dict[str, int] = {}
        valid = True
        for it in subset:
            used[it.slot] = used.get(it.slot, 0) + 1
            if used[it.slot] > SLOT_CAPACITY[it.slot]:
                valid = False
                break
        if not valid:
            continue
        total = base
        for it in subset:
            total = total + it.stats
        if combat.simulate(total, monster.stats).player_won:
            size = len(subset)
            if best_size is None or size < best_size:
                best_size = size
                winners = []
            if size == best_size:
                winners.append(tuple(sorted(it.id for it in subset)))
    by_id = {it.id: it for it in items}
    return [GearSet.from_items([by_id[i] for i in ids]) for ids in sorted(winners)]


# ---------------------------------------------------------------------------
# partition, auxiliary, noise


@dataclass(frozen=True)
class PartitionPolicy:
    missing_count: int
    seed: int


def partition_gear(gear: GearSet, policy: PartitionPolicy) -> tuple[list[str], list[str]]:
    """Split a winning set into pre-equipped and to-be-acquired item ids.

    The split is a seeded shuffle so identical policies reproduce identical
    tasks. A nontrivial task needs at least one missing item.
    """
    ids = sorted(gear.item_ids)
    if policy.missing_count < 1:
        raise PartitionError("a nontrivial task needs missing_count >= 1")
    if policy.missing_count > len(ids):
        raise PartitionError(
            f"missing_count {policy.missing_count} exceeds gear size {len(ids)}")
    shuffled = SeededShuffler(policy.seed).shuffle(ids)
    missing = sorted(shuffled[:policy.missing_count])
    equipped = sorted(shuffled[policy.missing_count:])
    return equipped, missing


@dataclass(frozen=True)
class TaskDraft:
    """The slice of a task under construction that gear validation needs."""

    level: int
    target_id: str | None  # None for craft-only tasks (no forbidden fight)
    gear_ids: tuple[str, ...]  # the chosen minimal winning set
    equipped_ids: tuple[str, ...]
    scenario_monster_ids: tuple[str, ...]  # drop sources in the crafting closure


def auxiliary_items(world: WorldDef, draft: TaskDraft, max_size: int = 3) -> list[Item]:
    """Smallest extra gear letting the starting loadout beat every scenario
    monster while the target stays out of reach.

    Candidates are obtainable non-solution items ordered by level; subsets up
    to ``max_size`` are tried in that order and the first separating set wins.
    """
    base = combat.player_base_stats(draft.level)
    target = world.monsters[draft.target_id] if draft.target_id else None
    scenario = [world.monsters[mid] for mid in draft.scenario_monster_ids]
    equipped = [world.items[i] for i in draft.equipped_ids]

    def separates(aux: tuple[Item, ...]) -> bool:
        try:
            gear = GearSet.from_items(list(equipped) + list(aux))
        except combat.GearError:
            return False
        total = base + gear.stat_sum()
        if target is not None and combat.player_wins(total, target.stats):
            return False
        return all(combat.player_wins(total, m.stats) for m in scenario)

    candidates = sorted(
        (it for it in items_at_or_below_level(world, draft.level)
         if it.id in world.obtainable_ids and it.id not in draft.gear_ids),
        key=lambda it: (it.level, it.id),
    )
    for size in range(0, max_size + 1):
        for aux in itertools.combinations(candidates, size):
            if separates(aux):
                return list(aux)
    raise AuxiliaryInfeasibleError(
        f"no auxiliary set of size <= {max_size} separates {draft.target_id}")


def noise_items(world: WorldDef, level: int, env_item_ids: set[str],
                missing_closure_ids: set[str], k: int, seed: int) -> list[Item]:
    """Up to k plausible distractor gear items for a task.

    Each passes the level filter, carries a recipe, is impossible to craft
    (some prerequisite has no acquisition route), and needs at least one
    ingredient outside both the current environment excerpt and the closure
    of the missing items.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    eligible = []
    for item in items_at_or_below_level(world, level):
        if item.recipe is None or item.id in env_item_ids:
            continue
        if item.id in world.obtainable_ids:
            continue  # actually craftable: a real solution item, not noise
        ing_ids = {ing for ing, _q in item.recipe.ingredients}
        if not (ing_ids - env_item_ids) or not (ing_ids - missing_closure_ids):
            continue
        eligible.append(item)
    picked = SeededShuffler(seed).shuffle(sorted(eligible, key=lambda i: i.id))[:k]
    return sorted(picked, key=lambda i: i.id)

"""Acceptance gate: one test per shipping criterion, tolerances pinned.

Each test prints a single ACCEPTANCE line so the gate's status is readable
straight from the pytest output (-s). Every criterion runs against the
shipped reference world; the toy world only supplies the stochastic-drop
fixture and the brute-force oracle pools.
"""
import json
import time

import numpy as np
import pytest

from questforge import combat, executor
from questforge.combat import GearSet
from questforge.crafting import dependency_closure
from questforge.dsl import ActionCall, PlanError, PlanProgram, flatten, parse, unparse
from questforge.evaluator import build_report, evaluate_source
from questforge.executor import init_state, run, step
from questforge.gear import exhaustive_minimal_gear, minimal_winning_gear
from questforge.prompts import render_prompt, token_estimate
from questforge.taskgen import (
    TaskOptions,
    canonical_solution,
    dumps_task,
    generate_combat_task,
    generate_craft_task,
    generate_suite,
)

from test_gear import random_monster_stats, random_pool

PASS = "ACCEPTANCE {name}: PASS ({detail})"


@pytest.fixture(scope="module")
def extended_suite(reference_world):
    """Leveling + noise variant suite (smaller: the plans are long)."""
    return generate_suite(reference_world, {
        "per_bracket_count": 2, "seed": 99,
        "mechanics": {"leveling": True, "noise_count": 2},
    })


def test_gear_minimality(reference_world, reference_suite):
    """Win with the chosen set; lose after removing any single item."""
    tasks, _manifest = reference_suite
    combat_tasks = [t for t in tasks if t["kind"] == "combat"]
    started = time.perf_counter()
    violations = 0
    for task in combat_tasks:
        monster = reference_world.monsters[task["target"]]
        base = combat.player_base_stats(monster.difficulty_level)
        gear_ids = sorted(task["equipped"] + task["missing"])
        gear = GearSet.from_ids(reference_world, gear_ids)
        if not combat.simulate(base + gear.stat_sum(), monster.stats).player_won:
            violations += 1
            continue
        for removed in gear_ids:
            rest = GearSet.from_ids(reference_world,
                                    [i for i in gear_ids if i != removed])
            if combat.simulate(base + rest.stat_sum(), monster.stats).player_won:
                violations += 1
                break
    elapsed = time.perf_counter() - started
    assert combat_tasks, "suite contains no combat tasks"
    assert violations == 0
    assert elapsed < 120.0
    print(PASS.format(name="gear-minimality",
                      detail=f"{len(combat_tasks)} combat tasks, {elapsed:.1f}s"))


def test_oracle_equivalence(toy_world):
    """Search equals brute-force enumeration on >= 50 small pools."""
    rng = np.random.default_rng(98765)
    started = time.perf_counter()
    pools = 0
    mismatches = 0
    monster_proto = toy_world.monsters["goblin"]
    while pools < 50:
        pool = random_pool(rng, int(rng.integers(4, 13)))
        monster = type(monster_proto)(
            id="rnd", stats=random_monster_stats(rng), difficulty_level=1,
            drops=(), location_id=monster_proto.location_id)
        fast = [g.item_ids for g in minimal_winning_gear(toy_world, monster, pool=pool)]
        slow = [g.item_ids for g in exhaustive_minimal_gear(toy_world, monster, pool)]
        if fast != slow:
            mismatches += 1
        pools += 1
    elapsed = time.perf_counter() - started
    assert mismatches == 0
    assert elapsed < 60.0
    print(PASS.format(name="oracle-equivalence",
                      detail=f"{pools} pools, {elapsed:.1f}s"))


def test_auxiliary_indicator(reference_world, reference_suite):
    """Starting loadout beats a scenario monster iff it is not the target."""
    tasks, _manifest = reference_suite
    violations = 0
    checked = 0
    for task in tasks:
        level = task["character"]["level"]
        start = GearSet.from_ids(reference_world, task["character"]["equipment"])
        stats = combat.player_base_stats(level) + start.stat_sum()
        for mon_entry in task["environment"]["monsters"]:
            monster = reference_world.monsters[mon_entry["id"]]
            won = combat.player_wins(stats, monster.stats)
            expected = mon_entry["id"] != task["target"] if task["kind"] == "combat" else True
            if won != expected:
                violations += 1
            checked += 1
    assert checked > 0 and violations == 0
    print(PASS.format(name="auxiliary-indicator",
                      detail=f"{checked} monster checks over {len(tasks)} tasks"))


def test_difficulty_formula(reference_world, reference_suite):
    """Stored difficulty equals missing-count plus per-item closure steps."""
    tasks, _manifest = reference_suite
    for task in tasks:
        recomputed = len(task["missing"])
        for item_id in task["missing"]:
            closure = dependency_closure(reference_world, item_id, 1)
            recomputed += (sum(q for _n, q in closure.gather_steps)
                           + sum(k for _m, k in closure.fight_steps)
                           + len(closure.craft_steps))
        assert recomputed == task["difficulty"], task["id"]
        assert 2 <= task["difficulty"] <= 97, task["id"]
    print(PASS.format(name="difficulty-formula", detail=f"{len(tasks)} tasks in [2, 97]"))


def test_suite_shape(reference_suite):
    """180 tasks across 9 non-empty brackets; prompts inside the token band."""
    tasks, manifest = reference_suite
    assert len(tasks) == 180
    assert manifest["shortfalls"] == {}
    counts = manifest["bracket_counts"]
    assert set(counts) == {str(b) for b in range(1, 10)}
    assert all(v == 20 for v in counts.values())
    low, high = 800, 13200  # 1k..11k whitespace-token proxy with 20% slack
    sizes = [token_estimate(render_prompt(t)) for t in tasks]
    assert min(sizes) >= low and max(sizes) <= high
    print(PASS.format(name="suite-shape",
                      detail=f"180 tasks, prompts {min(sizes)}..{max(sizes)} tokens"))


def test_canonical_solvability(reference_world, reference_suite, extended_suite):
    """Canonical plans succeed with full progress, noise crafts always fail."""
    base_tasks, _ = reference_suite
    ext_tasks, ext_manifest = extended_suite
    assert sum(ext_manifest["bracket_counts"].values()) >= 16
    checked = 0
    for task in base_tasks + ext_tasks:
        plan = canonical_solution(task)
        log = run(reference_world, task, plan)
        report = build_report(task, plan, log)
        assert report.success and report.progress == 100.0, task["id"]
        assert log.summary["failed_actions"] == 0, task["id"]
        checked += 1

    # every injected noise item stays uncraftable even with a stuffed inventory
    noise_checked = 0
    for task in ext_tasks:
        if not task["noise_items"]:
            continue
        state = init_state(reference_world, task)
        state.inventory = {i: 99 for i in reference_world.obtainable_ids}
        for prof in state.skills:
            state.skills[prof] = [99, 0]
        for noise_id in task["noise_items"]:
            recipe = reference_world.recipes[noise_id]
            loc = reference_world.workshop_location(recipe.workshop)
            state.position = loc.coords
            event = step(state, ActionCall("craft", (noise_id, 1)))
            assert not event.ok and event.reason == "missing_ingredients", noise_id
            noise_checked += 1
    assert noise_checked > 0
    print(PASS.format(name="canonical-solvability",
                      detail=f"{checked} tasks, {noise_checked} noise crafts rejected"))


def test_determinism(reference_world, reference_suite, toy_world):
    """Equal seeds: identical bytes. Different seeds: stochastic drops differ."""
    tasks, manifest = reference_suite
    spec = {"per_bracket_count": 20, "seed": 42}
    again_tasks, again_manifest = generate_suite(reference_world, spec)
    assert json.dumps(manifest, sort_keys=True) == json.dumps(again_manifest, sort_keys=True)
    assert len(tasks) == len(again_tasks)
    for a, b in zip(tasks, again_tasks):
        assert dumps_task(a) == dumps_task(b)
        assert render_prompt(a) == render_prompt(b)

    sample = [tasks[0], tasks[45], tasks[179]]
    for task in sample:
        plan = canonical_solution(task)
        first = run(reference_world, task, plan).to_jsonl()
        second = run(reference_world, task, plan).to_jsonl()
        assert first == second

    # stochastic mode on the toy world's 0.5-rate drop
    drop_task = generate_craft_task(toy_world, "ring", TaskOptions(seed=3))
    program = parse("move(2, 1)\n" + "rest()\nfight()\n" * 10)
    log_a1 = run(toy_world, drop_task, program, mode="stochastic", seed=1).to_jsonl()
    log_a2 = run(toy_world, drop_task, program, mode="stochastic", seed=1).to_jsonl()
    log_b = run(toy_world, drop_task, program, mode="stochastic", seed=2).to_jsonl()
    assert log_a1 == log_a2
    drops = []
    for text in (log_a1, log_b):
        events = [json.loads(line) for line in text.splitlines()[:-1]]
        drops.append([e["deltas"].get("inventory", {}).get("ore", 0) for e in events])
    assert drops[0] != drops[1], "seeds 1 and 2 must differ in at least one drop"
    print(PASS.format(name="determinism", detail="tasks, prompts, logs byte-stable"))


def test_dsl_robustness(reference_suite):
    """No crash on 1e5 random byte strings and 1e3 mutated plans; round-trips hold."""
    rng = np.random.default_rng(24601)
    started = time.perf_counter()
    for _ in range(100_000):
        blob = rng.bytes(int(rng.integers(0, 80)))
        try:
            parse(blob.decode("utf-8", errors="replace"))
        except PlanError:
            pass

    tasks, _ = reference_suite
    sources = [unparse(canonical_solution(t)) for t in tasks[:25]]
    for i in range(1_000):
        source = sources[i % len(sources)]
        raw = bytearray(source.encode())
        for _ in range(int(rng.integers(1, 4))):
            op = int(rng.integers(0, 3))
            pos = int(rng.integers(0, max(1, len(raw))))
            if op == 0 and raw:
                del raw[pos % len(raw)]
            elif op == 1:
                raw.insert(pos, int(rng.integers(32, 127)))
            elif raw:
                raw[pos % len(raw)] = int(rng.integers(32, 127))
        try:
            parse(bytes(raw).decode("utf-8", errors="replace"))
        except PlanError:
            pass

    from questforge.dsl import ForLoop

    def random_program(depth=0):
        statements = []
        for _ in range(int(rng.integers(1, 5))):
            if depth < 2 and rng.random() < 0.3:
                statements.append(ForLoop(int(rng.integers(1, 5)),
                                          tuple(random_program(depth + 1))))
            elif rng.random() < 0.5:
                statements.append(ActionCall("craft", (f"item_{int(rng.integers(0, 9))}",
                                                       int(rng.integers(1, 9)))))
            else:
                statements.append(ActionCall("gather"))
        return statements

    for _ in range(1_000):
        program = PlanProgram(tuple(random_program()))
        assert parse(unparse(program)) == program
    elapsed = time.perf_counter() - started
    print(PASS.format(name="dsl-robustness",
                      detail=f"1e5 fuzz + 1e3 mutations + 1e3 round-trips, {elapsed:.1f}s"))


def test_evaluator_partition(toy_world):
    """The five failure types reproduce their exact (high, exec, type) triples."""
    task = generate_combat_task(toy_world, "troll", TaskOptions(missing_count=3, seed=1))
    from test_evaluator import PLAN_GEAR_PLUS_EXEC, PLAN_ONLY_EXEC, PLAN_ONLY_GEAR

    canonical = unparse(canonical_solution(task))
    cases = [
        (canonical, lambda h, e, f: (h, e, f) == (0, 0, "none")),
        ("while True: gather()", lambda h, e, f: (h, e, f) == (0, 0, "invalid_code")),
        (PLAN_ONLY_GEAR, lambda h, e, f: (h, e, f) == (1, 0, "only_gear")),
        (PLAN_GEAR_PLUS_EXEC, lambda h, e, f: h == 1 and e >= 1 and f == "gear_plus_exec"),
        (PLAN_ONLY_EXEC, lambda h, e, f: h == 0 and e >= 1 and f == "only_exec"),
    ]
    for source, check in cases:
        _program, _log, report = evaluate_source(toy_world, task, source)
        triple = (report.high_level_missing_items, report.execution_errors,
                  report.failure_type)
        assert check(*triple), (source[:40], triple)
    print(PASS.format(name="evaluator-partition", detail="5/5 failure types exact"))

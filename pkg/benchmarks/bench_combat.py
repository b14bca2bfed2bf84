#!/usr/bin/env python3
"""Times the combat turn-loop backends and a full gear search on each.

The win-only kernel is the hot path of gear search (hundreds of thousands of
candidate evaluations per monster), so this is the number that justifies the
compiled extension. Run after `pip install -e .`:

    python3 benchmarks/bench_combat.py
"""
from __future__ import annotations

import importlib
import os
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))


def random_rows(rng, n):
    rows = np.zeros((n, 13), dtype=np.int64)
    rows[:, 0] = rng.integers(100, 600, n)  # hp
    rows[:, 1:5] = rng.integers(0, 90, (n, 4))  # attack
    rows[:, 5:9] = rng.integers(0, 40, (n, 4))  # dmg_amp
    rows[:, 9:13] = rng.integers(0, 60, (n, 4))  # resist
    return rows


def bench_kernel(kernel, rows, monster, repeats=5):
    out = np.zeros(len(rows), dtype=np.uint8)
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        kernel.wins_batch(rows, monster, 50, out)
        best = min(best, time.perf_counter() - started)
    return best, out


def main() -> int:
    rng = np.random.default_rng(7)
    n = 200_000
    rows = random_rows(rng, n)
    monster = random_rows(rng, 1)[0]

    from questforge import _turnloop_py

    results = {}
    try:
        from questforge import _turnloop  # type: ignore[attr-defined]

        results["compiled"], wins_c = bench_kernel(_turnloop, rows, monster)
    except ImportError:
        print("compiled kernel not built; run pip install -e . first")
        wins_c = None
    sample = rows[:4000]
    t_py, wins_p = bench_kernel(_turnloop_py, sample, monster)
    results["python"] = t_py * (n / len(sample))

    if wins_c is not None:
        assert wins_c[:len(sample)].tolist() == wins_p.tolist(), "backends disagree"

    print(f"win-only kernel over {n:,} candidate rows (best of 5):")
    for name, seconds in results.items():
        rate = n / seconds
        print(f"  {name:>8}: {seconds * 1e3:8.1f} ms  ({rate / 1e6:6.2f} M fights/s)")
    if "compiled" in results:
        print(f"  speedup: {results['python'] / results['compiled']:.0f}x")

    print("\nfull minimal-gear search, tier-9 target (ancient_dragon):")
    from questforge import bundled_world_path
    from questforge.world import load_world_dir

    world = load_world_dir(bundled_world_path("reference"))
    for backend in ("compiled", "python"):
        if backend == "python":
            os.environ["QUESTFORGE_PURE"] = "1"
        else:
            os.environ.pop("QUESTFORGE_PURE", None)
        for mod in ("questforge.combat", "questforge.gear"):
            importlib.reload(importlib.import_module(mod))
        from questforge.gear import minimal_winning_gear  # reloaded binding

        started = time.perf_counter()
        sets = minimal_winning_gear(world, world.monsters["ancient_dragon"])
        elapsed = time.perf_counter() - started
        print(f"  {backend:>8}: {elapsed:6.2f} s  ({len(sets)} minimal sets)")
    os.environ.pop("QUESTFORGE_PURE", None)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Operator command line: validate / generate / exec / score / analyze.

Every command is idempotent: identical inputs and flags produce byte-identical
outputs. Exit codes are stable: 0 scored/ok, 1 validation or data failure,
2 usage error. Plans are consumed from files (raw text or completion-record
JSON); nothing here touches the network.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import BUNDLED_WORLDS, bundled_world_path, evaluator, taskgen
from .executor import TaskWorldMismatch
from .prompts import render_prompt
from .world import load_world_dir, validate_bundle


def _resolve_world(arg: str) -> Path:
    if arg in BUNDLED_WORLDS:
        return bundled_world_path(arg)
    return Path(arg)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    report = validate_bundle(_resolve_world(args.world_dir))
    print(json.dumps(report.to_json(), indent=1, sort_keys=True))
    return 0 if report.ok else 1


def cmd_generate(args) -> int:
    world = load_world_dir(_resolve_world(args.world_dir))
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    if args.seed is not None:
        spec["seed"] = args.seed
    tasks, manifest = taskgen.generate_suite(world, spec)
    out = Path(args.out)
    for task in tasks:
        _write(out / "tasks" / f"{task['id']}.json", taskgen.dumps_task(task))
        _write(out / "prompts" / f"{task['id']}.txt", render_prompt(task))
    _write(out / "manifest.json", _dump_json(manifest))
    total = len(tasks)
    print(f"wrote {total} tasks to {out} "
          f"(shortfalls: {manifest['shortfalls'] or 'none'})")
    return 0


def _load_plan_text(args) -> tuple[str, dict | None]:
    if args.record:
        with open(args.record, "r", encoding="utf-8") as fh:
            record = json.load(fh)
        return record.get("text") or "", record.get("token_usage")
    with open(args.plan, "r", encoding="utf-8") as fh:
        return fh.read(), None


def cmd_exec(args) -> int:
    world = load_world_dir(_resolve_world(args.world_dir))
    with open(args.task, "r", encoding="utf-8") as fh:
        task = json.load(fh)
    source, token_usage = _load_plan_text(args)
    try:
        _program, log, report = evaluator.evaluate_source(
            world, task, source, mode=args.mode, seed=args.seed,
            token_usage=token_usage)
    except TaskWorldMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    _write(out / f"{task['id']}.log.jsonl", log.to_jsonl())
    _write(out / f"{task['id']}.report.json", _dump_json(report.to_json()))
    print(f"{task['id']}: success={report.success} progress={report.progress:.1f} "
          f"failure_type={report.failure_type}")
    return 0


def cmd_score(args) -> int:
    run_dir = Path(args.run_dir)
    paths = sorted(run_dir.glob("*.report.json"))
    if not paths:
        print(f"error: no *.report.json files in {run_dir}", file=sys.stderr)
        return 1
    reports = evaluator.load_reports(paths)
    if args.manifest:
        with open(args.manifest, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        wanted = {t["id"] for t in manifest["tasks"]}
        got = {r.task_id for r in reports}
        if not got <= wanted:
            print(f"error: reports not in manifest: {sorted(got - wanted)[:5]}",
                  file=sys.stderr)
            return 1
    summary = evaluator.aggregate(reports)
    _write(run_dir / "summary.json", _dump_json(summary.to_json()))
    _write(run_dir / "summary.txt", summary.render_table())
    print(summary.render_table(), end="")
    return 0


def cmd_analyze(args) -> int:
    run_dir = Path(args.run_dir)
    paths = sorted(run_dir.glob("*.report.json"))
    if not paths:
        print(f"error: no *.report.json files in {run_dir}", file=sys.stderr)
        return 1
    reports = evaluator.load_reports(paths)
    counts: dict[str, int] = {ftype: 0 for ftype in evaluator.FAILURE_TYPES}
    for rep in reports:
        counts[rep.failure_type] += 1
    n = len(reports)
    breakdown = {
        "tasks": n,
        "failure_counts": counts,
        "failure_pct": {k: round(100.0 * v / n, 2) for k, v in counts.items()},
        "reports": [
            {"task_id": r.task_id, "failure_type": r.failure_type,
             "high_level_missing_items": r.high_level_missing_items,
             "execution_errors": r.execution_errors,
             "redundant_steps": r.redundant_steps,
             "invalid_reason": r.invalid_reason}
            for r in sorted(reports, key=lambda r: r.task_id)
        ],
    }
    _write(run_dir / "analysis.json", _dump_json(breakdown))
    print(_dump_json({"tasks": n, "failure_pct": breakdown["failure_pct"]}), end="")
    return 0


def _exec_one(job) -> str:
    """Worker for parallel exec: (world_dir, task_file, plan_file, mode, seed, out)."""
    world_dir, task_file, plan_file, mode, seed, out = job
    ns = argparse.Namespace(world_dir=world_dir, task=task_file, plan=plan_file,
                            record=None, mode=mode, seed=seed, out=out)
    cmd_exec(ns)
    return task_file


def cmd_exec_batch(args) -> int:
    task_files = sorted(Path(args.tasks).glob("*.json"))
    plan_dir = Path(args.plans)
    jobs = []
    for task_file in task_files:
        plan_file = plan_dir / f"{task_file.stem}.py"
        if not plan_file.exists():
            plan_file = plan_dir / f"{task_file.stem}.txt"
        if not plan_file.exists():
            continue
        jobs.append((args.world_dir, str(task_file), str(plan_file),
                     args.mode, args.seed, args.out))
    if not jobs:
        print("error: no (task, plan) pairs found", file=sys.stderr)
        return 1
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            list(pool.map(_exec_one, jobs))
    else:
        for job in jobs:
            _exec_one(job)
    print(f"executed {len(jobs)} plans")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="questforge",
        description="Generate, execute and score RPG planning tasks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a world bundle directory")
    p.add_argument("world_dir", help="world directory or bundled name (toy, reference)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="generate a task suite")
    p.add_argument("world_dir")
    p.add_argument("--spec", required=True, help="suite spec JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override spec seed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("exec", help="execute one plan against one task")
    p.add_argument("world_dir")
    p.add_argument("--task", required=True, help="task JSON file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--plan", help="plan source file (raw text or fenced)")
    group.add_argument("--record", help="completion record JSON file")
    p.add_argument("--mode", choices=["deterministic", "stochastic"],
                   default="deterministic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("exec-batch", help="execute a directory of plans")
    p.add_argument("world_dir")
    p.add_argument("--tasks", required=True, help="directory of task JSON files")
    p.add_argument("--plans", required=True,
                   help="directory of <task_id>.py/.txt plan files")
    p.add_argument("--mode", choices=["deterministic", "stochastic"],
                   default="deterministic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exec_batch)

    p = sub.add_parser("score", help="aggregate reports in a run directory")
    p.add_argument("run_dir")
    p.add_argument("--manifest", default=None,
                   help="suite manifest to cross-check task ids against")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("analyze", help="dump the error-taxonomy breakdown")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

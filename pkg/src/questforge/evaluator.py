"""Scores executed plans and classifies failures.

Two metrics: Success (goal achieved) and Progress (share of canonical
milestones reached, 100 on success). Failures are partitioned into four
causes: gear-selection-only, gear-plus-execution, execution-only, and invalid
code. A lost fight against the target while the plan never equipped the full
gear set is counted against gear selection, not execution: the loss is the
consequence of the missing items, not a separate mistake.

Everything here is a pure function of (task, program, log); no world access
is needed, so reports can be recomputed offline from run artifacts.
"""
from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Optional

from .dsl import PlanError, PlanProgram, extract_code, flatten, parse
from .executor import ExecutionLog

FAILURE_TYPES = ("none", "only_gear", "gear_plus_exec", "only_exec", "invalid_code")


@dataclass
class EvalReport:
    task_id: str
    success: bool
    progress: float
    high_level_missing_items: int
    execution_errors: int
    failure_type: str
    redundant_steps: int = 0
    bracket: Optional[int] = None
    difficulty: Optional[int] = None
    token_usage: Optional[dict] = None
    invalid_reason: Optional[dict] = None

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "success": self.success,
            "progress": self.progress,
            "error_counts": {
                "high_level_missing_items": self.high_level_missing_items,
                "execution_errors": self.execution_errors,
            },
            "failure_type": self.failure_type,
            "redundant_steps": self.redundant_steps,
            "bracket": self.bracket,
            "difficulty": self.difficulty,
            "token_usage": self.token_usage,
            "invalid_reason": self.invalid_reason,
        }

    @classmethod
    def from_json(cls, data: dict) -> "EvalReport":
        return cls(
            task_id=data["task_id"], success=data["success"], progress=data["progress"],
            high_level_missing_items=data["error_counts"]["high_level_missing_items"],
            execution_errors=data["error_counts"]["execution_errors"],
            failure_type=data["failure_type"],
            redundant_steps=data.get("redundant_steps", 0),
            bracket=data.get("bracket"), difficulty=data.get("difficulty"),
            token_usage=data.get("token_usage"), invalid_reason=data.get("invalid_reason"),
        )


# ---------------------------------------------------------------------------
# event bookkeeping


class _Tally:
    def __init__(self, log: ExecutionLog):
        self.gathered: dict[str, int] = {}
        self.crafted: dict[str, int] = {}
        self.defeated: dict[str, int] = {}
        self.recycled: dict[str, int] = {}
        self.equipped_ever: set[str] = set()
        self.inventory: dict[str, int] = {}
        self.worn: set[str] = set()
        self.failed_events = []
        self.position_at_event = []

        pos = None
        for event in log.events:
            self.position_at_event.append(pos)
            if not event.ok:
                self.failed_events.append(event)
                continue
            name = event.action.name
            deltas = event.deltas
            if "position" in deltas:
                pos = tuple(deltas["position"])
                self.position_at_event[-1] = pos
            for item_id, delta in deltas.get("inventory", {}).items():
                self.inventory[item_id] = self.inventory.get(item_id, 0) + delta
            if name == "gather":
                for item_id, delta in deltas.get("inventory", {}).items():
                    self.gathered[item_id] = self.gathered.get(item_id, 0) + delta
            elif name == "craft":
                item_id, times = event.action.args
                self.crafted[item_id] = self.crafted.get(item_id, 0) + times
            elif name == "recycle":
                item_id, times = event.action.args
                self.recycled[item_id] = self.recycled.get(item_id, 0) + times
            elif name == "equip":
                self.equipped_ever.add(event.action.args[0])
                self.worn.add(event.action.args[0])
            elif name == "unequip":
                un = deltas.get("equipment", {}).get("unequip")
                if un:
                    self.worn.discard(un[1])
            for monster_id, delta in deltas.get("defeated", {}).items():
                self.defeated[monster_id] = self.defeated.get(monster_id, 0) + delta


def success(log: ExecutionLog, task: dict) -> bool:
    """Goal achieved at termination, recomputed from the event stream."""
    tally = _Tally(log)
    if task["kind"] == "combat":
        return tally.defeated.get(task["target"], 0) >= 1
    return tally.inventory.get(task["target"], 0) >= 1 or task["target"] in tally.worn


def _milestone_achieved(milestone: dict, tally: _Tally, goal_met: bool) -> bool:
    kind, key, qty = milestone["type"], milestone["key"], milestone["qty"]
    if kind == "gather":
        return tally.gathered.get(key, 0) >= qty
    if kind == "craft":
        return tally.crafted.get(key, 0) >= qty
    if kind == "defeat":
        return tally.defeated.get(key, 0) >= qty
    if kind == "equip":
        return key in tally.equipped_ever
    if kind == "recycle":
        return tally.recycled.get(key, 0) >= qty
    if kind == "goal":
        return goal_met
    raise ValueError(f"unknown milestone type '{kind}'")


def progress_score(log: ExecutionLog, task: dict) -> float:
    """Percent of canonical milestones achieved; a successful run scores 100."""
    goal_met = success(log, task)
    if goal_met:
        return 100.0
    milestones = task["milestones"]
    if not milestones:
        return 0.0
    tally = _Tally(log)
    achieved = sum(1 for m in milestones if _milestone_achieved(m, tally, goal_met))
    return 100.0 * achieved / len(milestones)


# ---------------------------------------------------------------------------
# error classification


def _planned_actions(program: PlanProgram) -> tuple[set[str], set[str]]:
    """(equipped item ids, crafted item ids) appearing anywhere in the plan."""
    equips, crafts = set(), set()
    for action in flatten(program):
        if action.name == "equip":
            equips.add(action.args[0])
        elif action.name == "craft":
            crafts.add(action.args[0])
    return equips, crafts


def _target_location(task: dict):
    for mon in task["environment"]["monsters"]:
        if mon["id"] == task["target"]:
            return tuple(mon["location"])
    return None


def classify_errors(task: dict, program: Optional[PlanProgram], log: ExecutionLog,
                    parse_error: Optional[PlanError] = None) -> tuple[int, int, str]:
    """(high_level_missing, execution_errors, failure_type) for one run."""
    if parse_error is not None or program is None:
        return 0, 0, "invalid_code"

    goal_met = success(log, task)
    tally = _Tally(log)
    plan_equips, plan_crafts = _planned_actions(program)

    high = 0
    if task["kind"] == "combat":
        equipped_start = set(task["equipped"])
        alternatives = task.get("gear_alternatives") or [task["missing"]]
        high = min(
            len((set(alt) - equipped_start) - plan_equips) for alt in alternatives
        )

    target_loc = _target_location(task) if task["kind"] == "combat" else None
    exec_errors = 0
    for idx, event in enumerate(log.events):
        if event.ok:
            continue
        if (high > 0 and event.action.name == "fight" and event.reason == "combat_loss"
                and tally.position_at_event[idx] == target_loc):
            continue  # losing to the target without the gear is the gear error
        exec_errors += 1

    # quantity shortfalls, attributed per pursued missing item so that a pure
    # gear omission never bleeds into the execution column
    if task["kind"] == "combat":
        pursued = {m for m in task["missing"] if m in plan_equips or m in plan_crafts}
    else:
        pursued = set(task["missing"])
    needed: dict[tuple[str, str], int] = {}
    for item_id in sorted(pursued):
        reqs = task.get("missing_requirements", {}).get(item_id, {})
        for kind in ("gather", "defeat", "craft"):
            for key, qty in reqs.get(kind, {}).items():
                pair = (kind, key)
                needed[pair] = max(needed.get(pair, 0), qty) if kind == "defeat" \
                    else needed.get(pair, 0) + qty
    for (kind, key), qty in sorted(needed.items()):
        got = {"gather": tally.gathered, "defeat": tally.defeated,
               "craft": tally.crafted}[kind].get(key, 0)
        if kind in ("gather", "defeat") and 0 < got < qty:
            exec_errors += 1
        elif kind == "craft" and got < qty and key in plan_crafts:
            exec_errors += 1

    if not goal_met and high == 0 and exec_errors == 0:
        exec_errors = 1  # clean log, full gear, goal still missed: a planning slip

    if goal_met:
        failure = "none"
    elif high > 0 and exec_errors == 0:
        failure = "only_gear"
    elif high > 0:
        failure = "gear_plus_exec"
    else:
        failure = "only_exec"
    return high, exec_errors, failure


def build_report(task: dict, program: Optional[PlanProgram], log: ExecutionLog,
                 parse_error: Optional[PlanError] = None,
                 token_usage: Optional[dict] = None) -> EvalReport:
    high, exec_errors, failure = classify_errors(task, program, log, parse_error)
    if failure == "invalid_code":
        goal_met, progress, redundant = False, 0.0, 0
    else:
        goal_met = success(log, task)
        progress = progress_score(log, task)
        redundant = _redundant_steps(task, log)
    return EvalReport(
        task_id=task["id"], success=goal_met, progress=progress,
        high_level_missing_items=high, execution_errors=exec_errors,
        failure_type=failure, redundant_steps=redundant,
        bracket=task.get("bracket"), difficulty=task.get("difficulty"),
        token_usage=token_usage,
        invalid_reason=parse_error.to_json() if parse_error else None,
    )


def _redundant_steps(task: dict, log: ExecutionLog) -> int:
    tally = _Tally(log)
    redundant = 0
    quotas = {(m["type"], m["key"]): m["qty"] for m in task["milestones"]
              if m["type"] in ("gather", "craft", "defeat")}
    for (kind, key), qty in quotas.items():
        have = {"gather": tally.gathered, "craft": tally.crafted,
                "defeat": tally.defeated}[kind].get(key, 0)
        if have > qty:
            redundant += have - qty
    return redundant


def evaluate_source(world, task: dict, source_text: str, mode: str = "deterministic",
                    seed: int = 0, token_usage: Optional[dict] = None):
    """Full scoring pipeline for raw model output: extract, parse, run, report."""
    from . import executor as _executor  # local import keeps module deps one-way

    code = extract_code(source_text)
    try:
        program = parse(code)
        log = _executor.run(world, task, program, mode=mode, seed=seed)
        report = build_report(task, program, log, token_usage=token_usage)
        return program, log, report
    except PlanError as err:
        log = ExecutionLog(events=[], summary={
            "task_id": task["id"], "kind": task["kind"], "target": task["target"],
            "target_achieved": False, "actions": 0, "ok_actions": 0,
            "failed_actions": 0, "final_position": task["character"]["position"],
            "final_hp": 0, "mode": mode, "seed": seed,
        })
        report = build_report(task, None, log, parse_error=err, token_usage=token_usage)
        return None, log, report


# ---------------------------------------------------------------------------
# aggregation


def _mean_sd(values: list[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    mean = statistics.fmean(values)
    sd = statistics.pstdev(values) if len(values) > 1 else 0.0
    return mean, sd


@dataclass
class SuiteSummary:
    overall: dict
    per_bracket: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"overall": self.overall, "per_bracket": self.per_bracket}

    def render_table(self) -> str:
        lines = []
        header = (f"{'bracket':>8} {'n':>4} {'succ%':>7} {'progress':>16} "
                  f"{'tokens':>16}")
        lines.append(header)
        lines.append("-" * len(header))

        def fmt_row(label, row):
            prog = f"{row['progress_mean']:.1f} ± {row['progress_sd']:.1f}"
            tok = ("-" if row["tokens_mean"] is None
                   else f"{row['tokens_mean']:.0f} ± {row['tokens_sd']:.0f}")
            return (f"{label:>8} {row['n']:>4} {row['success_pct']:>7.1f} "
                    f"{prog:>16} {tok:>16}")

        for bracket in sorted(self.per_bracket, key=int):
            lines.append(fmt_row(bracket, self.per_bracket[bracket]))
        lines.append(fmt_row("all", self.overall))
        lines.append("")
        ov = self.overall
        lines.append("failure types (% of all tasks): "
                     f"failed={ov['failed_pct']:.1f} only_gear={ov['only_gear_pct']:.1f} "
                     f"gear+exec={ov['gear_plus_exec_pct']:.1f} "
                     f"only_exec={ov['only_exec_pct']:.1f} "
                     f"invalid_code={ov['invalid_code_pct']:.1f}")
        lines.append("errors per valid-code task (mean ± sd): "
                     f"high-level={ov['high_level_mean']:.2f} ± {ov['high_level_sd']:.2f}, "
                     f"execution={ov['execution_mean']:.2f} ± {ov['execution_sd']:.2f}")
        return "\n".join(lines) + "\n"


def aggregate(reports: list[EvalReport]) -> SuiteSummary:
    """Suite-level statistics.

    Overall progress/token SDs are computed across per-bracket means (not
    across raw tasks); per-bracket SDs are across that bracket's tasks.
    Aggregation is order-insensitive.
    """
    if not reports:
        raise ValueError("need at least one report")
    reports = sorted(reports, key=lambda r: r.task_id)

    def bucket_stats(group: list[EvalReport]) -> dict:
        progress = [r.progress for r in group]
        tokens = [r.token_usage["total"] for r in group
                  if r.token_usage and "total" in r.token_usage]
        p_mean, p_sd = _mean_sd(progress)
        t_mean, t_sd = _mean_sd(tokens) if tokens else (None, None)
        out = {
            "n": len(group),
            "success_pct": 100.0 * sum(r.success for r in group) / len(group),
            "progress_mean": p_mean, "progress_sd": p_sd,
            "tokens_mean": t_mean, "tokens_sd": t_sd if tokens else None,
        }
        return out

    by_bracket: dict[str, list[EvalReport]] = {}
    for r in reports:
        if r.bracket is not None:
            by_bracket.setdefault(str(r.bracket), []).append(r)
    per_bracket = {b: bucket_stats(group) for b, group in sorted(by_bracket.items())}

    overall = bucket_stats(reports)
    if len(per_bracket) > 1:
        bracket_prog_means = [row["progress_mean"] for row in per_bracket.values()]
        overall["progress_mean"], overall["progress_sd"] = _mean_sd(bracket_prog_means)
        token_means = [row["tokens_mean"] for row in per_bracket.values()
                       if row["tokens_mean"] is not None]
        if token_means:
            overall["tokens_mean"], overall["tokens_sd"] = _mean_sd(token_means)

    n = len(reports)
    for ftype in FAILURE_TYPES[1:]:
        overall[f"{ftype}_pct"] = 100.0 * sum(r.failure_type == ftype for r in reports) / n
    overall["failed_pct"] = 100.0 * sum(not r.success for r in reports) / n

    valid = [r for r in reports if r.failure_type != "invalid_code"]
    high_mean, high_sd = _mean_sd([float(r.high_level_missing_items) for r in valid])
    exec_mean, exec_sd = _mean_sd([float(r.execution_errors) for r in valid])
    overall["high_level_mean"], overall["high_level_sd"] = high_mean, high_sd
    overall["execution_mean"], overall["execution_sd"] = exec_mean, exec_sd

    return SuiteSummary(overall=overall, per_bracket=per_bracket)


def load_reports(paths) -> list[EvalReport]:
    out = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            out.append(EvalReport.from_json(json.load(fh)))
    return out

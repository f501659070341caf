"""Task definitions, trial adjudication, logging, and summary statistics.

Adjudication follows the study's rules: a run succeeds when the rod is
extruded through the trocar within the time limit with no disqualifying
event first; failure reasons form a fixed precedence order. Summaries use
sample standard deviation and nearest-integer success rates.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

SCHEMA_VERSION = 1

TLX_DIMENSIONS = ("mental", "physical", "temporal", "performance", "effort", "frustration")


class LogFormatError(ValueError):
    """A JSONL log line violates the schema; message carries the line number."""


class FailureReason(Enum):
    CORNEA_CONTACT = "cornea_contact"
    EXCESSIVE_DEFORMATION = "excessive_deformation"
    JOINT_LIMIT = "joint_limit"
    OPERATOR_ABORT = "operator_abort"
    TIMEOUT = "timeout"
    BLOCKED_EXTRUSION = "blocked_extrusion"


# Fixed precedence when several disqualifiers coexist (highest first).
FAILURE_PRECEDENCE = (
    FailureReason.CORNEA_CONTACT,
    FailureReason.EXCESSIVE_DEFORMATION,
    FailureReason.JOINT_LIMIT,
    FailureReason.BLOCKED_EXTRUSION,
    FailureReason.OPERATOR_ABORT,
    FailureReason.TIMEOUT,
)


@dataclass(frozen=True)
class TaskSpec:
    """One of the three docking tasks.

    Task 1 starts from the trial start pose under co-manipulation; tasks 2/3
    start from the handover pose (~3 cm short of the trocar) under
    teleoperation; only task 3 enables the tip camera.
    """

    task_id: int
    start: str = "trial_start"  # "trial_start" | "handover"
    handover_distance: float = 0.03
    camera_enabled: bool = False
    time_limit: float = 120.0

    def __post_init__(self):
        if self.task_id not in (1, 2, 3):
            raise ValueError(f"task_id must be 1, 2 or 3, got {self.task_id}")
        if self.task_id == 1 and self.start != "trial_start":
            raise ValueError("task 1 starts from the trial start pose")
        if self.task_id in (2, 3) and self.start != "handover":
            raise ValueError("tasks 2 and 3 start from the handover pose")
        if self.camera_enabled != (self.task_id == 3):
            raise ValueError("the tip camera is enabled exactly for task 3")
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")

    @classmethod
    def for_task(cls, task_id: int, time_limit: float = 120.0, handover_distance: float = 0.03) -> "TaskSpec":
        return cls(
            task_id=task_id,
            start="trial_start" if task_id == 1 else "handover",
            handover_distance=handover_distance,
            camera_enabled=task_id == 3,
            time_limit=time_limit,
        )


@dataclass(frozen=True)
class TrialRecord:
    task_id: int
    participant_id: str
    attempt_index: int
    duration: float
    success: bool
    failure_reason: Optional[str] = None
    collision_count: int = 0
    camera_view_fraction: float = 0.0
    event_log_ref: Optional[str] = None
    notes: str = ""
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.success and self.failure_reason is not None:
            raise ValueError("a successful record cannot carry a failure reason")
        if not self.success and self.failure_reason is None:
            raise ValueError("a failed record must carry a failure reason")
        if self.failure_reason is not None:
            FailureReason(self.failure_reason)
        if self.collision_count < 0:
            raise ValueError("collision count must be >= 0")
        if not 0.0 <= self.camera_view_fraction <= 1.0:
            raise ValueError("camera view fraction must be in [0, 1]")


@dataclass(frozen=True)
class TlxRecord:
    participant_id: str
    task_id: int
    mental: float
    physical: float
    temporal: float
    performance: float
    effort: float
    frustration: float
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        for dim in TLX_DIMENSIONS:
            v = getattr(self, dim)
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"TLX scale {dim} must be in [0, 100], got {v}")


@dataclass(frozen=True)
class TaskSummary:
    task_id: int
    attempts: int
    successes: int
    mean_time: Optional[float]
    sd_time: Optional[float]
    success_rate_pct: Optional[int]
    collisions: int
    tlx_means: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SummaryReport:
    tasks: tuple = ()
    included_attempts: int = 0
    total_attempts: int = 0


def adjudicate(events, task: TaskSpec):
    """Decide a trial's outcome from its ordered event log.

    Returns (outcome, duration) with outcome either the string "success" or a
    FailureReason. Success requires an inserted-extrusion event within the
    time limit with no disqualifying event before it; a joint-limit failure
    requires a limit event followed by an abort or timeout.
    """
    limit_seen = False
    terminal = None  # (kind, time)
    for i, e in enumerate(events):
        if not isinstance(e, dict) or "type" not in e or "time" not in e:
            raise LogFormatError(f"event {i}: missing required keys 'type'/'time'")
        t = float(e["time"])
        if t > task.time_limit:
            break
        kind = e["type"]
        if kind == "limit":
            limit_seen = True
        elif kind == "contact" and e.get("kind") == "cornea_contact":
            terminal = (FailureReason.CORNEA_CONTACT, t)
        elif kind == "excessive_deformation":
            terminal = (FailureReason.EXCESSIVE_DEFORMATION, t)
        elif kind == "extrusion" and e.get("outcome") == "blocked":
            terminal = (FailureReason.BLOCKED_EXTRUSION, t)
        elif kind == "abort":
            reason = FailureReason.JOINT_LIMIT if limit_seen else FailureReason.OPERATOR_ABORT
            terminal = (reason, t)
        elif kind == "extrusion" and e.get("outcome") == "inserted":
            return "success", t
        if terminal is not None:
            # collect same-tick disqualifiers and keep the highest precedence
            best = terminal[0]
            for e2 in events[i + 1:]:
                if float(e2.get("time", t)) != t:
                    break
                k2 = e2.get("type")
                cand = None
                if k2 == "contact" and e2.get("kind") == "cornea_contact":
                    cand = FailureReason.CORNEA_CONTACT
                elif k2 == "excessive_deformation":
                    cand = FailureReason.EXCESSIVE_DEFORMATION
                elif k2 == "extrusion" and e2.get("outcome") == "blocked":
                    cand = FailureReason.BLOCKED_EXTRUSION
                if cand is not None and FAILURE_PRECEDENCE.index(cand) < FAILURE_PRECEDENCE.index(best):
                    best = cand
            return best, t
    reason = FailureReason.JOINT_LIMIT if limit_seen else FailureReason.TIMEOUT
    return reason, task.time_limit


def summarize(records, include_intro: bool = False, tlx=()) -> SummaryReport:
    """Aggregate trial records into a per-task report.

    Attempt index 1 (the introductory run) is excluded unless include_intro;
    both successful and failed attempts contribute their duration. SD is the
    sample standard deviation and is absent for single-attempt tasks.
    """
    included = [r for r in records if include_intro or r.attempt_index != 1]
    tlx_by_task = aggregate_tlx(tlx)
    tasks = []
    for task_id in sorted({r.task_id for r in included}):
        rows = [r for r in included if r.task_id == task_id]
        durations = [r.duration for r in rows]
        successes = sum(1 for r in rows if r.success)
        mean_t = statistics.mean(durations) if durations else None
        sd_t = statistics.stdev(durations) if len(durations) >= 2 else None
        rate = None
        if rows:
            rate = int((100 * successes) // len(rows) + (1 if (100 * successes) % len(rows) * 2 >= len(rows) else 0))
        tasks.append(
            TaskSummary(
                task_id=task_id,
                attempts=len(rows),
                successes=successes,
                mean_time=mean_t,
                sd_time=sd_t,
                success_rate_pct=rate,
                collisions=sum(r.collision_count for r in rows),
                tlx_means=tlx_by_task.get(task_id, {}),
            )
        )
    return SummaryReport(tuple(tasks), len(included), len(records))


def aggregate_tlx(records) -> dict:
    """Per-task, per-dimension arithmetic means of TLX records."""
    sums: dict = {}
    counts: dict = {}
    for r in records:
        acc = sums.setdefault(r.task_id, {d: 0.0 for d in TLX_DIMENSIONS})
        counts[r.task_id] = counts.get(r.task_id, 0) + 1
        for d in TLX_DIMENSIONS:
            acc[d] += getattr(r, d)
    return {
        task: {d: acc[d] / counts[task] for d in TLX_DIMENSIONS}
        for task, acc in sums.items()
    }


# ---------------------------------------------------------------------------
# JSONL logs


def _record_to_obj(item):
    if isinstance(item, TrialRecord):
        obj = {"record_type": "trial"}
        obj.update({k: v for k, v in asdict(item).items() if v is not None})
        return obj
    if isinstance(item, TlxRecord):
        obj = {"record_type": "tlx"}
        obj.update(asdict(item))
        return obj
    if isinstance(item, dict):
        return item
    raise TypeError(f"cannot log item of type {type(item).__name__}")


def _obj_to_record(obj: dict, lineno: int):
    kind = obj.get("record_type")
    try:
        if kind == "trial":
            fields = {k: v for k, v in obj.items() if k != "record_type"}
            return TrialRecord(**fields)
        if kind == "tlx":
            fields = {k: v for k, v in obj.items() if k != "record_type"}
            return TlxRecord(**fields)
        if kind is None:
            if "type" not in obj:
                raise ValueError("event object missing 'type'")
            return obj
        raise ValueError(f"unknown record_type {kind!r}")
    except (TypeError, ValueError) as e:
        raise LogFormatError(f"line {lineno}: {e}") from None


def write_log(items, destination) -> int:
    """Write records or events as JSON Lines; returns bytes written."""
    def dump(fh):
        n = 0
        for item in items:
            line = json.dumps(_record_to_obj(item), sort_keys=True) + "\n"
            fh.write(line)
            n += len(line.encode("utf-8"))
        return n

    if hasattr(destination, "write"):
        return dump(destination)
    with open(destination, "w", encoding="utf-8") as fh:
        return dump(fh)


def read_log(source):
    """Parse a JSON Lines log back into records/events (inverse of write_log)."""
    def parse(fh):
        out = []
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise LogFormatError(f"line {lineno}: invalid JSON: {e.msg}") from None
            if not isinstance(obj, dict):
                raise LogFormatError(f"line {lineno}: expected an object")
            out.append(_obj_to_record(obj, lineno))
        return out

    if hasattr(source, "read"):
        return parse(source)
    with open(source, "r", encoding="utf-8") as fh:
        return parse(fh)


# ---------------------------------------------------------------------------
# Report rendering


def _fmt_time(mean: Optional[float], sd: Optional[float]) -> str:
    if mean is None:
        return ""
    if sd is None:
        return f"{mean:.1f}"
    return f"{mean:.1f} (SD = {sd:.1f})"


def render_report(report: SummaryReport, format: str = "markdown") -> str:
    """Render the summary in the study table's column structure."""
    if format == "markdown":
        lines = [
            "| Task | Average Time (s) | Success rate (%) | Collisions | TLX |",
            "| --- | --- | --- | --- | --- |",
        ]
        for t in report.tasks:
            rate = "" if t.success_rate_pct is None else str(t.success_rate_pct)
            tlx = ", ".join(f"{d} {t.tlx_means[d]:.1f}" for d in TLX_DIMENSIONS if d in t.tlx_means)
            lines.append(
                f"| Task {t.task_id} | {_fmt_time(t.mean_time, t.sd_time)} | {rate} | {t.collisions} | {tlx} |"
            )
        return "\n".join(lines) + "\n"
    if format == "csv":
        cols = ["task_id", "attempts", "successes", "mean_time_s", "sd_time_s",
                "success_rate_pct", "collisions"] + [f"tlx_{d}" for d in TLX_DIMENSIONS]
        rows = [",".join(cols)]
        for t in report.tasks:
            vals = [
                str(t.task_id),
                str(t.attempts),
                str(t.successes),
                "" if t.mean_time is None else repr(t.mean_time),
                "" if t.sd_time is None else repr(t.sd_time),
                "" if t.success_rate_pct is None else str(t.success_rate_pct),
                str(t.collisions),
            ]
            for d in TLX_DIMENSIONS:
                vals.append(repr(t.tlx_means[d]) if d in t.tlx_means else "")
            rows.append(",".join(vals))
        return "\n".join(rows) + "\n"
    raise ValueError(f"unknown report format {format!r}")

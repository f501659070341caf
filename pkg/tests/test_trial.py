import io
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trocardock.trial import (
    FailureReason,
    LogFormatError,
    SummaryReport,
    TaskSpec,
    TlxRecord,
    TrialRecord,
    adjudicate,
    aggregate_tlx,
    read_log,
    render_report,
    summarize,
    write_log,
)


def ev(t, type_, **kw):
    d = {"tick": int(round(t * 100)), "time": t, "type": type_}
    d.update(kw)
    return d


TASK2 = TaskSpec.for_task(2)


# --- adjudication ------------------------------------------------------------

def test_clean_run_success():
    events = [
        ev(10.0, "docking", status="docked"),
        ev(48.2, "extrusion", outcome="inserted"),
    ]
    outcome, duration = adjudicate(events, TASK2)
    assert outcome == "success"
    assert duration == 48.2


def test_cornea_contact_fails():
    events = [ev(30.0, "contact", kind="cornea_contact", penetration=1e-4)]
    outcome, duration = adjudicate(events, TASK2)
    assert outcome == FailureReason.CORNEA_CONTACT
    assert duration == 30.0


def test_joint_limit_then_abort():
    events = [
        ev(5.0, "limit", position_joints=[3]),
        ev(9.0, "abort"),
    ]
    outcome, duration = adjudicate(events, TASK2)
    assert outcome == FailureReason.JOINT_LIMIT
    assert duration == 9.0


def test_abort_without_limit_is_operator_abort():
    outcome, _ = adjudicate([ev(9.0, "abort")], TASK2)
    assert outcome == FailureReason.OPERATOR_ABORT


def test_timeout_when_nothing_happens():
    outcome, duration = adjudicate([], TASK2)
    assert outcome == FailureReason.TIMEOUT
    assert duration == 120.0


def test_limit_then_timeout_is_joint_limit():
    outcome, _ = adjudicate([ev(5.0, "limit", position_joints=[1])], TASK2)
    assert outcome == FailureReason.JOINT_LIMIT


def test_blocked_extrusion_fails():
    outcome, duration = adjudicate([ev(20.0, "extrusion", outcome="blocked")], TASK2)
    assert outcome == FailureReason.BLOCKED_EXTRUSION
    assert duration == 20.0


def test_disqualifier_before_insertion_wins():
    events = [
        ev(10.0, "contact", kind="cornea_contact", penetration=1e-4),
        ev(20.0, "extrusion", outcome="inserted"),
    ]
    outcome, duration = adjudicate(events, TASK2)
    assert outcome == FailureReason.CORNEA_CONTACT
    assert duration == 10.0


def test_event_after_time_limit_ignored():
    events = [ev(130.0, "extrusion", outcome="inserted")]
    outcome, duration = adjudicate(events, TASK2)
    assert outcome == FailureReason.TIMEOUT
    assert duration == 120.0


def test_same_tick_precedence():
    events = [
        ev(15.0, "extrusion", outcome="blocked"),
        ev(15.0, "contact", kind="cornea_contact", penetration=1e-4),
    ]
    outcome, _ = adjudicate(events, TASK2)
    assert outcome == FailureReason.CORNEA_CONTACT


def test_malformed_log_rejected():
    with pytest.raises(LogFormatError):
        adjudicate([{"no_type": 1}], TASK2)


def test_adjudication_totality_random_logs():
    import random

    rng = random.Random(67)
    kinds = ["limit", "abort", "contact", "excessive_deformation", "extrusion", "mode_change", "docking"]
    for _ in range(300):
        events = []
        t = 0.0
        for _ in range(rng.randrange(0, 12)):
            t += rng.uniform(0.0, 20.0)
            k = rng.choice(kinds)
            e = ev(round(t, 2), k)
            if k == "contact":
                e["kind"] = rng.choice(["cornea_contact", "sclera_deformation", "trocar_rim"])
                e["penetration"] = 1e-4
            if k == "extrusion":
                e["outcome"] = rng.choice(["advancing", "inserted", "blocked"])
            events.append(e)
        outcome, duration = adjudicate(events, TASK2)
        assert outcome == "success" or isinstance(outcome, FailureReason)
        assert 0.0 <= duration <= TASK2.time_limit


# --- task spec invariants ------------------------------------------------------

def test_task_spec_invariants():
    assert TaskSpec.for_task(1).start == "trial_start"
    assert TaskSpec.for_task(2).start == "handover"
    assert TaskSpec.for_task(3).camera_enabled
    with pytest.raises(ValueError):
        TaskSpec(task_id=1, start="handover")
    with pytest.raises(ValueError):
        TaskSpec(task_id=2, start="handover", camera_enabled=True)


# --- summarize -----------------------------------------------------------------

def rec(task=2, attempt=2, duration=50.0, success=True, reason=None, collisions=0, participant="p1"):
    return TrialRecord(
        task_id=task,
        participant_id=participant,
        attempt_index=attempt,
        duration=duration,
        success=success,
        failure_reason=reason,
        collision_count=collisions,
    )


def test_mean_and_sample_sd():
    records = [rec(duration=d) for d in (40.0, 50.0, 60.0)]
    report = summarize(records)
    t = report.tasks[0]
    assert t.mean_time == 50.0
    assert abs(t.sd_time - 10.0) < 1e-12


def test_printed_rounding_92_and_42():
    records = [rec(attempt=i + 2, success=i < 11, reason=None if i < 11 else "timeout") for i in range(12)]
    assert summarize(records).tasks[0].success_rate_pct == 92
    records = [rec(attempt=i + 2, success=i < 5, reason=None if i < 5 else "timeout") for i in range(12)]
    assert summarize(records).tasks[0].success_rate_pct == 42


def test_intro_run_excluded_by_default():
    records = []
    for participant in ("p1", "p2"):
        for attempt in range(1, 5):
            records.append(rec(attempt=attempt, participant=participant))
    report = summarize(records)
    assert report.total_attempts == 8
    assert report.included_attempts == 6  # 3 per participant
    assert summarize(records, include_intro=True).included_attempts == 8


def test_single_attempt_sd_absent():
    report = summarize([rec()])
    assert report.tasks[0].sd_time is None
    assert report.tasks[0].mean_time == 50.0


def test_empty_records_empty_report():
    report = summarize([])
    assert report == SummaryReport((), 0, 0)


def test_summarize_matches_bruteforce_oracle():
    import random

    rng = random.Random(71)
    for _ in range(1000):
        n = rng.randrange(0, 12)
        records = []
        for _ in range(n):
            success = rng.random() < 0.7
            records.append(
                rec(
                    task=rng.choice([1, 2, 3]),
                    attempt=rng.randrange(1, 6),
                    duration=rng.uniform(1.0, 120.0),
                    success=success,
                    reason=None if success else "timeout",
                    collisions=rng.randrange(0, 4),
                )
            )
        report = summarize(records)
        for t in report.tasks:
            rows = [r for r in records if r.task_id == t.task_id and r.attempt_index != 1]
            assert t.attempts == len(rows)
            mean = sum(r.duration for r in rows) / len(rows)
            assert abs(t.mean_time - mean) < 1e-12
            if len(rows) >= 2:
                var = sum((r.duration - mean) ** 2 for r in rows) / (len(rows) - 1)
                assert abs(t.sd_time - math.sqrt(var)) < 1e-12
            succ = sum(1 for r in rows if r.success)
            assert t.success_rate_pct == int(math.floor(100 * succ / len(rows) + 0.5))
            assert t.collisions == sum(r.collision_count for r in rows)


# --- TLX -------------------------------------------------------------------------

def tlx(task=2, participant="p1", **scales):
    base = dict(mental=50, physical=50, temporal=50, performance=50, effort=50, frustration=50)
    base.update(scales)
    return TlxRecord(participant_id=participant, task_id=task, **base)


def test_tlx_single_record_identity():
    means = aggregate_tlx([tlx(mental=33.0)])
    assert means[2]["mental"] == 33.0


def test_tlx_midpoint():
    means = aggregate_tlx([tlx(physical=20.0), tlx(physical=40.0)])
    assert means[2]["physical"] == 30.0


def test_tlx_out_of_range_rejected():
    with pytest.raises(ValueError):
        tlx(mental=101.0)


def test_tlx_streaming_mean_oracle():
    import random

    rng = random.Random(73)
    records = [
        tlx(task=rng.choice([1, 2, 3]), **{d: rng.uniform(0, 100) for d in
            ("mental", "physical", "temporal", "performance", "effort", "frustration")})
        for _ in range(1000)
    ]
    means = aggregate_tlx(records)
    for task in (1, 2, 3):
        rows = [r for r in records if r.task_id == task]
        for dim in ("mental", "physical", "temporal", "performance", "effort", "frustration"):
            # streaming (Welford-style) mean
            m = 0.0
            for i, r in enumerate(rows, start=1):
                m += (getattr(r, dim) - m) / i
            assert abs(means[task][dim] - m) < 1e-12


# --- logs ------------------------------------------------------------------------

def test_empty_roundtrip():
    buf = io.StringIO()
    assert write_log([], buf) == 0
    buf.seek(0)
    assert read_log(buf) == []


def test_record_roundtrip_preserves_absences():
    r = rec()
    buf = io.StringIO()
    write_log([r], buf)
    buf.seek(0)
    (back,) = read_log(buf)
    assert back == r
    assert back.failure_reason is None
    assert back.event_log_ref is None


def test_bulk_roundtrip_deep_equality():
    import random

    rng = random.Random(79)
    records = []
    for i in range(10000):
        success = rng.random() < 0.6
        records.append(
            TrialRecord(
                task_id=rng.choice([1, 2, 3]),
                participant_id=f"p{rng.randrange(5)}",
                attempt_index=rng.randrange(1, 5),
                duration=round(rng.uniform(0, 120), 6),
                success=success,
                failure_reason=None if success else rng.choice([f.value for f in FailureReason]),
                collision_count=rng.randrange(0, 5),
                camera_view_fraction=round(rng.random(), 6),
                event_log_ref=None if rng.random() < 0.5 else f"events_{i}.jsonl",
                notes="" if rng.random() < 0.8 else "note",
            )
        )
    buf = io.StringIO()
    write_log(records, buf)
    buf.seek(0)
    back = read_log(buf)
    assert back == records


def test_mixed_records_and_events_roundtrip():
    items = [rec(), tlx(), {"type": "contact", "time": 1.0, "tick": 100}]
    buf = io.StringIO()
    write_log(items, buf)
    buf.seek(0)
    back = read_log(buf)
    assert back == items


def test_schema_violation_reports_line():
    buf = io.StringIO('{"record_type": "trial", "task_id": 9}\n')
    with pytest.raises(LogFormatError, match="line 1"):
        read_log(buf)
    buf = io.StringIO('{"record_type": "trial", "task_id": 2, "participant_id": "p", "attempt_index": 2, "duration": 1.0, "success": true}\nnot json\n')
    with pytest.raises(LogFormatError, match="line 2"):
        read_log(buf)


# --- rendering ---------------------------------------------------------------

def test_markdown_matches_table_structure():
    report = SummaryReport(
        tasks=(
            __import__("trocardock.trial", fromlist=["TaskSummary"]).TaskSummary(
                task_id=1, attempts=12, successes=5, mean_time=51.2, sd_time=23.5,
                success_rate_pct=42, collisions=3,
            ),
        ),
        included_attempts=12,
        total_attempts=16,
    )
    text = render_report(report, "markdown")
    assert "Task 1 | 51.2 (SD = 23.5) | 42" in text
    assert "Average Time (s)" in text and "Success rate (%)" in text


def test_markdown_empty_report_header_only():
    text = render_report(SummaryReport(), "markdown")
    assert text.startswith("| Task |")
    assert len(text.strip().splitlines()) == 2  # header + separator


def test_csv_roundtrip_exact():
    records = [rec(duration=d, attempt=i + 2) for i, d in enumerate((40.0, 50.5, 61.25))]
    report = summarize(records, tlx=[tlx(mental=12.5)])
    text = render_report(report, "csv")
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    row = lines[1].split(",")
    d = dict(zip(header, row))
    assert float(d["mean_time_s"]) == report.tasks[0].mean_time
    assert float(d["sd_time_s"]) == report.tasks[0].sd_time
    assert int(d["success_rate_pct"]) == 100
    assert float(d["tlx_mental"]) == 12.5

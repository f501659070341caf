"""Command-line surface: headless batch runner, report generator,
deterministic replay, and the live session server.

Exit codes: 0 success, 2 invalid input (scenario/log/schema), 3 unwritable
output, 4 replay hash mismatch (a determinism violation).
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
import pathlib
import statistics
import sys

from .session import SessionLogError, replay_session
from .simulate import ScenarioError, load_scenario, run_scenario_trial
from .trial import LogFormatError, TlxRecord, TrialRecord, read_log, render_report, summarize, write_log

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNWRITABLE = 3
EXIT_HASH_MISMATCH = 4

logger = logging.getLogger("trocardock")


def _setup_logging():
    level = os.environ.get("TROCAR_DOCK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def cmd_simulate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID

    out_path = pathlib.Path(args.out)
    records = []
    events_dir = pathlib.Path(args.events_dir) if args.events_dir else None
    if events_dir:
        try:
            events_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            print(f"error: cannot create events dir: {e}", file=sys.stderr)
            return EXIT_UNWRITABLE
    for i in range(args.trials):
        event_log_path = events_dir / f"task{args.task}_trial{i:04d}.jsonl" if events_dir else None
        rec = run_scenario_trial(
            scenario,
            args.task,
            seed=args.seed + i,
            participant_id=args.participant,
            attempt_index=i + 1,
            event_log_path=event_log_path,
        )
        records.append(rec)
    try:
        with open(out_path, "a" if args.append else "w", encoding="utf-8") as fh:
            write_log(records, fh)
    except OSError as e:
        print(f"error: cannot write {out_path}: {e}", file=sys.stderr)
        return EXIT_UNWRITABLE
    successes = sum(1 for r in records if r.success)
    mean = statistics.mean([r.duration for r in records]) if records else 0.0
    print(
        f"task {args.task}: {len(records)} trials, {successes} succeeded, "
        f"mean duration {mean:.1f} s -> {out_path}"
    )
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        items = read_log(args.infile)
    except FileNotFoundError:
        print(f"error: no such file: {args.infile}", file=sys.stderr)
        return EXIT_INVALID
    except LogFormatError as e:
        print(f"error: {args.infile}: {e}", file=sys.stderr)
        return EXIT_INVALID
    records = [r for r in items if isinstance(r, TrialRecord)]
    tlx = [r for r in items if isinstance(r, TlxRecord)]
    if args.tlx:
        try:
            tlx += [r for r in read_log(args.tlx) if isinstance(r, TlxRecord)]
        except (FileNotFoundError, LogFormatError) as e:
            print(f"error: {args.tlx}: {e}", file=sys.stderr)
            return EXIT_INVALID
    report = summarize(records, include_intro=args.include_intro, tlx=tlx)
    sys.stdout.write(render_report(report, args.format))
    return EXIT_OK


def cmd_replay(args) -> int:
    if args.speed <= 0:
        print("error: --speed must be positive", file=sys.stderr)
        return EXIT_INVALID
    try:
        if args.serve:
            from .server import SessionConfig, stream_replay

            config = SessionConfig(port=args.port, host=args.host)
            ok = asyncio.run(stream_replay(args.infile, args.speed, config))
            if not ok:
                print("determinism violation: recorded hash mismatch", file=sys.stderr)
                return EXIT_HASH_MISMATCH
            return EXIT_OK
        matches, computed, record = replay_session(args.infile)
    except FileNotFoundError:
        print(f"error: no such file: {args.infile}", file=sys.stderr)
        return EXIT_INVALID
    except (SessionLogError, ScenarioError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    if not matches:
        print(f"determinism violation: recorded hash != computed {computed}", file=sys.stderr)
        return EXIT_HASH_MISMATCH
    print(
        f"replay ok: hash {computed[:16]} success={record.success} "
        f"duration={record.duration:.2f} s"
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import SessionConfig, serve_forever

    try:
        scenario = load_scenario(args.scenario)
        config = SessionConfig(
            port=args.port,
            host=args.host,
            snapshot_rate=args.snapshot_rate,
            real_time=not args.no_real_time,
            out_dir=args.out_dir,
        )
    except (ScenarioError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    try:
        asyncio.run(serve_forever(scenario, config))
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="trocardock",
        description="Trocar-docking simulator: batch trials, reports, replay, live sessions.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run seeded virtual-operator trials headlessly")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--task", type=int, choices=(1, 2, 3), required=True)
    sim.add_argument("--trials", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="TrialRecord JSONL output path")
    sim.add_argument("--events-dir", default=None, help="write per-trial event logs here")
    sim.add_argument("--participant", default="virtual")
    sim.add_argument("--append", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    rep = sub.add_parser("report", help="summarize TrialRecord JSONL into a table")
    rep.add_argument("--in", dest="infile", required=True)
    rep.add_argument("--tlx", default=None, help="extra TLX JSONL to merge")
    rep.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    rep.add_argument("--include-intro", action="store_true")
    rep.set_defaults(func=cmd_report)

    rpl = sub.add_parser("replay", help="re-drive a recorded session and verify its hash")
    rpl.add_argument("--in", dest="infile", required=True)
    rpl.add_argument("--speed", type=float, default=1.0)
    rpl.add_argument("--serve", action="store_true", help="stream replay snapshots to one client")
    rpl.add_argument("--port", type=int, default=8787)
    rpl.add_argument("--host", default="127.0.0.1")
    rpl.set_defaults(func=cmd_replay)

    srv = sub.add_parser("serve", help="serve one live operator session over WebSocket")
    srv.add_argument("--scenario", required=True)
    srv.add_argument("--port", type=int, default=8787)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--snapshot-rate", type=float, default=50.0)
    srv.add_argument("--out-dir", default="./sessions")
    srv.add_argument("--no-real-time", action="store_true")
    srv.set_defaults(func=cmd_serve)

    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

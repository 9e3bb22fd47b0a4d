"""Command line interface.

  vinesim serve  --course <name|file> [--port N] [--tick-hz N] [--ui DIR]
  vinesim replay <log> [--verify] [--course <name|file>]
  vinesim score  <log> --course <name|file>
  vinesim check                # invariant suite on the built-in courses
  vinesim courses              # list built-ins

VINESIM_CONFIG may point at a JSON file of defaults (tick_hz, port,
snapshot_hz); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from vinesim.errors import ReplayIntegrityError, VinesimError
from vinesim.scenario import (
    RunRecord,
    builtin_course_names,
    load_builtin,
    resolve_course,
    score_run,
    validate_course,
)
from vinesim.session import Session, replay


def _env_defaults() -> dict:
    path = os.environ.get("VINESIM_CONFIG")
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"warning: ignoring VINESIM_CONFIG ({exc})", file=sys.stderr)
        return {}


def _load_record(path: str) -> RunRecord:
    with open(path, encoding="utf-8") as f:
        return RunRecord.from_jsonl(f.read())


def _course_for_record(record: RunRecord, ref: str | None):
    if ref is not None:
        return resolve_course(ref)
    return resolve_course(record.course_name)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from vinesim.server import create_app

    course = resolve_course(args.course)
    app = create_app(
        course,
        tick_hz=args.tick_hz,
        snapshot_hz=args.snapshot_hz,
        ui_dir=args.ui,
    )
    print(f"serving course {course.name!r} at ws://{args.host}:{args.port}/ws")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    record = _load_record(args.log)
    course = _course_for_record(record, args.course)
    t0 = time.perf_counter()
    try:
        session = replay(record, course, verify=args.verify)
    except ReplayIntegrityError as exc:
        print(f"FAIL: {exc}")
        return 1
    wall = time.perf_counter() - t0
    verdict = "verified" if args.verify else "re-simulated"
    print(
        f"{verdict}: {len(record.entries)} ticks on {course.name!r} "
        f"({record.sim_seconds():.1f} sim s) in {wall:.2f} s wall; "
        f"final length {session.body.total_length:.3f} m"
    )
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    record = _load_record(args.log)
    course = _course_for_record(record, args.course)
    breakdown = score_run(record, course)
    print(json.dumps(breakdown, indent=2, sort_keys=True))
    return 0


def cmd_courses(_args: argparse.Namespace) -> int:
    for name in builtin_course_names():
        course = load_builtin(name)
        print(
            f"{name}: {len(course.environment.obstacles)} obstacles, "
            f"robot {course.robot.inflated_diameter:.1f} cm / "
            f"{course.robot.body_length:.1f} m"
        )
    return 0


def cmd_check(_args: argparse.Namespace) -> int:
    """Fast self-checks of the core invariants on the built-in courses."""
    from vinesim.autopilot import course_routes, run_route

    failures = 0

    def report(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        mark = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        print(f"[{mark}] {name}" + (f" ({detail})" if detail else ""))

    for name in builtin_course_names():
        course = load_builtin(name)
        findings = [f for f in validate_course(course) if f.severity == "error"]
        report(f"{name}: course validates", not findings, "; ".join(f.message for f in findings))

        session = Session(course, 50.0)
        for _ in range(500):
            session.apply_input({"r_p": 1023.0, "r_m": 613.8, "d": -1})
            session.tick()
        b = session.body
        book = abs(b.laid_length + b.active.s - b.total_length)
        report(f"{name}: length bookkeeping", book <= 1e-6, f"error {book:.2e}")

        session.apply_input({"r_p": 1023.0, "r_m": 613.8, "d": -1, "estop": True})
        session.tick()
        snap = session.snapshot()
        zeroed = snap.p_body == 0.0 and all(p == 0.0 for p in snap.pressures)
        report(f"{name}: e-stop vents all pressures", zeroed)

        twin = replay(session.record, course, verify=True)
        report(
            f"{name}: record/replay hash chain",
            twin.state_hash() == session.state_hash(),
        )

    course = load_builtin("robosoft2018")
    session = run_route(
        Session(course, 50.0), course_routes(course)["full_run"], max_sim_seconds=200.0
    )
    snap = session.snapshot()
    ok = {"sand", "aperture_goal", "stairs", "cylinders", "finish"} <= set(snap.reached)
    report(
        "robosoft2018: scripted run completes all obstacles",
        ok and not snap.toppled,
        f"length {snap.total_length:.2f} m in {snap.sim_time:.0f} s",
    )

    print("all checks passed" if failures == 0 else f"{failures} check(s) failed")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    defaults = _env_defaults()
    parser = argparse.ArgumentParser(prog="vinesim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the websocket teleop service")
    p.add_argument("--course", required=True, help="built-in name or course file")
    p.add_argument("--host", default=defaults.get("host", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(defaults.get("port", 8720)))
    p.add_argument(
        "--tick-hz", type=float, default=float(defaults.get("tick_hz", 50.0))
    )
    p.add_argument(
        "--snapshot-hz", type=float, default=float(defaults.get("snapshot_hz", 25.0))
    )
    p.add_argument("--ui", default=defaults.get("ui"), help="static UI directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="re-simulate a run record")
    p.add_argument("log")
    p.add_argument("--verify", action="store_true", help="check the hash chain")
    p.add_argument("--course", help="override course (built-in name or file)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("score", help="score a run record against a course")
    p.add_argument("log")
    p.add_argument("--course", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("check", help="run the invariant suite on built-ins")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("courses", help="list built-in courses")
    p.set_defaults(func=cmd_courses)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VinesimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

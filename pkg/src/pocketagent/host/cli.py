"""Command-line surface.

    pocketagent run <scenario.json> [--data-dir D] [--report-dir R] [--figures]
    pocketagent record <session> --scenario S --steps steps.json [--data-dir D]
    pocketagent replay <bookmark> --scenario S [--data-dir D]
    pocketagent memory sync|query <q> --scenario S [--data-dir D]
    pocketagent skills list [--data-dir D]
    pocketagent serve --scenario S [--port N] [--data-dir D]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import errors
from ..device import gesture_from_dict
from ..memory import memory_query
from .modelclient import ModelEndpointConfig
from .scenario import load_scenario, run_scenario
from .session import Host
from .store import HostStore

DEFAULT_DATA_DIR = ".pocketagent"


def _build_host(args) -> Host:
    fixture = load_scenario(args.scenario)
    return Host(fixture, args.data_dir, config=ModelEndpointConfig.from_env())


def _cmd_run(args) -> int:
    result = run_scenario(args.scenario, args.data_dir)
    report = result.report
    for e in report.expectations:
        marker = "PASS" if e.ok else "FAIL"
        print(f"[{marker}] step {e.step_index} {e.probe}: "
              f"want {e.want!r}, got {e.got!r}")
    print(f"{report.name}: {report.steps_executed} steps, "
          f"{len(report.expectations) - len(report.failures)}/"
          f"{len(report.expectations)} expectations passed, "
          f"{len(report.artifacts_written)} artifacts written")
    if args.report_dir:
        from .reporting import write_report

        written = write_report(result, args.report_dir, figures=args.figures)
        for path in written:
            print(f"wrote {path}")
    return 0 if report.passed else 1


def _cmd_record(args) -> int:
    host = _build_host(args)
    steps = json.loads(Path(args.steps).read_text(encoding="utf-8"))
    host.start_recording(args.session)
    for step in steps:
        if "intent" in step:
            from ..device import IntentMsg

            spec = step["intent"]
            host.device.launch_intent(IntentMsg.make(
                spec.get("action", "view"),
                data_uri=spec.get("data_uri"),
                component=tuple(spec["component"]) if spec.get("component")
                else None,
                extras=spec.get("extras", {})), privileged=True)
        else:
            host.device.apply_gesture(gesture_from_dict(step))
    trajectory, card, bookmark = host.stop_recording()
    if card is None:
        print("nothing captured")
        return 1
    print(f"recorded {len(trajectory.steps)} steps")
    print(f"skill: {card.name}")
    print(f"bookmark: {bookmark.name}")
    return 0


def _cmd_replay(args) -> int:
    host = _build_host(args)
    try:
        outcome = host.replay_bookmark(args.bookmark)
    except errors.AllTiersFailed as exc:
        print(f"replay failed: every tier exhausted ({exc})")
        return 1
    for attempt in outcome.attempts:
        status = "ok" if attempt.ok else f"failed ({attempt.error})"
        print(f"tier {attempt.tier}: {status}")
    print(f"restored {outcome.page.activity} via {outcome.tier_used}")
    return 0


def _cmd_memory(args) -> int:
    if args.action == "sync":
        host = _build_host(args)
        result = host.run_memory_sync()
        print(f"scanned {len(result.appended)} new assets "
              f"(cursor {host.store.gallery.load_file().cursor})")
        return 0
    store = HostStore(args.data_dir)
    hits = memory_query(args.query or "", store.gallery.load_file())
    for name, score in hits:
        print(f"{score}\t{name}")
    return 0


def _cmd_skills(args) -> int:
    store = HostStore(args.data_dir)
    for card in store.list_skills():
        print(f"{card.name}\t{card.target_app}\t{card.description}")
    return 0


def _cmd_serve(args) -> int:
    host = _build_host(args)
    from .server import AgentServer

    server = AgentServer(host, args.port)
    print(f"serving on http://127.0.0.1:{server.port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pocketagent")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p_run.add_argument("--report-dir", default="")
    p_run.add_argument("--figures", action="store_true",
                       help="also render screen/expectation figures")
    p_run.set_defaults(fn=_cmd_run)

    p_rec = sub.add_parser("record", help="record a scripted session")
    p_rec.add_argument("session")
    p_rec.add_argument("--scenario", required=True)
    p_rec.add_argument("--steps", required=True,
                       help="JSON list of gestures/intents to record")
    p_rec.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p_rec.set_defaults(fn=_cmd_record)

    p_rep = sub.add_parser("replay", help="replay a stored bookmark")
    p_rep.add_argument("bookmark")
    p_rep.add_argument("--scenario", required=True)
    p_rep.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p_rep.set_defaults(fn=_cmd_replay)

    p_mem = sub.add_parser("memory", help="gallery memory operations")
    p_mem.add_argument("action", choices=["sync", "query"])
    p_mem.add_argument("query", nargs="?", default="")
    p_mem.add_argument("--scenario", default="")
    p_mem.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p_mem.set_defaults(fn=_cmd_memory)

    p_sk = sub.add_parser("skills", help="skill store operations")
    p_sk.add_argument("action", choices=["list"])
    p_sk.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p_sk.set_defaults(fn=_cmd_skills)

    p_srv = sub.add_parser("serve", help="serve the UI protocol")
    p_srv.add_argument("--scenario", required=True)
    p_srv.add_argument("--port", type=int, default=8321)
    p_srv.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p_srv.set_defaults(fn=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "memory" and args.action == "sync" and not args.scenario:
        print("memory sync requires --scenario", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except errors.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

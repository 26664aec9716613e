"""Command line entry points: serve, simulate, replay, export."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import Platform, export_soo_csv
from .events import CorruptLog, EventType, read_log, replay
from .model import canonical_snapshot
from .participants import IntroQuestion, IntroTest
from .policy import AggregationPolicy
from .sim import load_scenario, simulate


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _intro_test_from_config(config: dict) -> IntroTest:
    questions = tuple(
        IntroQuestion(
            text=q["text"],
            options=tuple(q["options"]),
            answer_index=int(q["answerIndex"]),
        )
        for q in config.get("introTest", [])
    )
    return IntroTest(questions)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    config = _load_config(args.config)
    platform = Platform(
        policy=AggregationPolicy.from_json(config.get("policy", {})),
        intro_test=_intro_test_from_config(config),
        log_path=args.log,
        fsync=bool(config.get("fsync", True)),
    )
    uvicorn.run(create_app(platform), host=args.host, port=args.port, log_level="info")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    result = simulate(scenario, log_path=args.log)
    report = result.report.to_json()
    if args.report:
        Path(args.report).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    width = max(len(k) for k in report)
    for key, value in report.items():
        print(f"{key:<{width}}  {value}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        events = read_log(args.log)
        state = replay(events)
    except CorruptLog as exc:
        print(f"corrupt log: {exc}", file=sys.stderr)
        return 1
    _, digest = canonical_snapshot(state.tree)
    milestones = sum(1 for e in events if e.type is EventType.MILESTONE_CREATED)
    print(f"events          {len(events)}")
    print(f"participants    {len(state.participants)}")
    print(f"activeElements  {len(state.tree.active_elements())}")
    print(f"phase           {state.tree.phase.value}")
    print(f"milestones      {milestones} (snapshot hashes verified)")
    print(f"snapshotHash    {digest}")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    try:
        state = replay(read_log(args.log))
    except CorruptLog as exc:
        print(f"corrupt log: {exc}", file=sys.stderr)
        return 1
    Path(args.csv).write_text(export_soo_csv(state), encoding="utf-8")
    print(f"wrote {args.csv}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sooplatform",
        description="Crowd-built objective hierarchies from micro-questions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", help="JSON config (policy, intro test, fsync)")
    serve.add_argument("--log", default="events.ldjson", help="event log path")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    simulate_cmd = sub.add_parser("simulate", help="run a synthetic-crowd scenario")
    simulate_cmd.add_argument("scenario", help="scenario JSON file")
    simulate_cmd.add_argument("--seed", type=int, help="override the scenario seed")
    simulate_cmd.add_argument("--log", help="write the event log here")
    simulate_cmd.add_argument("--report", help="write the run report JSON here")
    simulate_cmd.set_defaults(func=cmd_simulate)

    replay_cmd = sub.add_parser("replay", help="fold a log and verify milestone hashes")
    replay_cmd.add_argument("log", help="event log path")
    replay_cmd.set_defaults(func=cmd_replay)

    export_cmd = sub.add_parser("export", help="export the folded tree as CSV")
    export_cmd.add_argument("log", help="event log path")
    export_cmd.add_argument("csv", help="output CSV path")
    export_cmd.set_defaults(func=cmd_export)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())

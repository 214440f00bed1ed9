"""agentshop command line: run, replay, render and validate episodes.

Exit codes: 0 success, 1 configuration or input error, 2 tick budget
exhausted, 64 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from agentshop.episode import (
    ARTIFACTS,
    Episode,
    EpisodeParams,
    load_decisions,
    load_trajectory,
    replay_decisions,
)
from agentshop.orders import EmptyOrder, load_order, parse_order_llm, parse_order_rules
from agentshop.orchestrator import CtrlState, GATE_NAMES
from agentshop.render import render_ascii, render_svg
from agentshop.semantic import ParseError, load_history, load_map
from agentshop.sim.config import InvalidConfig, load_world, world_from_dict, validate_config
from agentshop.transport import HttpTransport, TransportError

EXIT_OK, EXIT_CONFIG, EXIT_EXHAUSTED, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="agentshop", description="Simulated LLM-guided shopping robot")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and decisions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one seeded episode and write its artifacts")
    p.add_argument("--world", required=True, help="world JSON file")
    order = p.add_mutually_exclusive_group(required=True)
    order.add_argument("--order", help="natural-language order text")
    order.add_argument("--order-file", help="order.json file, or a text file holding the request")
    p.add_argument("--policy", choices=("oracle", "llm"), default="oracle")
    p.add_argument("--seed", type=int, default=None, help="override the world seed")
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--max-ticks", type=int, default=200_000)
    p.add_argument("--out", default="episode", help="artifact directory")

    p = sub.add_parser("replay", help="re-run the oracle over logged decisions")
    p.add_argument("episode", help="episode artifact directory")

    p = sub.add_parser("render", help="draw an episode as SVG or ASCII")
    p.add_argument("episode", help="episode artifact directory")
    p.add_argument("--format", choices=("svg", "ascii"), default="svg")
    p.add_argument("--output", help="output file (default: trajectory.svg or trajectory.txt in the episode)")

    p = sub.add_parser("validate", help="check a world file or an episode directory")
    p.add_argument("path", help="world JSON file or episode artifact directory")
    return parser


def _read_order(args, transport) -> tuple:
    if args.order_file:
        raw = Path(args.order_file).read_text(encoding="utf-8")
        if raw.lstrip().startswith("{"):
            return load_order(raw), raw
        text = raw.strip()
    else:
        text = args.order
    if args.policy == "llm":
        return parse_order_llm(transport, text), text
    return parse_order_rules(text), text


def cmd_run(args) -> int:
    if not 0 < args.dt <= 0.1:
        raise UsageError("--dt must lie in (0, 0.1]")
    if args.max_ticks < 0:
        raise UsageError("--max-ticks must be >= 0")
    try:
        config = load_world(args.world)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        transport = HttpTransport.from_env() if args.policy == "llm" else None
        order, _ = _read_order(args, transport)
        if order.total == 0:
            raise EmptyOrder("order is empty")
    except (InvalidConfig, ParseError, EmptyOrder, TransportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    params = EpisodeParams(dt=args.dt, max_ticks=args.max_ticks)
    episode = Episode(config, order, policy=args.policy, transport=transport, params=params)
    outcome = episode.run()
    out = episode.write(args.out)
    print(f"{outcome.reason}: {outcome.ticks} ticks, {outcome.sim_time:.2f} s simulated")
    print(f"order: {json.dumps(order.as_dict())}  carried: {json.dumps(episode.world.carried)}")
    print(f"artifacts: {out}")
    return outcome.exit_code


def cmd_replay(args) -> int:
    path = Path(args.episode) / "decisions.jsonl"
    if not path.exists():
        print(f"warning: {path} not found, nothing to replay")
        return EXIT_OK
    records, bad = load_decisions(path.read_bytes())
    report = replay_decisions(records, bad_lines=bad)
    for line in report.lines():
        print(line)
    return EXIT_OK


def _load_episode(directory: Path):
    config = world_from_dict(json.loads((directory / "world.json").read_text()))
    semantic = load_map((directory / "semantic_map.json").read_bytes())
    traj_path = directory / "trajectory.csv"
    rows = load_trajectory(traj_path.read_bytes()) if traj_path.exists() else []
    return config, semantic, [(r["x"], r["y"]) for r in rows]


def cmd_render(args) -> int:
    directory = Path(args.episode)
    try:
        config, semantic, points = _load_episode(directory)
    except (OSError, ParseError, InvalidConfig, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.format == "svg":
        text = render_svg(config, semantic, points)
        default = directory / "trajectory.svg"
    else:
        text = render_ascii(config, semantic, points)
        default = directory / "trajectory.txt"
    target = Path(args.output) if args.output else default
    target.write_text(text, encoding="utf-8")
    print(target)
    return EXIT_OK


def validate_episode(directory: Path) -> list[str]:
    """Problems found in an artifact directory; empty when everything checks."""
    problems = []
    for name in ARTIFACTS:
        if not (directory / name).exists():
            problems.append(f"missing {name}")
    if problems:
        return problems
    try:
        validate_config(world_from_dict(json.loads((directory / "world.json").read_text())))
        load_order((directory / "order.json").read_bytes())
        load_map((directory / "semantic_map.json").read_bytes())
        load_history((directory / "history.jsonl").read_bytes())
    except (InvalidConfig, ParseError, json.JSONDecodeError) as exc:
        problems.append(f"schema: {exc}")
    _, bad = load_decisions((directory / "decisions.jsonl").read_bytes())
    if bad:
        problems.append(f"decisions.jsonl has {bad} unreadable line(s)")
    states = {s.value for s in CtrlState}
    for n, line in enumerate((directory / "transitions.jsonl").read_text().splitlines(), start=1):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            problems.append(f"transitions.jsonl line {n}: invalid JSON")
            continue
        if rec.get("from") not in states or rec.get("to") not in states:
            problems.append(f"transitions.jsonl line {n}: unknown state")
        gates = rec.get("gates", [])
        if len(gates) > 1 or any(g not in GATE_NAMES for g in gates):
            problems.append(f"transitions.jsonl line {n}: gates {gates} are not one-hot")
    for n, row in enumerate(load_trajectory((directory / "trajectory.csv").read_bytes()), start=2):
        if len(row["gates"]) > 1:
            problems.append(f"trajectory.csv line {n}: gates {row['gates']} are not one-hot")
    return problems


def cmd_validate(args) -> int:
    path = Path(args.path)
    if path.is_dir():
        problems = validate_episode(path)
        for p in problems:
            print(p)
        print(f"violations: {len(problems)}")
        return EXIT_OK if not problems else EXIT_CONFIG
    try:
        load_world(path)
    except InvalidConfig as exc:
        print(f"invalid: {exc}")
        return EXIT_CONFIG
    print("valid")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "replay": cmd_replay, "render": cmd_render, "validate": cmd_validate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"agentshop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Admin command line: seed fixtures, run the HTTP service, export data."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .api import create_app
from .config import Config, load_config
from .engine import ForumEngine
from .errors import ForumError
from .model import TopicState
from .store import open_store


def _engine_from(config: Config) -> ForumEngine:
    return ForumEngine(open_store(config.storage_path), config)


def _load_config_or_exit(path: str | None) -> Config:
    try:
        return load_config(path)
    except (OSError, ValueError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        raise SystemExit(2)


def cmd_seed(args: argparse.Namespace) -> None:
    config = _load_config_or_exit(args.config)
    try:
        fixture = json.loads(Path(args.fixture).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: bad fixture: {exc}", file=sys.stderr)
        raise SystemExit(2)
    engine = _engine_from(config)
    try:
        counts = engine.seed(fixture)
    except ForumError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        raise SystemExit(2)
    summary = ", ".join(f"{n} {name}" for name, n in counts.items())
    print(f"seeded {summary}")


def cmd_serve(args: argparse.Namespace) -> None:
    import uvicorn

    config = _load_config_or_exit(args.config)
    engine = _engine_from(config)
    static_dir = args.static
    if static_dir and not Path(static_dir).is_dir():
        print(f"error: static directory {static_dir!r} does not exist", file=sys.stderr)
        raise SystemExit(2)
    app = create_app(engine, static_dir=static_dir)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="info")


def cmd_export(args: argparse.Namespace) -> None:
    config = _load_config_or_exit(args.config)
    engine = _engine_from(config)
    states = None
    if args.state:
        try:
            states = [TopicState(part.strip()) for part in args.state.split(",") if part.strip()]
        except ValueError as exc:
            print(f"error: bad state filter: {exc}", file=sys.stderr)
            raise SystemExit(2)
    document = engine.export_requirements(None, states)
    try:
        Path(args.out).write_text(
            json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        if args.ledger:
            Path(args.ledger).write_text(engine.ledger_jsonl() + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write export: {exc}", file=sys.stderr)
        raise SystemExit(2)
    print(f"exported {len(document['topics'])} topics to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reqboard", description="Requirements forum service administration"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    seed = sub.add_parser("seed", help="load stakeholders, templates, gifts, and tests")
    seed.add_argument("--config", help="key = value config file (defaults apply if omitted)")
    seed.add_argument("--fixture", required=True, help="JSON fixture file")
    seed.set_defaults(func=cmd_seed)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", help="key = value config file")
    serve.add_argument("--static", help="directory of built web UI assets to serve at /")
    serve.set_defaults(func=cmd_serve)

    export = sub.add_parser("export", help="write the requirements hand-off document")
    export.add_argument("--config", help="key = value config file")
    export.add_argument("--out", required=True, help="output JSON path")
    export.add_argument("--state", help="comma-separated state filter, e.g. LOCKED,NEGOTIATION")
    export.add_argument("--ledger", help="also write the score ledger as JSON lines here")
    export.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()

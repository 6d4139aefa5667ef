"""Command-line entry point.

Every subcommand takes ``--config`` pointing at the engine JSON config;
a few flags override individual fields. Logs are JSON lines on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .config import EngineConfig, load_config
from .errors import TriageError
from .pipeline import Engine


class JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        entry = {
            "ts": self.formatTime(record, "%Y-%m-%dT%H:%M:%S%z"),
            "level": record.levelname.lower(),
            "event": record.getMessage(),
        }
        payload = getattr(record, "payload", None)
        if payload is not None:
            entry["payload"] = payload
        return json.dumps(entry, sort_keys=True, default=str)


def setup_logging(verbose: bool = False) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonLineFormatter())
    root = logging.getLogger("triagekit")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _load(args: argparse.Namespace) -> EngineConfig:
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workdir is not None:
        overrides["workdir"] = args.workdir
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="triagekit", description=__doc__)
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="engine JSON config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workdir", default=None)
        return p

    add("ingest", "normalize, filter, and split the raw issue corpus")
    add("train", "train the content-based ranker")
    add("index", "build the similarity index over training issues")
    add("tune", "grid-search retrieval/scoring/aggregation parameters")
    ev = add("evaluate", "score the held-out test split")
    ev.add_argument("--hits-csv", action="store_true", help="also write per-sample hits")
    rec = add("recommend", "rank candidates for a new issue")
    rec.add_argument("--title", required=True)
    rec.add_argument("--description", default="")
    rec.add_argument("-k", type=int, default=5)
    srv = add("serve", "run the HTTP API")
    srv.add_argument("--port", type=int, default=None)

    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        config = _load(args)
        engine = Engine(config)
        if args.command == "ingest":
            print(json.dumps(engine.ingest(), sort_keys=True, indent=2))
        elif args.command == "train":
            engine.train()
            print(json.dumps({"checkpoint": str(engine.path("model.npz"))}))
        elif args.command == "index":
            index = engine.build_index()
            print(json.dumps({"index": str(engine.path("index.bin")), "count": len(index)}))
        elif args.command == "tune":
            result = engine.tune()
            print(json.dumps(result.best_params_dict(), sort_keys=True, indent=2))
        elif args.command == "evaluate":
            payload = engine.evaluate(write_hits_csv=args.hits_csv)
            print(json.dumps(payload, sort_keys=True, indent=2))
        elif args.command == "recommend":
            print(json.dumps(engine.recommend(args.title, args.description, args.k), indent=2))
        elif args.command == "serve":
            import uvicorn

            from .server import create_app

            port = args.port or config.serve_port
            uvicorn.run(create_app(engine), host="127.0.0.1", port=port)
    except TriageError as exc:
        logging.getLogger("triagekit").error(str(exc))
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

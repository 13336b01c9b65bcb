"""Batch pipeline CLI: stage subcommands, ranking listing and the HTTP server.

Heavy modules are imported lazily so `--deterministic` can pin the numeric
libraries to one thread before they load.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

STAGES = ["synth", "ingest", "build-graph", "label", "train", "weigh", "suggest", "rank"]
PERIOD_CHOICES = ["morning", "noon", "afternoon", "evening", "night", "all"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lateroute",
        description="Short-term transit route improvement pipeline and service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--deterministic",
            action="store_true",
            help="single-threaded, bitwise-reproducible mode",
        )
        p.add_argument("-v", "--verbose", action="store_true")

    for stage in STAGES:
        add_common(sub.add_parser(stage, help=f"run the {stage} stage"))
    add_common(sub.add_parser("all", help="run the full pipeline in order"))

    rank = sub.choices["rank"]
    rank.add_argument("--period", choices=PERIOD_CHOICES, default="all")
    rank.add_argument(
        "--cutoff", type=float, default=0.0, help="list only routes improving by at least this percentage"
    )

    serve = sub.add_parser("serve", help="serve the planner HTTP API")
    add_common(serve)
    serve.add_argument("--bind", default="127.0.0.1:8000", help="host:port to bind")
    serve.add_argument(
        "--ui", default=None, help="also serve a built planner UI directory at /"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.deterministic:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, "1")

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    from . import pipeline
    from .workspace import MissingArtifactError, StaleArtifactError, load_config

    try:
        config = load_config(args.config, seed_override=args.seed)
        config.deterministic = args.deterministic
        if args.command == "all":
            pipeline.run_all(config)
        elif args.command == "rank":
            pipeline.run_stage(config, "rank")
            for line in pipeline.rank_listing(config, args.period, args.cutoff):
                print(line)
        elif args.command == "serve":
            _serve(config, args.bind, args.ui)
        else:
            pipeline.run_stage(config, args.command)
    except (MissingArtifactError, StaleArtifactError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _serve(config, bind: str, ui_dir: str | None) -> None:
    import uvicorn

    from .service import create_app

    host, _, port = bind.partition(":")
    app = create_app(config, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")


if __name__ == "__main__":
    raise SystemExit(main())

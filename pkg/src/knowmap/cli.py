"""Command-line entry points: build a bundle, serve it, export artefacts.

Exit codes: 0 success, 1 input/usage error, 2 internal error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import traceback

from .errors import ConfigError, KnowmapError
from .pipeline import BuildConfig, build_and_save, load_config, summarize

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as input errors (exit 1, not 2)."""

    def error(self, message: str):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="knowmap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="run the full pipeline and write a bundle")
    build.add_argument("--config", help="TOML config file; flags override its values")
    build.add_argument("--corpus", help="JSON-lines corpus path")
    build.add_argument("--gazetteer", help="TSV gazetteer path")
    build.add_argument("--eat", help="TSV annotation table path (instead of a gazetteer)")
    build.add_argument("--mode", choices=["manual", "data"], help="hierarchy source")
    build.add_argument("--out", help="output bundle path (.kcb)")
    build.add_argument("--tau", type=int, help="similarity edge threshold")
    build.add_argument(
        "--pyramid", help="comma-separated topic counts, top level first (data mode)"
    )
    build.add_argument("--padding", type=float, help="topic circle padding ratio")
    build.add_argument("--entity-radius", type=float, dest="entity_radius")
    build.add_argument("--alpha", type=float, help="nesting weight in the elevation blend")
    build.add_argument("--beta", type=float, help="density weight in the elevation blend")
    build.add_argument("--bandwidth", type=float, help="density kernel bandwidth")
    build.add_argument("--grid-size", type=int, dest="grid_size")
    build.add_argument("--seed", type=int)
    build.add_argument(
        "--source-vocabs", dest="source_vocabs",
        help="comma-separated vocabulary tags to keep from the gazetteer",
    )

    serve = sub.add_parser("serve", help="serve a bundle over HTTP")
    serve.add_argument("--bundle", help="bundle path (env KNOWMAP_BUNDLE)")
    serve.add_argument("--port", type=int, help="port (env KNOWMAP_PORT, default 8000)")
    serve.add_argument("--host", help="bind address (env KNOWMAP_HOST, default 127.0.0.1)")
    serve.add_argument("--ui", help="optional static directory to serve at /")

    export = sub.add_parser("export", help="export artefacts from a bundle")
    export.add_argument("--bundle", required=True, help="bundle path")
    export.add_argument(
        "--kind", required=True, choices=["graphdb", "svg", "eat"],
        help="graphdb: import script; svg: contour figure; eat: annotation table",
    )
    export.add_argument("--out", help="output path (defaults next to the bundle)")
    return parser


def _cmd_build(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else BuildConfig()
    for key in (
        "corpus", "gazetteer", "eat", "mode", "out", "tau", "padding",
        "entity_radius", "alpha", "beta", "bandwidth", "grid_size", "seed",
    ):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    if args.pyramid is not None:
        try:
            config.pyramid = [int(x) for x in args.pyramid.split(",")]
        except ValueError:
            raise ConfigError(f"--pyramid must be comma-separated integers, got {args.pyramid!r}")
    if args.source_vocabs is not None:
        config.source_vocabs = [v for v in args.source_vocabs.split(",") if v]
    bundle = build_and_save(config)
    print(summarize(bundle))
    print(f"bundle: {config.out}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    bundle = args.bundle or os.environ.get("KNOWMAP_BUNDLE")
    if not bundle:
        raise ConfigError("--bundle (or KNOWMAP_BUNDLE) is required")
    port = args.port if args.port is not None else int(os.environ.get("KNOWMAP_PORT", "8000"))
    host = args.host or os.environ.get("KNOWMAP_HOST", "127.0.0.1")
    if not os.path.exists(bundle):
        raise ConfigError(f"bundle not found: {bundle}")
    serve(bundle, host=host, port=port, ui_dir=args.ui)
    return EXIT_OK


def _cmd_export(args: argparse.Namespace) -> int:
    from .store import export_graphdb_script, load_bundle
    from .topography import export_svg

    bundle = load_bundle(args.bundle)
    stem = os.path.splitext(args.bundle)[0]
    if args.kind == "graphdb":
        out = args.out or stem + ".cypher"
        count = export_graphdb_script(bundle, out)
        print(f"{count} statements -> {out}")
    elif args.kind == "svg":
        out = args.out or stem + ".svg"
        svg = export_svg(bundle.layout, bundle.hierarchy, bundle.contours, bundle.color_scale)
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(svg)
        print(f"figure -> {out}")
    else:  # eat
        from .ingestion import export_eat

        out = args.out or stem + ".eat.tsv"
        export_eat(bundle.table, out)
        print(f"annotation table -> {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "build":
            return _cmd_build(args)
        if args.command == "serve":
            return _cmd_serve(args)
        return _cmd_export(args)
    except (KnowmapError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception:  # noqa: BLE001 — anything else is an internal failure
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

    audit <analysis|all> --config config.json [--out DIR] [--threshold T]
          [--alpha A] [--chunk-limit N]

Exit codes: 0 success, 1 configuration problem, 2 data problem.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DataError
from .report import ANALYSES, load_run_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="audit",
        description="Audit automatic attribution evaluators against human labels.",
    )
    parser.add_argument(
        "analysis",
        choices=ANALYSES + ("all",),
        help="which analysis to run; 'all' runs every analysis in the config",
    )
    parser.add_argument("--config", required=True, help="path to the run config JSON")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument(
        "--threshold", type=float, default=None, help="decision threshold override"
    )
    parser.add_argument(
        "--alpha", type=float, default=None, help="significance level override"
    )
    parser.add_argument(
        "--chunk-limit", type=int, default=None, help="chunk token limit override"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    analyses = None if args.analysis == "all" else [args.analysis]
    try:
        config = load_run_config(
            args.config,
            out_dir=args.out,
            threshold=args.threshold,
            alpha=args.alpha,
            chunk_limit=args.chunk_limit,
            analyses=analyses,
        )
        manifest = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        analysis = getattr(exc, "analysis", None)
        where = f" in analysis {analysis!r}" if analysis else ""
        print(f"data error{where}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(manifest['outputs'])} files to {config.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

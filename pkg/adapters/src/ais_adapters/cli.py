"""Command line batch scorer.

    ais-score --input corpus.jsonl --output scores.jsonl --evaluator name \
              [--mock | --mock-value X | --endpoint URL] [--batch-size N] \
              [--workers N] [--retries N] [--backoff S] [--cache FILE] \
              [--max-rps R] [--timeout S]

Credentials are environment-only: AIS_API_KEY carries the bearer token,
and AIS_ENDPOINT supplies the endpoint when --endpoint is absent.

Exit codes: 0 scored everything; 1 usage or configuration problem;
2 unreadable input; 3 partial output (file written, some ids missing);
4 backend unusable -- unreachable, credentials rejected, or nothing
scored at all (no output written in that case).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .backends import HttpBackend, MockBackend
from .errors import (
    AuthError,
    BackendUnavailable,
    InputFormatError,
    MalformedResponse,
    PartialOutput,
)
from .runner import RetryPolicy, ScoreJob, run_job


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ais-score",
        description="Score claim/evidence pairs with an attribution evaluator backend.",
    )
    parser.add_argument("--input", required=True, help="corpus or chunk-request JSONL")
    parser.add_argument("--output", required=True, help="prediction JSONL to write")
    parser.add_argument("--evaluator", required=True, help="evaluator name for the output")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--retries", type=int, default=3, help="attempts per batch")
    parser.add_argument("--backoff", type=float, default=0.5, help="initial retry delay (s)")
    parser.add_argument("--cache", default=None, help="reuse scores from this JSONL file")
    parser.add_argument("--max-rps", type=float, default=None, help="batch dispatch rate cap")
    parser.add_argument("--timeout", type=float, default=30.0, help="HTTP timeout (s)")
    backend = parser.add_mutually_exclusive_group()
    backend.add_argument(
        "--mock", action="store_true", help="deterministic offline scorer"
    )
    backend.add_argument(
        "--mock-value", type=float, default=None, help="constant offline scorer"
    )
    backend.add_argument(
        "--endpoint", default=None, help="HTTP backend URL (default: $AIS_ENDPOINT)"
    )
    return parser


def _pick_backend(args) -> MockBackend | HttpBackend | None:
    if args.mock:
        return MockBackend()
    if args.mock_value is not None:
        try:
            return MockBackend(constant=args.mock_value)
        except ValueError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return None
    endpoint = args.endpoint or os.environ.get("AIS_ENDPOINT")
    if not endpoint:
        print(
            "usage error: no backend selected; pass --mock, --mock-value or "
            "--endpoint (or set AIS_ENDPOINT)",
            file=sys.stderr,
        )
        return None
    return HttpBackend(
        endpoint, api_key=os.environ.get("AIS_API_KEY"), timeout=args.timeout
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    backend = _pick_backend(args)
    if backend is None:
        return 1
    if args.batch_size < 1 or args.workers < 1 or args.retries < 1:
        print("usage error: batch-size, workers and retries must be >= 1", file=sys.stderr)
        return 1
    job = ScoreJob(
        input_path=Path(args.input),
        output_path=Path(args.output),
        evaluator=args.evaluator,
        batch_size=args.batch_size,
        workers=args.workers,
        cache_path=Path(args.cache) if args.cache else None,
        max_rps=args.max_rps,
    )
    retry = RetryPolicy(attempts=args.retries, backoff_s=args.backoff)
    try:
        result = run_job(job, backend, retry=retry)
    except InputFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except PartialOutput as exc:
        print(f"partial output: {exc}", file=sys.stderr)
        return 3
    except (BackendUnavailable, MalformedResponse, AuthError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 4
    cached = f" ({result.from_cache} from cache)" if result.from_cache else ""
    print(f"scored {result.written} inputs{cached} -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

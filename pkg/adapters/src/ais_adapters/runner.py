"""Batch orchestration: cache, bounded parallelism, retries, output.

The runner never interprets scores; it moves them. All statistics stay
in the analysis toolkit this feeds.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .backends import Backend
from .errors import AuthError, BackendUnavailable, MalformedResponse, PartialOutput
from .io import ScoreRequest, read_cache, read_requests, write_cache, write_predictions


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff_s: float = 0.5
    multiplier: float = 2.0

    def delays(self):
        delay = self.backoff_s
        for _ in range(self.attempts - 1):
            yield delay
            delay *= self.multiplier


@dataclass(frozen=True)
class ScoreJob:
    input_path: Path
    output_path: Path
    evaluator: str
    batch_size: int = 32
    workers: int = 4
    cache_path: Path | None = None
    max_rps: float | None = None


@dataclass
class JobResult:
    written: int
    from_cache: int
    missing: dict[str, str] = field(default_factory=dict)


class _RateGate:
    """Spaces batch dispatches at least 1/max_rps apart."""

    def __init__(self, max_rps: float, sleep: Callable[[float], None]):
        self._interval = 1.0 / max_rps
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_at = 0.0

    def wait(self):
        with self._lock:
            now = time.monotonic()
            if now < self._next_at:
                self._sleep(self._next_at - now)
                now = self._next_at
            self._next_at = now + self._interval


def _score_batch(
    backend: Backend,
    batch: list[ScoreRequest],
    retry: RetryPolicy,
    sleep: Callable[[float], None],
    gate: _RateGate | None,
) -> list[float]:
    pairs = [(r.claim, r.evidence) for r in batch]
    delays = list(retry.delays()) + [None]
    last: Exception | None = None
    for delay in delays:
        if gate is not None:
            gate.wait()
        try:
            return backend.score(pairs)
        except AuthError:
            raise
        except (BackendUnavailable, MalformedResponse) as exc:
            last = exc
            if delay is not None:
                sleep(delay)
    raise last  # type: ignore[misc]


def run_job(
    job: ScoreJob,
    backend: Backend,
    retry: RetryPolicy = RetryPolicy(),
    sleep: Callable[[float], None] = time.sleep,
) -> JobResult:
    """Score every input id once and write the prediction file.

    Cached ids are not re-sent. Batches run on a bounded pool; results
    are assembled and written by this thread alone, in input order. A
    batch that still fails after retries marks its ids missing; the
    (valid) output is written first and PartialOutput raised after, so a
    crashing backend cannot leave half a file behind. Two failures skip
    the write entirely: AuthError aborts at once, and a run where not a
    single score came back re-raises the backend error instead of
    producing an empty file.
    """
    if job.batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {job.batch_size}")
    if job.workers < 1:
        raise ValueError(f"workers must be >= 1, got {job.workers}")

    requests = read_requests(job.input_path)
    cache = (
        read_cache(job.cache_path, job.evaluator) if job.cache_path is not None else {}
    )
    scores: dict[str, float] = {}
    from_cache = 0
    pending: list[ScoreRequest] = []
    for request in requests:
        if request.request_id in cache:
            scores[request.request_id] = cache[request.request_id]
            from_cache += 1
        else:
            pending.append(request)

    batches = [
        pending[i : i + job.batch_size] for i in range(0, len(pending), job.batch_size)
    ]
    missing: dict[str, str] = {}
    failures: list[Exception] = []
    gate = _RateGate(job.max_rps, sleep) if job.max_rps else None

    def handle(batch: list[ScoreRequest]):
        return _score_batch(backend, batch, retry, sleep, gate)

    if batches:
        with ThreadPoolExecutor(max_workers=min(job.workers, len(batches))) as pool:
            outcomes = list(pool.map(lambda b: _run_safely(handle, b), batches))
        for batch, outcome in zip(batches, outcomes):
            if isinstance(outcome, AuthError):
                raise outcome
            if isinstance(outcome, Exception):
                failures.append(outcome)
                for request in batch:
                    missing[request.request_id] = str(outcome)
                continue
            for request, score in zip(batch, outcome):
                scores[request.request_id] = score

    ordered = [
        (r.request_id, scores[r.request_id])
        for r in requests
        if r.request_id in scores
    ]
    if missing and not ordered:
        # total failure: not one score came back (cache included), so the
        # backend is unusable. Surface its error instead of leaving an
        # empty output file behind.
        raise failures[0]
    write_predictions(job.output_path, job.evaluator, ordered)
    if job.cache_path is not None:
        write_cache(job.cache_path, job.evaluator, scores)
    if missing:
        raise PartialOutput(missing, written=len(ordered))
    return JobResult(written=len(ordered), from_cache=from_cache, missing={})


def _run_safely(fn, batch):
    try:
        return fn(batch)
    except Exception as exc:
        return exc

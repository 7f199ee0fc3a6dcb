"""Batch scoring clients for attribution evaluators.

Translates corpus or chunk-request files into prediction files in the
audit toolkit's wire format. No analysis happens here.
"""

from .backends import HttpBackend, MockBackend
from .errors import (
    AdapterError,
    AuthError,
    BackendUnavailable,
    InputFormatError,
    MalformedResponse,
    PartialOutput,
)
from .io import ScoreRequest, read_requests, write_predictions
from .runner import JobResult, RetryPolicy, ScoreJob, run_job

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "AuthError",
    "BackendUnavailable",
    "HttpBackend",
    "InputFormatError",
    "JobResult",
    "MalformedResponse",
    "MockBackend",
    "PartialOutput",
    "RetryPolicy",
    "ScoreJob",
    "ScoreRequest",
    "read_requests",
    "run_job",
    "write_predictions",
]

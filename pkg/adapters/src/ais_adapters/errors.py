"""Adapter failure modes, separated by who has to act on them."""

from __future__ import annotations


class AdapterError(Exception):
    pass


class InputFormatError(AdapterError):
    """The input file is not a readable corpus or chunk-request file."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class AuthError(AdapterError):
    """The backend rejected our credentials; retrying cannot help."""


class BackendUnavailable(AdapterError):
    """The backend could not be reached or answered with a server error."""


class MalformedResponse(AdapterError):
    """The backend answered, but not with one valid score per pair."""


class PartialOutput(AdapterError):
    """Some inputs could not be scored after retries.

    The output file has already been written and is schema-valid; missing
    maps each unscored input id to the reason it failed.
    """

    def __init__(self, missing: dict[str, str], written: int):
        self.missing = dict(missing)
        self.written = written
        preview = "; ".join(
            f"{rid}: {reason}" for rid, reason in list(missing.items())[:3]
        )
        more = "" if len(missing) <= 3 else f" (+{len(missing) - 3} more)"
        super().__init__(
            f"{len(missing)} of {len(missing) + written} inputs unscored: {preview}{more}"
        )

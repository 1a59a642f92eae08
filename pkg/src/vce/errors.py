"""Exception hierarchy and the shared time budget."""

from __future__ import annotations

import os
import time


class VceError(Exception):
    """Domain error: bad input, violated precondition, infeasible request."""


class PreconditionError(VceError, ValueError):
    pass


class SizeLimitError(VceError):
    """Instance exceeds the documented limit of an exact solver."""


class BudgetExceeded(VceError):
    """A search ran past its time budget without finishing."""


class Budget:
    """Wall-clock deadline checked cooperatively inside long searches.

    A budget never changes results, only whether they are produced.
    """

    __slots__ = ("limit_ms", "_deadline", "_ticks")

    def __init__(self, limit_ms: float | None = None):
        self.limit_ms = limit_ms
        self._deadline = None if limit_ms is None else time.monotonic() + limit_ms / 1000.0
        self._ticks = 0

    @classmethod
    def from_env(cls, limit_ms: float | None = None) -> "Budget":
        if limit_ms is None:
            raw = os.environ.get("VCE_BUDGET_MS")
            if raw:
                limit_ms = float(raw)
        return cls(limit_ms)

    def check(self, what: str = "search") -> None:
        if self._deadline is None:
            return
        self._ticks += 1
        if self._ticks & 63:
            return
        if time.monotonic() > self._deadline:
            raise BudgetExceeded(f"{what}: budget of {self.limit_ms:g} ms exceeded")


UNLIMITED = Budget(None)

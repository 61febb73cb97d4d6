"""
Per-call time budget shared by every stage of a search.
"""

import time
from typing import Optional

from rootrat.app.exceptions import SearchTimeout


class SearchBudget:
    """Monotonic deadline; check() raises SearchTimeout once it has passed"""

    def __init__(self, timeout: Optional[float] = None):
        self.timeout = timeout
        self.started = time.monotonic()
        self.deadline = self.started + timeout if timeout else None

    def check(self, stage: str = "search"):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SearchTimeout(f"time budget of {self.timeout}s exhausted during {stage}")

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.started

    @property
    def remaining(self) -> Optional[float]:
        if self.deadline is None:
            return None
        return max(0.0, self.deadline - time.monotonic())


def ensure_budget(budget: Optional[SearchBudget]) -> SearchBudget:
    return budget if budget is not None else SearchBudget(None)

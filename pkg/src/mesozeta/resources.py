"""Shared resource policy: memory budget and truncation errors.

Every allocation that scales with the sieve limit or grid size is checked
against a single budget so that oversized requests fail with a clear
message instead of an OOM kill.  The budget is read from the
``MESOZETA_MEM_BUDGET_MB`` environment variable (default 8192 MB).
"""

import os

DEFAULT_BUDGET_MB = 8192
ENV_VAR = "MESOZETA_MEM_BUDGET_MB"


class MemoryBudgetError(MemoryError):
    """Requested allocation exceeds the configured memory budget."""


class TruncationError(ValueError):
    """A scale range reaches past the sieve limit and truncation was not accepted."""


def mem_budget_mb() -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return DEFAULT_BUDGET_MB
    try:
        val = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_VAR} must be an integer (MB), got {raw!r}") from exc
    if val <= 0:
        raise ValueError(f"{ENV_VAR} must be positive, got {val}")
    return val


def check_budget(nbytes: int, what: str) -> None:
    """Raise MemoryBudgetError if `nbytes` exceeds the budget."""
    budget = mem_budget_mb()
    if nbytes > budget * 1024 * 1024:
        raise MemoryBudgetError(
            f"{what} needs ~{nbytes / 2**20:.0f} MB, over the "
            f"{budget} MB budget ({ENV_VAR})"
        )

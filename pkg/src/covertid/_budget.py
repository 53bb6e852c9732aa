"""Uniform enumeration/allocation budget.

The cap counts enumerated objects (output words, compositions, stored
offsets). COVERTID_BUDGET_CAP overrides the default of 2**20.
"""

import os

from .errors import BudgetExceeded

DEFAULT_CAP = 1 << 20


def budget_cap() -> int:
    raw = os.environ.get("COVERTID_BUDGET_CAP")
    if raw is None:
        return DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise BudgetExceeded(f"COVERTID_BUDGET_CAP is not an integer: {raw!r}") from exc
    if cap < 1:
        raise BudgetExceeded(f"COVERTID_BUDGET_CAP must be positive, got {cap}")
    return cap


def check_budget(count: int, what: str) -> None:
    cap = budget_cap()
    if count > cap:
        raise BudgetExceeded(f"{what} needs {count} > cap {cap}")

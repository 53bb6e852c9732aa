"""Exhaustive small-instance enumeration helpers shared by the exact
error/covertness oracles. Everything here is capped by the enumeration
budget; callers see BudgetExceeded past it."""

from __future__ import annotations

import numpy as np

from ._budget import check_budget
from .channels import Dist


def all_words(n: int, alphabet: int) -> np.ndarray:
    """(alphabet^n, n) matrix of every output word, row r = digits of r in
    base `alphabet`, most significant digit first."""
    count = alphabet**n
    check_budget(count, f"enumeration of {alphabet}^{n} words")
    words = np.empty((count, n), dtype=np.int64)
    r = np.arange(count)
    for j in range(n - 1, -1, -1):
        words[:, j] = r % alphabet
        r //= alphabet
    return words


def log_prod_prob(words: np.ndarray, dist: Dist) -> np.ndarray:
    """Per word, sum of log dist[symbol]; -inf where any symbol has mass 0."""
    with np.errstate(divide="ignore"):
        logs = np.log(dist.as_array())
    return logs[words].sum(axis=1)


def atom_score(words: np.ndarray, positions: np.ndarray, llr: np.ndarray) -> np.ndarray:
    """Per word, sum of llr values at the atom's one-positions."""
    if len(positions) == 0:
        return np.zeros(len(words))
    return llr[words[:, positions]].sum(axis=1)

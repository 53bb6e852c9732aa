"""Channel rows and the divergence toolkit.

Two binary-input channels act on each transmitted word: the legitimate
channel with output rows P0 = W_Y(.|0), P1 = W_Y(.|1) and the adversary's
channel with rows Q0 = W_Z(.|0), Q1 = W_Z(.|1). Everything downstream is a
function of these four rows, so validation computes all derived scalars once
and freezes them in a ChannelPair.

All divergences are in nats. Conventions: 0*log(0/q) = 0, and p > 0 with
q = 0 yields the +inf sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AbsoluteContinuityViolated,
    AlphabetMismatch,
    AssumptionViolated,
)

__all__ = [
    "Dist",
    "ChannelPair",
    "bern",
    "bsc_rows",
    "kl",
    "tv",
    "chi2",
    "pinsker_check",
    "validate_channel_pair",
]

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Dist:
    """A probability distribution on the alphabet {0, ..., K-1}, K >= 2.

    Probabilities must be nonnegative and sum to 1 within 1e-12; they are
    renormalized exactly once at construction so downstream exact
    computations see a consistent normalization.
    """

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        if len(probs) < 2:
            raise AssumptionViolated(f"alphabet size must be >= 2, got {len(probs)}")
        if any(p < 0.0 for p in probs):
            raise AssumptionViolated(f"negative probability in {probs}")
        total = math.fsum(probs)
        if abs(total - 1.0) > _SUM_TOL:
            raise AssumptionViolated(f"probabilities sum to {total!r}, not 1 within {_SUM_TOL}")
        object.__setattr__(self, "probs", tuple(p / total for p in probs))

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, idx: int) -> float:
        return self.probs[idx]

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.probs) if p > 0.0)

    def min_positive(self) -> float:
        return min(p for p in self.probs if p > 0.0)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)


def bern(p: float) -> Dist:
    """Bernoulli(p) as a Dist on {0, 1} with mass p on symbol 1."""
    return Dist((1.0 - p, p))


def bsc_rows(crossover: float) -> tuple[Dist, Dist]:
    """Conditional output rows (row for input 0, row for input 1) of a binary
    symmetric channel with the given crossover probability."""
    if not 0.0 <= crossover <= 1.0:
        raise AssumptionViolated(f"crossover must be in [0,1], got {crossover}")
    return bern(crossover), bern(1.0 - crossover)


def _check_alphabet(p: Dist, q: Dist) -> None:
    if len(p) != len(q):
        raise AlphabetMismatch(f"alphabet sizes differ: {len(p)} vs {len(q)}")


def kl(p: Dist, q: Dist) -> float:
    """KL-divergence D(p||q) in nats; +inf when p is not dominated by q."""
    _check_alphabet(p, q)
    terms = []
    for pi, qi in zip(p.probs, q.probs):
        if pi == 0.0:
            continue
        if qi == 0.0:
            return math.inf
        terms.append(pi * math.log(pi / qi))
    return math.fsum(terms)


def tv(p: Dist, q: Dist) -> float:
    """Variational distance, 0.5 * sum |p - q|, in [0, 1]."""
    _check_alphabet(p, q)
    return 0.5 * math.fsum(abs(pi - qi) for pi, qi in zip(p.probs, q.probs))


def chi2(p: Dist, q: Dist) -> float:
    """Chi-square distance sum (p-q)^2 / q; requires p << q."""
    _check_alphabet(p, q)
    terms = []
    for pi, qi in zip(p.probs, q.probs):
        if qi == 0.0:
            if pi > 0.0:
                raise AbsoluteContinuityViolated("chi2 requires p << q")
            continue
        terms.append((pi - qi) ** 2 / qi)
    return math.fsum(terms)


def pinsker_check(p: Dist, q: Dist) -> bool:
    """tv(p,q) <= sqrt(kl(p,q)/2); always true, exposed as a test oracle."""
    d = kl(p, q)
    return tv(p, q) <= math.sqrt(d / 2.0)


def _dominated(num: Dist, den: Dist) -> bool:
    return all(d > 0.0 or v == 0.0 for v, d in zip(num.probs, den.probs))


def _llr_map(num: Dist, den: Dist) -> tuple[float, ...]:
    # log(num/den) per symbol. Symbols outside both supports get 0.0: they
    # are unreachable under either row and the value is never consumed.
    out = []
    for v, d in zip(num.probs, den.probs):
        if d == 0.0:
            out.append(0.0)
        elif v == 0.0:
            out.append(-math.inf)
        else:
            out.append(math.log(v / d))
    return tuple(out)


@dataclass(frozen=True)
class ChannelPair:
    """The four conditional rows plus every derived scalar the bounds need.

    chi2_q = chi2(q1||q0), d_p = D(p1||p0), d_q = D(q1||q0),
    xi = sum_y p1(y)^2/p0(y) >= 1, mu0/mu1 = min positive masses of q0/q1,
    mu_tilde = min(mu0, mu1), llr_y/llr_z = per-symbol log-likelihood ratios.
    """

    p0: Dist
    p1: Dist
    q0: Dist
    q1: Dist
    chi2_q: float
    d_p: float
    d_q: float
    xi: float
    mu0: float
    mu1: float
    mu_tilde: float
    llr_y: tuple[float, ...]
    llr_z: tuple[float, ...]

    def llr_y_arr(self) -> np.ndarray:
        return np.asarray(self.llr_y, dtype=np.float64)

    def llr_z_arr(self) -> np.ndarray:
        return np.asarray(self.llr_z, dtype=np.float64)


def validate_channel_pair(p0: Dist, p1: Dist, q0: Dist, q1: Dist) -> ChannelPair:
    """Check the standing assumptions and compute all derived scalars.

    Requires p1 << p0 and q1 << q0 (support containment) and q1 != q0;
    p1 = p0 is legal (then d_p = 0 and xi = 1).
    """
    _check_alphabet(p0, p1)
    _check_alphabet(q0, q1)
    if not _dominated(p1, p0):
        raise AbsoluteContinuityViolated("P1 << P0 fails: P1 puts mass where P0 has none")
    if not _dominated(q1, q0):
        raise AbsoluteContinuityViolated("Q1 << Q0 fails: Q1 puts mass where Q0 has none")
    if tv(q0, q1) == 0.0:
        raise AssumptionViolated("Q1 = Q0: the adversary's rows must differ")

    xi = math.fsum(v * v / d for v, d in zip(p1.probs, p0.probs) if v > 0.0)
    return ChannelPair(
        p0=p0,
        p1=p1,
        q0=q0,
        q1=q1,
        chi2_q=chi2(q1, q0),
        d_p=kl(p1, p0),
        d_q=kl(q1, q0),
        xi=xi,
        mu0=q0.min_positive(),
        mu1=q1.min_positive(),
        mu_tilde=min(q0.min_positive(), q1.min_positive()),
        llr_y=_llr_map(p1, p0),
        llr_z=_llr_map(q1, q0),
    )

"""Pulse-position sequences and the per-block output calculus.

A PPM sequence places exactly one 1 inside each of l consecutive length-w
blocks and leaves the length-s tail all zero. It is stored as l block
offsets, O(l) = O(sqrt(n)) memory per sequence, which is what makes
desk-scale codebooks feasible.

The block divergence D(P_out^w || base^w), where P_out^w is the output law
of a single uniformly placed pulse in a length-w block, is computed exactly
by a type-class dynamic program: the likelihood ratio (1/w) * sum_i L(z_i)
depends on z only through its symbol counts, so summing over count
compositions with multinomial weights gives the exact value at cost
C(w + |Z| - 1, |Z| - 1), which is w + 1 for binary outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln

from ._budget import check_budget
from .channels import ChannelPair, Dist
from .errors import AssumptionViolated, InfiniteLLR
from .params import CovertParams

__all__ = [
    "PpmSeq",
    "GenericSeq",
    "sample_ppm",
    "ppm_positions",
    "ppm_log_prob",
    "info_density_y",
    "block_divergence_exact",
    "ppm_support_size",
    "compositions",
]

NEG_INF = -math.inf


@dataclass(frozen=True)
class PpmSeq:
    """l block offsets, each in [0, w); offset o in block b means position
    b*w + o carries the single 1 of that block."""

    offsets: tuple[int, ...]

    def __post_init__(self) -> None:
        offs = tuple(int(o) for o in self.offsets)
        if any(o < 0 for o in offs):
            raise AssumptionViolated(f"negative offset in {offs}")
        object.__setattr__(self, "offsets", offs)


@dataclass(frozen=True)
class GenericSeq:
    """Arbitrary binary word given by its sorted one-positions."""

    ones: tuple[int, ...]

    def __post_init__(self) -> None:
        ones = tuple(int(p) for p in self.ones)
        if any(b <= a for a, b in zip(ones, ones[1:])):
            raise AssumptionViolated(f"one-positions must be strictly increasing: {ones}")
        if ones and ones[0] < 0:
            raise AssumptionViolated(f"negative position in {ones}")
        object.__setattr__(self, "ones", ones)


def sample_ppm(params: CovertParams, rng: np.random.Generator) -> PpmSeq:
    """One draw from the PPM input law: offsets i.i.d. uniform over [0, w)."""
    return PpmSeq(tuple(int(o) for o in rng.integers(0, params.w, size=params.l)))


def ppm_positions(x: PpmSeq, params: CovertParams) -> GenericSeq:
    """Expand block offsets into absolute one-positions."""
    if len(x.offsets) != params.l or any(o >= params.w for o in x.offsets):
        raise AssumptionViolated("offsets do not match the (l, w) geometry")
    return GenericSeq(tuple(b * params.w + o for b, o in enumerate(x.offsets)))


def _as_ones(x: PpmSeq | GenericSeq, params: CovertParams | None) -> tuple[int, ...]:
    if isinstance(x, PpmSeq):
        if params is None:
            raise AssumptionViolated("PpmSeq needs params to resolve positions")
        return ppm_positions(x, params).ones
    return x.ones


def ppm_log_prob(x: PpmSeq | GenericSeq, params: CovertParams) -> float:
    """-l*log(w) on the PPM support, -inf off it."""
    if isinstance(x, PpmSeq):
        if len(x.offsets) != params.l or any(o >= params.w for o in x.offsets):
            return NEG_INF
        return -params.l * math.log(params.w)
    ones = x.ones
    if ones and ones[-1] >= params.n:
        raise AssumptionViolated(f"position {ones[-1]} outside [0, {params.n})")
    if len(ones) != params.l:
        return NEG_INF
    for b, pos in enumerate(ones):
        if not b * params.w <= pos < (b + 1) * params.w:
            return NEG_INF
    return -params.l * math.log(params.w)


def info_density_y(
    x: PpmSeq | GenericSeq,
    y: Sequence[int] | np.ndarray,
    cp: ChannelPair,
    params: CovertParams | None = None,
) -> float:
    """sum over one-positions j of log(P1(y_j)/P0(y_j)); zero positions
    contribute exactly 0. This is log W(y|x) - log P0_product(y)."""
    ones = _as_ones(x, params)
    total = 0.0
    for pos in ones:
        addend = cp.llr_y[int(y[pos])]
        if addend == math.inf:
            raise InfiniteLLR("info density addend is +inf; channel pair not validated")
        total += addend
    return total


def ppm_support_size(params: CovertParams) -> int:
    return params.w**params.l


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of `parts` nonnegative integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def block_divergence_exact(cp: ChannelPair, w: int, which: str = "z") -> float:
    """Exact D(single-pulse block output law || base^w) for one length-w block.

    which = "z" uses the adversary rows (base Q0, pulse Q1), "y" the
    legitimate rows. The pulse position is uniform over the block, so the
    output law is base^w times the mixture ratio (1/w) * sum_i L(z_i)."""
    if w < 1:
        raise AssumptionViolated(f"w must be >= 1, got {w}")
    if which == "z":
        base, pulse = cp.q0, cp.q1
    elif which == "y":
        base, pulse = cp.p0, cp.p1
    else:
        raise ValueError(f"which must be 'y' or 'z', got {which!r}")
    return _mixture_block_divergence(base, pulse, w)


def _mixture_block_divergence(base: Dist, pulse: Dist, w: int) -> float:
    a = len(base)
    check_budget(math.comb(w + a - 1, a - 1), f"compositions of {w} over {a} symbols")
    log_base = [math.log(p) if p > 0.0 else NEG_INF for p in base.probs]
    ratio = [
        (pulse.probs[z] / base.probs[z]) if base.probs[z] > 0.0 else 0.0
        for z in range(a)
    ]
    lg_w = float(gammaln(w + 1))
    terms = []
    for counts in compositions(w, a):
        if any(c > 0 and base.probs[z] == 0.0 for z, c in enumerate(counts)):
            continue
        log_weight = lg_w
        r = 0.0
        for z, c in enumerate(counts):
            if c == 0:
                continue
            log_weight += c * log_base[z] - float(gammaln(c + 1))
            r += c * ratio[z]
        r /= w
        if r > 0.0:
            terms.append(math.exp(log_weight) * r * math.log(r))
    return math.fsum(terms)

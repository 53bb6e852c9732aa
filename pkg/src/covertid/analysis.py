"""Error-probability estimators and exact oracles.

Three error kinds. First: the true message's own receiver rejects. Second:
a different receiver accepts. Third: the no-communication (all-zero input)
word is accepted. Estimators are chunked Monte Carlo with Wilson intervals
and counter-derived streams, so a fixed seed gives identical results at any
worker count; the exact oracle enumerates the output space and is the
ground truth the estimators are tested against.

A trial only ever draws the symbols demapping can read: the union of
one-positions across the scored message's defining atoms, plus the sent
atom's own positions. Symbols outside that union cannot change any score.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._budget import check_budget
from ._enum import all_words, atom_score, log_prod_prob
from ._rng import CHUNK, chunk_sizes, stream
from .channels import ChannelPair
from .codebook import Codebook
from .errors import AssumptionViolated, SameMessage
from .kernels import accumulate_gather

__all__ = [
    "ErrEstimate",
    "CodeSummary",
    "estimate_p1",
    "estimate_p2",
    "estimate_p3",
    "exact_p",
    "run_estimates",
    "summarize",
    "wilson_halfwidth",
    "CSV_HEADER",
    "csv_row",
]

_Z95 = 1.959963984540054

CSV_HEADER = ["kind", "m", "m_prime", "point", "ci95", "trials", "seed"]


@dataclass(frozen=True)
class ErrEstimate:
    kind: str
    point: float
    trials: int
    ci95_half: float
    m: int
    m_prime: int | None
    seed: int


@dataclass(frozen=True)
class CodeSummary:
    max_p1: float
    max_p2_sampled: float
    avg_p3: float
    max_p3: float
    pairs_sampled: int


def wilson_halfwidth(successes: int, trials: int, z: float = _Z95) -> float:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p_hat = successes / trials
    z2 = z * z
    return (
        z
        * math.sqrt(p_hat * (1.0 - p_hat) / trials + z2 / (4.0 * trials * trials))
        / (1.0 + z2 / trials)
    )


def csv_row(est: ErrEstimate) -> list[str]:
    return [
        est.kind,
        str(est.m),
        "" if est.m_prime is None else str(est.m_prime),
        f"{est.point:.17g}",
        f"{est.ci95_half:.17g}",
        str(est.trials),
        str(est.seed),
    ]


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    sym = np.searchsorted(cdf, u, side="right")
    return np.minimum(sym, len(cdf) - 1).astype(np.int64)


def _source_setup(cb: Codebook, source_m: int):
    atoms, wts = cb.codeword(source_m)
    return atoms, np.cumsum(wts)


def _accept_count_ppm(
    cb: Codebook,
    cp: ChannelPair,
    m: int,
    source_m: int | None,
    trials: int,
    seed: int,
    tag: tuple,
) -> int:
    defining = cb.ppm_offsets(m, defining_only=True)
    n_def, l = defining.shape
    uniq = [np.unique(defining[:, b]) for b in range(l)]
    sizes = [len(u) for u in uniq]
    starts = np.concatenate(([0], np.cumsum(sizes)))
    total_cols = int(starts[-1])
    gcols = [
        np.ascontiguousarray(
            starts[b] + np.searchsorted(uniq[b], defining[:, b]), dtype=np.intp
        )
        for b in range(l)
    ]
    cdf0 = np.cumsum(cp.p0.as_array())
    cdf1 = np.cumsum(cp.p1.as_array())
    llr = cp.llr_y_arr()
    if source_m is not None:
        src_offsets = cb.ppm_offsets(source_m)
        _, src_w = cb.codeword(source_m)
        wcdf = np.cumsum(src_w)

    accepted = 0
    for chunk_idx, t in enumerate(chunk_sizes(trials)):
        gen = stream(seed, *tag, chunk_idx)
        if source_m is not None:
            u_atom = gen.random(t)
            u_pulse = gen.random((t, l))
        u_base = gen.random((t, total_cols))
        sym = _inverse_cdf(cdf0, u_base)
        if source_m is not None:
            aidx = np.minimum(np.searchsorted(wcdf, u_atom, side="right"), len(wcdf) - 1)
            sym_pulse = _inverse_cdf(cdf1, u_pulse)
            for b in range(l):
                off_b = src_offsets[aidx, b]
                j = np.searchsorted(uniq[b], off_b)
                j_safe = np.minimum(j, sizes[b] - 1)
                hit = uniq[b][j_safe] == off_b
                rows = np.nonzero(hit)[0]
                sym[rows, starts[b] + j_safe[rows]] = sym_pulse[rows, b]
        vals = llr[sym]
        scores = np.zeros((t, n_def))
        for b in range(l):
            accumulate_gather(scores, vals, gcols[b])
        accepted += int((scores.max(axis=1) > cb.threshold).sum())
    return accepted


def _accept_count_generic(
    cb: Codebook,
    cp: ChannelPair,
    m: int,
    source_m: int | None,
    trials: int,
    seed: int,
    tag: tuple,
) -> int:
    defining = cb.atoms[m][: cb.n_seq]
    cdf0 = np.cumsum(cp.p0.as_array())
    cdf1 = np.cumsum(cp.p1.as_array())
    llr = cp.llr_y_arr()
    if source_m is not None:
        src_atoms, src_w = cb.codeword(source_m)
        wcdf = np.cumsum(src_w)

    accepted = 0
    for chunk_idx, t in enumerate(chunk_sizes(trials)):
        gen = stream(seed, *tag, chunk_idx)
        if source_m is not None:
            u_atom = gen.random(t)
            u_pulse = gen.random((t, cb.n))
        u_base = gen.random((t, cb.n))
        sym = _inverse_cdf(cdf0, u_base)
        if source_m is not None:
            aidx = np.minimum(np.searchsorted(wcdf, u_atom, side="right"), len(wcdf) - 1)
            sym_pulse = _inverse_cdf(cdf1, u_pulse)
            for k in range(len(src_atoms)):
                rows = np.nonzero(aidx == k)[0]
                if len(rows):
                    pos = src_atoms[k]
                    sym[rows[:, None], pos[None, :]] = sym_pulse[rows[:, None], pos[None, :]]
        best = np.full(t, -np.inf)
        for pos in defining:
            np.maximum(best, llr[sym[:, pos]].sum(axis=1), out=best)
        accepted += int((best > cb.threshold).sum())
    return accepted


def _accept_count(
    cb: Codebook,
    cp: ChannelPair,
    m: int,
    source_m: int | None,
    trials: int,
    seed: int,
    tag: tuple,
) -> int:
    fast = cb.ppm_offsets(m, defining_only=True) is not None
    if fast and source_m is not None:
        fast = cb.ppm_offsets(source_m) is not None
    if fast:
        return _accept_count_ppm(cb, cp, m, source_m, trials, seed, tag)
    return _accept_count_generic(cb, cp, m, source_m, trials, seed, tag)


def estimate_p1(
    cb: Codebook, cp: ChannelPair, m: int, trials: int, seed: int | None = None
) -> ErrEstimate:
    """Send message m, count rejections by m's own demap region."""
    if trials < 1:
        raise AssumptionViolated("trials must be >= 1")
    cb._check_m(m)
    seed = cb.master_seed if seed is None else seed
    acc = _accept_count(cb, cp, m, m, trials, seed, ("p1", m))
    rej = trials - acc
    return ErrEstimate("first", rej / trials, trials, wilson_halfwidth(rej, trials), m, None, seed)


def estimate_p2(
    cb: Codebook, cp: ChannelPair, m: int, m_prime: int, trials: int, seed: int | None = None
) -> ErrEstimate:
    """Send m_prime's constituents, count acceptances into m's region."""
    if trials < 1:
        raise AssumptionViolated("trials must be >= 1")
    if m == m_prime:
        raise SameMessage(f"second-kind error needs m != m_prime, got {m}")
    cb._check_m(m)
    cb._check_m(m_prime)
    seed = cb.master_seed if seed is None else seed
    acc = _accept_count(cb, cp, m, m_prime, trials, seed, ("p2", m, m_prime))
    return ErrEstimate(
        "second", acc / trials, trials, wilson_halfwidth(acc, trials), m, m_prime, seed
    )


def estimate_p3(
    cb: Codebook, cp: ChannelPair, m: int, trials: int, seed: int | None = None
) -> ErrEstimate:
    """Send the all-zero word, count acceptances into m's region."""
    if trials < 1:
        raise AssumptionViolated("trials must be >= 1")
    cb._check_m(m)
    seed = cb.master_seed if seed is None else seed
    acc = _accept_count(cb, cp, m, None, trials, seed, ("p3", m))
    return ErrEstimate("third", acc / trials, trials, wilson_halfwidth(acc, trials), m, None, seed)


def exact_p(
    cb: Codebook, cp: ChannelPair, kind: str, m: int, m_prime: int | None = None
) -> float:
    """Exact error probability by full enumeration of the output space."""
    cb._check_m(m)
    alphabet = len(cp.p0)
    check_budget(alphabet**cb.n, f"exact enumeration of {alphabet}^{cb.n} words")
    words = all_words(cb.n, alphabet)
    llr = cp.llr_y_arr()
    best = np.full(len(words), -np.inf)
    for pos in cb.atoms[m][: cb.n_seq]:
        np.maximum(best, atom_score(words, pos, llr), out=best)
    in_region = best > cb.threshold
    base_logp = log_prod_prob(words, cp.p0)

    if kind == "third":
        if m_prime is not None:
            raise AssumptionViolated("third-kind error takes no m_prime")
        with np.errstate(invalid="ignore"):
            probs = np.exp(base_logp[in_region])
        return float(probs.sum())

    if kind == "first":
        if m_prime is not None:
            raise AssumptionViolated("first-kind error takes no m_prime")
        sender = m
        target_mask = ~in_region
    elif kind == "second":
        if m_prime is None:
            raise AssumptionViolated("second-kind error needs m_prime")
        if m_prime == m:
            raise SameMessage(f"second-kind error needs m != m_prime, got {m}")
        cb._check_m(m_prime)
        sender = m_prime
        target_mask = in_region
    else:
        raise ValueError(f"kind must be first/second/third, got {kind!r}")

    atoms, wts = cb.codeword(sender)
    total = 0.0
    for pos, weight in zip(atoms, wts):
        if weight == 0.0:
            continue
        logp = base_logp + atom_score(words, pos, llr)
        with np.errstate(invalid="ignore"):
            probs = np.exp(logp[target_mask])
        total += weight * float(probs.sum())
    return total


def run_estimates(
    cb: Codebook,
    cp: ChannelPair,
    trials: int,
    pair_budget: int = 4096,
    seed: int | None = None,
    workers: int = 1,
) -> list[ErrEstimate]:
    """First and third kind for every message, second kind over a uniformly
    sampled set of ordered pairs. Deterministic for fixed seed."""
    seed = cb.master_seed if seed is None else seed
    m_size = cb.m_size
    total_pairs = m_size * (m_size - 1)
    n_pairs = min(pair_budget, total_pairs)
    if n_pairs == total_pairs:
        pair_ids = np.arange(total_pairs)
    elif n_pairs > 0:
        gen = stream(seed, "pairs")
        pair_ids = np.sort(gen.choice(total_pairs, size=n_pairs, replace=False))
    else:
        pair_ids = np.arange(0)
    pairs = []
    for pid in pair_ids:
        mm = int(pid) // (m_size - 1)
        j = int(pid) % (m_size - 1)
        pairs.append((mm, j + 1 if j >= mm else j))

    tasks = []
    for mm in range(m_size):
        tasks.append(("first", mm, None))
        tasks.append(("third", mm, None))
    for mm, mp in pairs:
        tasks.append(("second", mm, mp))

    def run(task):
        kind, mm, mp = task
        if kind == "first":
            return estimate_p1(cb, cp, mm, trials, seed)
        if kind == "third":
            return estimate_p3(cb, cp, mm, trials, seed)
        return estimate_p2(cb, cp, mm, mp, trials, seed)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, tasks))
    return [run(task) for task in tasks]


def summarize(
    cb: Codebook,
    cp: ChannelPair,
    trials: int,
    pair_budget: int = 4096,
    seed: int | None = None,
    workers: int = 1,
) -> CodeSummary:
    ests = run_estimates(cb, cp, trials, pair_budget, seed, workers)
    p1 = [e.point for e in ests if e.kind == "first"]
    p2 = [e.point for e in ests if e.kind == "second"]
    p3 = [e.point for e in ests if e.kind == "third"]
    return CodeSummary(
        max_p1=max(p1),
        max_p2_sampled=max(p2) if p2 else 0.0,
        avg_p3=math.fsum(p3) / len(p3),
        max_p3=max(p3),
        pairs_sampled=len(p2),
    )

"""Code surgery: refinement, expurgation, and K-type soft covering.

Refinement removes messages whose third-kind error exceeds sqrt(eps3) and
recycles their constituents into the remaining codewords (balanced
round-robin), so the pooled constituent multiset, and with it the
adversary's output distribution, is exactly preserved. Demap regions stay
those of the original n_seq constituents, so each surviving message's
first-kind error grows by at most nu_n = max appended count / n_seq.

Expurgation keeps messages of small fractional Hamming weight and, within
each, drops atoms heavier than (1+kappa_n)*k*n, renormalizing the remaining
mass by g_m >= eps_n/(1+eps_n). Dropping atoms can only inflate the error
integrals by 1/g_m.

The K-type machinery samples K atoms i.i.d. from a codeword and compares
the empirical law's channel output to the codeword's: the expected
variational gap is at most P(info density > zeta) + sqrt(e^zeta / K)/2 for
every threshold zeta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._budget import budget_cap, check_budget
from ._enum import all_words, atom_score, log_prod_prob
from ._rng import chunk_sizes, stream
from .channels import ChannelPair
from .codebook import Codebook
from .errors import (
    AssumptionViolated,
    EmptyAfterExpurgation,
    KMismatch,
    NoGoodMessages,
    SlacknessOutOfRange,
)
from .ppm import compositions

__all__ = [
    "RefinementReport",
    "ExpurgationReport",
    "KTypeApprox",
    "refine",
    "fractional_weights",
    "expurgate",
    "ktype_sample",
    "soft_cover_gap",
    "mean_soft_cover_gap",
    "info_density_tail_exact",
    "distinctness",
    "count_ktype_bound",
    "theory_ktype_budget",
]


@dataclass(frozen=True)
class RefinementReport:
    good_set: tuple[int, ...]
    bad_set: tuple[int, ...]
    nu_n: float
    eps3: float
    # original good id -> list of (atom one-positions, (bad id, bad atom index))
    appended: dict[int, list[tuple[tuple[int, ...], tuple[int, int]]]]


@dataclass(frozen=True)
class ExpurgationReport:
    k: float
    psi: float
    f_h: dict[int, float]
    g_set: tuple[int, ...]
    lambda_n: float
    eps_n: float
    kappa_n: float
    g_m: dict[int, float]
    weight_cap: float
    kept: tuple[int, ...]


@dataclass(frozen=True)
class KTypeApprox:
    k_count: int
    atoms: tuple[tuple[int, ...], ...]
    tv_measured: float | None = None
    bound_rhs: float | None = None
    zeta: float | None = None
    upsilon: float | None = None
    flag: str | None = None


def refine(
    cb: Codebook, p3_estimates: Mapping[int, float], eps3: float
) -> tuple[Codebook, RefinementReport]:
    """Split messages at sqrt(eps3) on the supplied third-kind estimates,
    recycle bad constituents round-robin into good codewords."""
    if eps3 <= 0.0:
        raise SlacknessOutOfRange(f"eps3 must be > 0, got {eps3}")
    for m in range(cb.m_size):
        if m not in p3_estimates:
            raise AssumptionViolated(f"p3_estimates missing message {m}")
        if cb.weights[m] is not None or len(cb.atoms[m]) != cb.n_seq:
            raise AssumptionViolated("refine expects a uniform codebook")
    gate = math.sqrt(eps3)
    good = [m for m in range(cb.m_size) if p3_estimates[m] <= gate]
    bad = [m for m in range(cb.m_size) if p3_estimates[m] > gate]
    if not good:
        raise NoGoodMessages(f"every message exceeds the gate sqrt(eps3) = {gate}")

    pool = [(bm, bi, cb.atoms[bm][bi]) for bm in bad for bi in range(cb.n_seq)]
    appended: dict[int, list[tuple[tuple[int, ...], tuple[int, int]]]] = {
        g: [] for g in good
    }
    new_atoms: dict[int, list[np.ndarray]] = {g: list(cb.atoms[g]) for g in good}
    for j, (bm, bi, atom) in enumerate(pool):
        g = good[j % len(good)]
        new_atoms[g].append(atom)
        appended[g].append((tuple(int(p) for p in atom), (bm, bi)))
    nu_n = (math.ceil(len(pool) / len(good)) / cb.n_seq) if pool else 0.0

    refined = Codebook(
        n=cb.n, l=cb.l, w=cb.w, s=cb.s,
        m_size=len(good), n_seq=cb.n_seq,
        threshold=cb.threshold, master_seed=cb.master_seed,
        atoms=[new_atoms[g] for g in good],
        weights=[None] * len(good),
        params=cb.params,
    )
    report = RefinementReport(
        good_set=tuple(good), bad_set=tuple(bad), nu_n=nu_n, eps3=eps3,
        appended=appended,
    )
    return refined, report


def fractional_weights(cb: Codebook) -> tuple[float, dict[int, float]]:
    """Per message, expected Hamming weight of a constituent divided by n;
    psi is the average over messages."""
    f_h = {}
    for m in range(cb.m_size):
        atoms, wts = cb.codeword(m)
        f_h[m] = math.fsum(wt * len(pos) for pos, wt in zip(atoms, wts)) / cb.n
    psi = math.fsum(f_h.values()) / cb.m_size
    return psi, f_h


def expurgate(
    cb: Codebook,
    cp: ChannelPair,
    delta: float,
    c5: float,
    lambda1: float,
    lambda2: float,
) -> tuple[Codebook, ExpurgationReport]:
    """Keep low-fractional-weight messages, truncate each kept codeword to
    atoms of weight <= (1+kappa_n)*k*n, renormalize by the retained mass.

    lambda1/lambda2 are the measured maxima of the first/second-kind errors
    of cb; their max must be < 1. Demap regions are untouched: dropped atoms
    are zero-weighted in place.
    """
    if delta <= 0.0:
        raise SlacknessOutOfRange(f"delta must be > 0, got {delta}")
    if c5 < 0.0:
        raise SlacknessOutOfRange(f"c5 must be >= 0, got {c5}")
    if min(lambda1, lambda2) < 0.0:
        raise AssumptionViolated("measured error levels cannot be negative")
    lam = max(lambda1, lambda2)
    if lam >= 1.0:
        raise AssumptionViolated(f"max error level must lie in [0,1), got {lam}")
    n = cb.n
    k = math.sqrt(2.0 * delta / cp.chi2_q) * (1.0 / math.sqrt(n) + c5 / n)
    sqrt_lam = math.sqrt(lam)
    eps_n = sqrt_lam / (1.0 - sqrt_lam)
    kappa_n = (1.0 + eps_n) * (1.0 + 1.0 / n) - 1.0
    weight_cap = (1.0 + kappa_n) * k * n

    psi, f_h = fractional_weights(cb)
    g_set = [m for m in range(cb.m_size) if f_h[m] <= (1.0 + 1.0 / n) * k]
    if not g_set:
        raise EmptyAfterExpurgation(
            f"no message has fractional weight <= (1+1/n)k = {(1.0 + 1.0 / n) * k}"
        )

    kept = []
    g_m: dict[int, float] = {}
    new_atoms: list[list[np.ndarray]] = []
    new_weights: list[np.ndarray] = []
    for m in g_set:
        atoms, wts = cb.codeword(m)
        keep = np.array([len(pos) <= weight_cap for pos in atoms])
        mass = float(wts[keep].sum())
        if mass <= 0.0:
            continue
        w_new = np.where(keep, wts, 0.0)
        w_new /= w_new.sum()
        kept.append(m)
        g_m[m] = mass
        new_atoms.append(list(atoms))
        new_weights.append(w_new)
    if not kept:
        raise EmptyAfterExpurgation("every candidate message lost all its mass")

    out = Codebook(
        n=cb.n, l=cb.l, w=cb.w, s=cb.s,
        m_size=len(kept), n_seq=cb.n_seq,
        threshold=cb.threshold, master_seed=cb.master_seed,
        atoms=new_atoms, weights=list(new_weights), params=cb.params,
    )
    report = ExpurgationReport(
        k=k, psi=psi, f_h=f_h, g_set=tuple(g_set),
        lambda_n=lam, eps_n=eps_n, kappa_n=kappa_n,
        g_m=g_m, weight_cap=weight_cap, kept=tuple(kept),
    )
    return out, report


def _effective_weights(
    atoms: Sequence[np.ndarray], weights: Sequence[float] | np.ndarray | None
) -> np.ndarray:
    if weights is None:
        return np.full(len(atoms), 1.0 / len(atoms))
    w = np.asarray(weights, dtype=np.float64)
    if len(w) != len(atoms) or np.any(w < 0.0):
        raise AssumptionViolated("weights must be a nonnegative vector over the atoms")
    return w / w.sum()


def ktype_sample(
    atoms: Sequence[np.ndarray],
    weights: Sequence[float] | np.ndarray | None,
    K: int,
    rng: np.random.Generator,
) -> KTypeApprox:
    """K i.i.d. draws from the codeword law; the empirical law puts mass
    (count / K) on each drawn atom."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    w = _effective_weights(atoms, weights)
    idx = rng.choice(len(atoms), size=K, replace=True, p=w)
    drawn = sorted(tuple(int(p) for p in atoms[i]) for i in idx)
    return KTypeApprox(k_count=K, atoms=tuple(drawn))


def info_density_tail_exact(
    atoms: Sequence[np.ndarray],
    weights: Sequence[float] | np.ndarray | None,
    cp: ChannelPair,
    zeta: float,
) -> float:
    """Exact P(info density > zeta) under (codeword law) x channel.

    Conditioned on an atom of Hamming weight q, the info density is a sum of
    q i.i.d. per-symbol llrs under P1; the tail is summed exactly over
    symbol-count compositions of q.
    """
    w = _effective_weights(atoms, weights)
    p1 = cp.p1.probs
    llr = cp.llr_y
    a = len(p1)

    def tail(q: int) -> float:
        if q == 0:
            return 1.0 if 0.0 > zeta else 0.0
        check_budget(math.comb(q + a - 1, a - 1), f"compositions of {q} over {a} symbols")
        lg_q = math.lgamma(q + 1)
        total = []
        for counts in compositions(q, a):
            if any(c > 0 and p1[y] == 0.0 for y, c in enumerate(counts)):
                continue
            dens = math.fsum(c * llr[y] for y, c in enumerate(counts) if c > 0)
            if dens > zeta:
                log_weight = lg_q + math.fsum(
                    c * math.log(p1[y]) - math.lgamma(c + 1)
                    for y, c in enumerate(counts)
                    if c > 0
                )
                total.append(math.exp(log_weight))
        return math.fsum(total)

    cache: dict[int, float] = {}
    out = 0.0
    for pos, wt in zip(atoms, w):
        if wt == 0.0:
            continue
        q = len(pos)
        if q not in cache:
            cache[q] = tail(q)
        out += wt * cache[q]
    return out


def _output_law_matrix(
    atoms: Sequence[np.ndarray], cp: ChannelPair, n: int
) -> np.ndarray:
    """(num_atoms, |Y|^n) matrix of exact channel output laws per atom."""
    alphabet = len(cp.p0)
    words = all_words(n, alphabet)
    base = log_prod_prob(words, cp.p0)
    llr = cp.llr_y_arr()
    rows = np.empty((len(atoms), len(words)))
    for i, pos in enumerate(atoms):
        with np.errstate(invalid="ignore"):
            rows[i] = np.exp(base + atom_score(words, pos, llr))
    return np.nan_to_num(rows, nan=0.0, posinf=0.0)


def _bound_rhs(tail: float, zeta: float, K: int) -> float:
    try:
        half = 0.5 * math.sqrt(math.exp(zeta) / K)
    except OverflowError:
        half = math.inf
    return tail + half


def mean_soft_cover_gap(
    atoms: Sequence[np.ndarray],
    weights: Sequence[float] | np.ndarray | None,
    K: int,
    cp: ChannelPair,
    n: int,
    zeta: float,
    resamples: int,
    seed: int,
) -> tuple[float, float, float, np.ndarray]:
    """Mean exact variational gap over `resamples` independent K-samples,
    with the closed-form bound. Returns (mean_tv, bound_rhs, tail_prob,
    tv_samples). Small instances only (exact enumeration of the output
    space)."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    w = _effective_weights(atoms, weights)
    rows = _output_law_matrix(atoms, cp, n)
    p_y = w @ rows
    gen = stream(seed, "ktype", K)
    counts = gen.multinomial(K, w, size=resamples)
    p_tilde = (counts @ rows) / K
    tv_samples = 0.5 * np.abs(p_tilde - p_y[None, :]).sum(axis=1)
    tail = info_density_tail_exact(atoms, weights, cp, zeta)
    return float(tv_samples.mean()), _bound_rhs(tail, zeta, K), tail, tv_samples


def soft_cover_gap(
    atoms: Sequence[np.ndarray],
    weights: Sequence[float] | np.ndarray | None,
    K: int,
    cp: ChannelPair,
    n: int,
    zeta: float,
    rng: np.random.Generator,
    trials: int = 4096,
) -> KTypeApprox:
    """One K-sample with its measured variational gap and the bound.

    Exact TV when the output space enumerates within budget, else an
    unbiased mixture-ratio MC estimate over `trials` draws (flag "mc"):
    with a, b the densities of P_Y and P_tilde relative to any common
    reference, V = E_{(P_Y+P_tilde)/2}[|a-b|/(a+b)].
    """
    approx = ktype_sample(atoms, weights, K, rng)
    w = _effective_weights(atoms, weights)
    alphabet = len(cp.p0)

    # counts over the support index set
    key_to_idx = {tuple(int(p) for p in pos): i for i, pos in enumerate(atoms)}
    counts = np.zeros(len(atoms))
    for atom in approx.atoms:
        counts[key_to_idx[atom]] += 1.0

    if alphabet**n <= budget_cap():
        rows = _output_law_matrix(atoms, cp, n)
        p_y = w @ rows
        p_tilde = (counts @ rows) / K
        tv = 0.5 * float(np.abs(p_tilde - p_y).sum())
        flag = "exact"
    else:
        tv = _mc_tv(atoms, w, counts / K, cp, n, rng, trials)
        flag = "mc"

    tail = info_density_tail_exact(atoms, weights, cp, zeta)
    max_q = max((len(pos) for pos in atoms), default=0)
    return KTypeApprox(
        k_count=K,
        atoms=approx.atoms,
        tv_measured=tv,
        bound_rhs=_bound_rhs(tail, zeta, K),
        zeta=zeta,
        upsilon=zeta - max_q * cp.d_p,
        flag=flag,
    )


def _mc_tv(
    atoms: Sequence[np.ndarray],
    w_a: np.ndarray,
    w_b: np.ndarray,
    cp: ChannelPair,
    n: int,
    rng: np.random.Generator,
    trials: int,
) -> float:
    """V(P_a, P_b) for two mixtures over the same atom set, by sampling the
    even mixture and averaging |a-b|/(a+b); the integrand lies in [0,1]."""
    union = np.unique(np.concatenate([np.asarray(pos, dtype=np.int64) for pos in atoms]))
    col = {int(p): j for j, p in enumerate(union)}
    masks = []
    for pos in atoms:
        mk = np.zeros(len(union), dtype=bool)
        for p in pos:
            mk[col[int(p)]] = True
        masks.append(mk)
    mix = 0.5 * (w_a + w_b)
    cdf_mix = np.cumsum(mix)
    cdf0 = np.cumsum(cp.p0.as_array())
    cdf1 = np.cumsum(cp.p1.as_array())
    llr = cp.llr_y_arr()
    total = 0.0
    for t in chunk_sizes(trials):
        u_atom = rng.random(t)
        u1 = rng.random((t, len(union)))
        u0 = rng.random((t, len(union)))
        aidx = np.minimum(np.searchsorted(cdf_mix, u_atom, side="right"), len(atoms) - 1)
        sym0 = np.minimum(np.searchsorted(cdf0, u0, side="right"), len(cdf0) - 1)
        sym1 = np.minimum(np.searchsorted(cdf1, u1, side="right"), len(cdf1) - 1)
        sent_mask = np.stack([masks[i] for i in aidx])
        sym = np.where(sent_mask, sym1, sym0)
        scores = np.stack([llr[sym[:, mk]].sum(axis=1) for mk in masks], axis=1)
        dens = np.exp(scores)
        a = dens @ w_a
        b = dens @ w_b
        total += float((np.abs(a - b) / (a + b)).sum())
    return total / trials


def distinctness(approxes: Sequence[KTypeApprox]) -> bool:
    """True iff no two empirical laws coincide as multisets of atoms."""
    if len(approxes) < 2:
        return True
    k0 = approxes[0].k_count
    for ap in approxes:
        if ap.k_count != k0:
            raise KMismatch(f"mixed K values: {ap.k_count} vs {k0}")
    seen = {ap.atoms for ap in approxes}
    return len(seen) == len(approxes)


def count_ktype_bound(n: int, K: int, alphabet_size: int = 2) -> float:
    """log of the cardinality bound |X|^(nK) on distinct K-type laws over
    length-n words."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if n < 1 or alphabet_size < 2:
        raise ValueError("need n >= 1 and alphabet_size >= 2")
    return n * K * math.log(alphabet_size)


def theory_ktype_budget(
    n: int, kappa_n: float, k: float, d_p: float
) -> tuple[float, float, float]:
    """(log K, zeta, upsilon) at the theory operating point: the weight
    budget (1+kappa_n)*k*n*d_p inflated by powers of (1 + n^(-1/6))."""
    base = (1.0 + kappa_n) * k * n * d_p
    f = 1.0 + n ** (-1.0 / 6.0)
    return math.ceil(f * f * base), f * base, (f - 1.0) * base

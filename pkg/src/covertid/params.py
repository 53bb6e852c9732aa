"""Parameter ledger and explicit finite-n bounds.

Given a validated channel pair, a blocklength n and a covertness budget
delta (plus slack knobs eta, eps, mu), this module derives the whole
parameter ledger of the PPM construction:

    l      = floor(sqrt((2*delta - n^(-1/3)) * n / chi2(Q1||Q0)))
    t      = l / sqrt(n)
    w      = floor(n / l),  s = n - w*l
    R      = (1 - eta)   * t * D(P1||P0)      (log log |M| rate per sqrt(n))
    R'     = (1 - eta/2) * t * D(P1||P0)      (log N rate per sqrt(n))
    gamma  = (1 - eps)   * t * D(P1||P0)      (demap threshold rate)
    tau    = 2 * t * D(Q1||Q0)
    threshold = gamma * sqrt(n)

with the strict ordering R < R' < gamma < t*d_p whenever 0 < eps < eta/2 < 1,
and mu constrained to (0, min{R'-R, gamma-R'}).

It also assembles the explicit finite-n bound ledger. The asymptotic
constants are replaced by Hoeffding rates computed from the actual
log-likelihood-ratio ranges:

    c1 = 2 * eps^2 * d_p^2 * t / r_Y^2      (miss tail of the score sum)
    c4 = 2 * d_q^2 * t / r_Z^2              (adversary-side llr tail)

where r_Y (r_Z) is the llr range over the support of P1 (Q1). Theory-size
quantities N = exp(R'sqrt(n)) and log log |M| = R sqrt(n) are reported but
never allocated; desk-scale m_size and n_seq are independent inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .channels import ChannelPair
from .errors import (
    BlocklengthTooSmall,
    DegenerateRange,
    SlacknessOutOfRange,
    UnboundedLLR,
)

__all__ = [
    "CovertParams",
    "BoundLedger",
    "derive_params",
    "derive_bounds",
    "covert_id_capacity",
    "hoeffding_tail",
]


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class CovertParams:
    n: int
    delta: float
    l: int
    t: float
    w: int
    s: int
    eta: float
    eps: float
    r_rate: float
    r_prime: float
    n_seq_theory: float
    m_theory_log_log: float
    gamma: float
    mu_slack: float
    tau: float
    threshold: float


@dataclass(frozen=True)
class BoundLedger:
    beta_n: float
    alpha_n: float
    beta_prime_n: float
    alpha_prime_n: float
    c1_explicit: float
    c4_explicit: float
    ppm_term_budget: float
    code_term_bound: float


def covert_id_capacity(cp: ChannelPair, delta: float) -> float:
    """sqrt(2*delta / chi2(Q1||Q0)) * D(P1||P0), in nats."""
    if delta < 0.0:
        raise SlacknessOutOfRange(f"delta must be >= 0, got {delta}")
    return math.sqrt(2.0 * delta / cp.chi2_q) * cp.d_p


def derive_params(
    cp: ChannelPair,
    n: int,
    delta: float,
    eta: float,
    eps: float,
    mu_slack: float,
) -> CovertParams:
    """Populate the full parameter ledger; every identity holds exactly."""
    if n < 1:
        raise BlocklengthTooSmall(f"n must be >= 1, got {n}")
    if delta <= 0.0:
        raise SlacknessOutOfRange(f"delta must be > 0, got {delta}")
    n_cbrt_inv = float(n) ** (-1.0 / 3.0)
    if 2.0 * delta <= n_cbrt_inv:
        raise BlocklengthTooSmall(
            f"2*delta = {2.0 * delta} must exceed n^(-1/3) = {n_cbrt_inv}"
        )
    l = math.floor(math.sqrt((2.0 * delta - n_cbrt_inv) * n / cp.chi2_q))
    if l < 1:
        raise BlocklengthTooSmall(f"derived weight l = {l} < 1; increase n or delta")
    if l > n:
        raise BlocklengthTooSmall(f"derived weight l = {l} exceeds n = {n}")
    if not 0.0 < eta < 1.0:
        raise SlacknessOutOfRange(f"eta must lie in (0,1), got {eta}")
    if not 0.0 < eps < eta / 2.0:
        raise SlacknessOutOfRange(f"eps must lie in (0, eta/2) = (0, {eta / 2}), got {eps}")

    sqrt_n = math.sqrt(n)
    t = l / sqrt_n
    w = n // l
    s = n - w * l
    r_rate = (1.0 - eta) * t * cp.d_p
    r_prime = (1.0 - eta / 2.0) * t * cp.d_p
    gamma = (1.0 - eps) * t * cp.d_p
    mu_cap = min(r_prime - r_rate, gamma - r_prime)
    if not 0.0 < mu_slack < mu_cap:
        raise SlacknessOutOfRange(
            f"mu_slack must lie in (0, {mu_cap}), got {mu_slack}"
        )
    return CovertParams(
        n=n,
        delta=delta,
        l=l,
        t=t,
        w=w,
        s=s,
        eta=eta,
        eps=eps,
        r_rate=r_rate,
        r_prime=r_prime,
        n_seq_theory=_exp(r_prime * sqrt_n),
        m_theory_log_log=r_rate * sqrt_n,
        gamma=gamma,
        mu_slack=mu_slack,
        tau=2.0 * t * cp.d_q,
        threshold=gamma * sqrt_n,
    )


def hoeffding_tail(widths: Sequence[float], v: float) -> float:
    """exp(-2 v^2 / sum widths^2): tail bound for a sum of bounded terms
    deviating by at least v from its mean (one side)."""
    if v < 0.0:
        raise ValueError(f"deviation v must be >= 0, got {v}")
    if any(b < 0.0 for b in widths):
        raise ValueError("interval widths must be >= 0")
    denom = math.fsum(b * b for b in widths)
    if denom == 0.0:
        raise DegenerateRange("all interval widths are zero")
    return _exp(-2.0 * v * v / denom)


def _llr_range(llr: tuple[float, ...], support: tuple[int, ...]) -> float:
    vals = [llr[sym] for sym in support]
    if any(math.isinf(x) for x in vals):
        raise UnboundedLLR("log-likelihood ratio is infinite on the support")
    return max(vals) - min(vals)


def derive_bounds(
    params: CovertParams,
    cp: ChannelPair,
    m_size: int,
    n_seq: int,
) -> BoundLedger:
    """Assemble the explicit finite-n bound ledger for a desk-scale code.

    m_size and n_seq are the actually allocated |M| and N (not the theory
    values); they enter only the resolvability bound code_term_bound.
    """
    if m_size < 1 or n_seq < 1:
        raise ValueError("m_size and n_seq must be >= 1")
    n = params.n
    sqrt_n = math.sqrt(n)

    r_y = _llr_range(cp.llr_y, cp.p1.support())
    if r_y == 0.0:
        # Degenerate legitimate channel: the score sum is deterministic, so
        # any positive deviation has probability 0.
        c1 = math.inf
    else:
        c1 = 2.0 * params.eps**2 * cp.d_p**2 * params.t / (r_y * r_y)
    beta_n = _exp(-c1 * sqrt_n)
    mu_term = _exp(-params.mu_slack * sqrt_n / 2.0)
    alpha_n = max(2.0 * beta_n, mu_term)

    r_z = _llr_range(cp.llr_z, cp.q1.support())
    if r_z == 0.0:
        c4 = math.inf
    else:
        c4 = 2.0 * cp.d_q**2 * params.t / (r_z * r_z)

    beta_prime_n = _exp(
        -(params.gamma - params.r_prime) * sqrt_n
        + params.l * (cp.xi - 1.0) / params.w
    )
    alpha_prime_n = max(2.0 * beta_prime_n, mu_term)

    code_term_bound = _exp(params.tau * sqrt_n) / (m_size * n_seq) + 2.0 * n * math.log(
        1.0 + cp.mu_tilde
    ) * _exp(-c4 * sqrt_n)

    return BoundLedger(
        beta_n=beta_n,
        alpha_n=alpha_n,
        beta_prime_n=beta_prime_n,
        alpha_prime_n=alpha_prime_n,
        c1_explicit=c1,
        c4_explicit=c4,
        ppm_term_budget=params.delta - n ** (-1.0 / 3.0) / 3.0,
        code_term_bound=code_term_bound,
    )

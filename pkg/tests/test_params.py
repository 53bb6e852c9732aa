import math

import pytest

from covertid.errors import (
    BlocklengthTooSmall,
    DegenerateRange,
    SlacknessOutOfRange,
)
from covertid.params import (
    covert_id_capacity,
    derive_bounds,
    derive_params,
    hoeffding_tail,
)
from covertid.channels import Dist, bern, validate_channel_pair

# Frozen 50-digit reference evaluations of the ledger formulas at the
# standard channel pair, n=2500, delta=0.1, eta=0.2, eps=0.05.
CAPACITY_01 = 0.5240686417874166
R_RATE = 0.3093692204889397
R_PRIME = 0.34804037305005715
GAMMA = 0.3673759493306159
THRESHOLD = 18.368797466530794
TAU = 0.3659817113356511
C1 = 0.000176
BETA_N = 0.9912386066707673
BETA_PRIME_N = 0.5367689559389368
ALPHA_PRIME_N = 1.0735379118778736
PPM_TERM_BUDGET = 0.07543979000906409
CODE_TERM_BOUND_64_256 = 5530.569393985155
DESK_SINGLE_ATOM_MISS = 0.3026431198  # exact Binomial(11, 0.9) tail at the threshold


def test_capacity_reference_value(cp):
    assert covert_id_capacity(cp, 0.1) == pytest.approx(CAPACITY_01, rel=1e-12)


def test_capacity_rejects_negative_delta(cp):
    with pytest.raises(SlacknessOutOfRange):
        covert_id_capacity(cp, -0.1)


def test_capacity_scales_as_sqrt_delta(cp):
    assert covert_id_capacity(cp, 0.4) == pytest.approx(
        2.0 * covert_id_capacity(cp, 0.1), rel=1e-14
    )


class TestDeriveParams:
    def test_desk_ledger(self, params_desk):
        assert (params_desk.l, params_desk.w, params_desk.s) == (11, 227, 3)
        assert params_desk.t == pytest.approx(0.22, rel=1e-14)
        assert params_desk.r_rate == pytest.approx(R_RATE, rel=1e-12)
        assert params_desk.r_prime == pytest.approx(R_PRIME, rel=1e-12)
        assert params_desk.gamma == pytest.approx(GAMMA, rel=1e-12)
        assert params_desk.threshold == pytest.approx(THRESHOLD, rel=1e-12)
        assert params_desk.tau == pytest.approx(TAU, rel=1e-12)

    def test_tiny_ledger(self, params6):
        assert (params6.l, params6.w, params6.s) == (2, 3, 0)
        assert params6.threshold == pytest.approx(3.164003391364156, rel=1e-12)

    def test_geometry_identity_and_chain_on_grid(self, cp):
        for n in range(50, 2050, 100):
            for ddelta in range(1, 21):
                delta = ddelta / 20.0
                try:
                    p = derive_params(cp, n, delta, 0.2, 0.05, 1e-6)
                except BlocklengthTooSmall:
                    continue
                assert p.n == p.w * p.l + p.s
                assert 0 <= p.s < p.l
                assert p.r_rate < p.r_prime < p.gamma < p.t * cp.d_p

    def test_l_monotone_in_n_and_delta(self, cp):
        ls_n = []
        for n in range(100, 4100, 200):
            ls_n.append(derive_params(cp, n, 0.3, 0.2, 0.05, 1e-6).l)
        assert ls_n == sorted(ls_n)
        ls_d = []
        for ddelta in range(2, 40):
            ls_d.append(derive_params(cp, 1000, ddelta / 20.0, 0.2, 0.05, 1e-6).l)
        assert ls_d == sorted(ls_d)

    def test_rejects_small_n(self, cp):
        with pytest.raises(BlocklengthTooSmall):
            derive_params(cp, 2, 0.1, 0.2, 0.05, 0.001)

    def test_rejects_bad_eta(self, cp):
        with pytest.raises(SlacknessOutOfRange):
            derive_params(cp, 2500, 0.1, 1.2, 0.05, 0.001)

    def test_rejects_eps_outside_window(self, cp):
        with pytest.raises(SlacknessOutOfRange):
            derive_params(cp, 2500, 0.1, 0.2, 0.15, 0.001)

    def test_rejects_mu_outside_window(self, cp):
        with pytest.raises(SlacknessOutOfRange):
            derive_params(cp, 2500, 0.1, 0.2, 0.05, 0.5)

    def test_theory_sizes_reported(self, params_desk):
        assert params_desk.m_theory_log_log == pytest.approx(
            R_RATE * 50.0, rel=1e-12
        )
        assert params_desk.n_seq_theory == pytest.approx(
            math.exp(R_PRIME * 50.0), rel=1e-9
        )


class TestHoeffdingTail:
    def test_value(self):
        assert hoeffding_tail([1.0, 1.0], 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)

    def test_zero_deviation(self):
        assert hoeffding_tail([2.0], 0.0) == 1.0

    def test_degenerate(self):
        with pytest.raises(DegenerateRange):
            hoeffding_tail([0.0, 0.0], 0.5)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            hoeffding_tail([1.0], -0.1)


class TestDeriveBounds:
    def test_desk_ledger_values(self, params_desk, cp):
        b = derive_bounds(params_desk, cp, 64, 256)
        assert b.c1_explicit == pytest.approx(C1, rel=1e-12)
        assert b.beta_n == pytest.approx(BETA_N, rel=1e-12)
        assert b.alpha_n == pytest.approx(2.0 * BETA_N, rel=1e-12)
        assert b.beta_prime_n == pytest.approx(BETA_PRIME_N, rel=1e-12)
        assert b.alpha_prime_n == pytest.approx(ALPHA_PRIME_N, rel=1e-12)
        assert b.ppm_term_budget == pytest.approx(PPM_TERM_BUDGET, rel=1e-12)
        assert b.code_term_bound == pytest.approx(CODE_TERM_BOUND_64_256, rel=1e-12)

    def test_beta_n_dominates_exact_single_atom_miss(self, params_desk, cp):
        # Exact miss probability of one defining constituent: the score is
        # (2k - 11) ln 9 with k ~ Binomial(11, 0.9); compare to the bound.
        miss = 0.0
        for k in range(12):
            if (2 * k - 11) * math.log(9.0) <= params_desk.threshold:
                miss += math.comb(11, k) * 0.9**k * 0.1 ** (11 - k)
        assert miss == pytest.approx(DESK_SINGLE_ATOM_MISS, rel=1e-9)
        b = derive_bounds(params_desk, cp, 64, 256)
        assert miss <= b.beta_n

    def test_rejects_empty_code(self, params_desk, cp):
        with pytest.raises(ValueError):
            derive_bounds(params_desk, cp, 0, 256)

    def test_ternary_output_alphabet(self, params6):
        # llr is -inf off P1's support but finite on it; the bound ledger
        # only ever reads the support values.
        pair = validate_channel_pair(
            Dist((0.5, 0.25, 0.25)), Dist((0.0, 0.25, 0.75)),
            bern(0.2), bern(0.8),
        )
        b = derive_bounds(params6, pair, 4, 4)
        assert 0.0 < b.beta_n < 1.0

    def test_degenerate_channel_gives_zero_tail(self, params6):
        # P1 = P0: every llr is 0 on the support, the score is deterministic
        # and the one-sided tail bound is exp(-inf) = 0.
        pair = validate_channel_pair(bern(0.4), bern(0.4), bern(0.2), bern(0.8))
        b = derive_bounds(params6, pair, 4, 4)
        assert b.beta_n == 0.0

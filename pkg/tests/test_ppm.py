import itertools
import math

import numpy as np
import pytest

from covertid.errors import AssumptionViolated, BudgetExceeded
from covertid.ppm import (
    GenericSeq,
    PpmSeq,
    block_divergence_exact,
    compositions,
    info_density_y,
    ppm_log_prob,
    ppm_positions,
    ppm_support_size,
    sample_ppm,
)
from covertid._rng import stream


def test_sample_offsets_uniform_chi2(params6):
    # 30k draws of (l=2, w=3) offsets: per-block chi-square against uniform
    # with 2 dof stays under the 0.001 quantile 13.8 for a healthy sampler.
    gen = stream(5, "ppm-uniformity")
    counts = np.zeros((2, 3))
    draws = 30000
    for _ in range(draws):
        x = sample_ppm(params6, gen)
        for b, o in enumerate(x.offsets):
            counts[b, o] += 1
    expected = draws / 3.0
    stat = ((counts - expected) ** 2 / expected).sum(axis=1)
    assert stat.max() < 13.8


def test_positions_expansion(params6):
    x = PpmSeq((2, 0))
    assert ppm_positions(x, params6).ones == (2, 3)


def test_positions_reject_bad_geometry(params6):
    with pytest.raises(AssumptionViolated):
        ppm_positions(PpmSeq((0, 3)), params6)
    with pytest.raises(AssumptionViolated):
        ppm_positions(PpmSeq((0, 1, 2)), params6)


def test_log_prob_on_support(params6):
    assert ppm_log_prob(PpmSeq((1, 2)), params6) == pytest.approx(
        -2.0 * math.log(3.0), rel=1e-14
    )
    assert ppm_log_prob(GenericSeq((1, 5)), params6) == pytest.approx(
        -2.0 * math.log(3.0), rel=1e-14
    )


def test_log_prob_off_support(params6):
    # two ones in the same block
    assert ppm_log_prob(GenericSeq((0, 1)), params6) == -math.inf
    # wrong weight
    assert ppm_log_prob(GenericSeq((0,)), params6) == -math.inf
    assert ppm_log_prob(PpmSeq((5, 0)), params6) == -math.inf


def test_log_prob_rejects_out_of_range_position(params6):
    with pytest.raises(AssumptionViolated):
        ppm_log_prob(GenericSeq((1, 7)), params6)


def test_support_size_matches_enumeration():
    for l, w in [(1, 2), (2, 3), (3, 4)]:
        seqs = set()
        for offsets in itertools.product(range(w), repeat=l):
            seqs.add(tuple(b * w + o for b, o in enumerate(offsets)))
        assert len(seqs) == w**l


def test_support_size_function(params6):
    assert ppm_support_size(params6) == 9


def test_info_density_matches_manual(cp, params6):
    y = np.array([1, 0, 1, 1, 0, 0])
    x = PpmSeq((0, 1))  # positions 0 and 4
    got = info_density_y(x, y, cp, params6)
    assert got == pytest.approx(cp.llr_y[1] + cp.llr_y[0], abs=1e-14)
    y2 = np.array([1, 0, 1, 1, 1, 0])
    assert info_density_y(x, y2, cp, params6) == pytest.approx(
        2.0 * math.log(9.0), rel=1e-14
    )


def test_info_density_zero_positions_contribute_nothing(cp, params6):
    y_all_ones = np.ones(6, dtype=np.int64)
    x = GenericSeq((0, 4))
    assert info_density_y(x, y_all_ones, cp) == pytest.approx(
        2.0 * math.log(9.0), rel=1e-14
    )


def test_compositions_count_and_sum():
    for total, parts in [(3, 2), (5, 3), (7, 2)]:
        combos = list(compositions(total, parts))
        assert len(combos) == math.comb(total + parts - 1, parts - 1)
        assert all(sum(c) == total for c in combos)
        assert len(set(combos)) == len(combos)


def _brute_block_divergence(base, pulse, w):
    """D(mixture block law || base^w) by enumerating all words of length w."""
    a = len(base.probs)
    total = 0.0
    for word in itertools.product(range(a), repeat=w):
        q0 = math.prod(base.probs[z] for z in word)
        mix = math.fsum(
            math.prod((pulse.probs if i == j else base.probs)[word[i]] for i in range(w))
            for j in range(w)
        ) / w
        if mix > 0.0:
            total += mix * math.log(mix / q0)
    return total


@pytest.mark.parametrize("w", [1, 2, 3, 5])
def test_block_divergence_vs_brute_force(cp, w):
    got = block_divergence_exact(cp, w, "z")
    want = _brute_block_divergence(cp.q0, cp.q1, w)
    assert got == pytest.approx(want, abs=1e-12)


def test_block_divergence_y_side(cp):
    got = block_divergence_exact(cp, 3, "y")
    want = _brute_block_divergence(cp.p0, cp.p1, 3)
    assert got == pytest.approx(want, abs=1e-12)


def test_block_divergence_rejects_bad_args(cp):
    with pytest.raises(AssumptionViolated):
        block_divergence_exact(cp, 0, "z")
    with pytest.raises(ValueError):
        block_divergence_exact(cp, 3, "x")


def test_block_divergence_budget(cp, monkeypatch):
    monkeypatch.setenv("COVERTID_BUDGET_CAP", "10")
    with pytest.raises(BudgetExceeded):
        block_divergence_exact(cp, 1000, "z")


def test_block_divergence_positive_and_small(cp):
    # Single pulse in a long block: divergence shrinks roughly like 1/w.
    d10 = block_divergence_exact(cp, 10, "z")
    d100 = block_divergence_exact(cp, 100, "z")
    assert 0.0 < d100 < d10

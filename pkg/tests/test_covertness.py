import math

import numpy as np
import pytest

from covertid.codebook import Codebook, generate
from covertid.covertness import (
    covertness_report,
    divergence_ppm_vs_innocent,
    estimate_div_code_vs_ppm,
    exact_output_divergence_small,
)
from covertid.errors import AssumptionViolated
from covertid.ppm import block_divergence_exact


def test_decomposition_identity_small(params6, cp):
    for seed in (0, 1, 2):
        cb = generate(params6, 3, 3, master_seed=seed)
        rep = exact_output_divergence_small(cb, cp, delta=1.2)
        total = rep.term_ppm_vs_innocent + rep.term_code_vs_ppm + rep.term_cross
        assert total == pytest.approx(rep.total_or_bound, abs=1e-9)


def test_enumerated_t1_matches_block_dp(params6, cp, cb6):
    rep = exact_output_divergence_small(cb6, cp, delta=1.2)
    assert rep.term_ppm_vs_innocent == pytest.approx(
        divergence_ppm_vs_innocent(params6, cp), abs=1e-12
    )


def test_ppm_divergence_linear_in_l(params6, cp):
    one_block = block_divergence_exact(cp, params6.w, "z")
    assert divergence_ppm_vs_innocent(params6, cp) == params6.l * one_block


def test_t2_nonnegative_and_t3_sign(params6, cp):
    # Term 2 is a KL divergence; term 3 can take either sign but must be
    # small at the tiny scale.
    for seed in (3, 4):
        cb = generate(params6, 3, 3, master_seed=seed)
        rep = exact_output_divergence_small(cb, cp, delta=1.2)
        assert rep.term_code_vs_ppm >= -1e-12
        assert abs(rep.term_cross) < 1.0


def test_mc_t2_matches_exact(cb6, cp):
    exact = exact_output_divergence_small(cb6, cp, delta=1.2).term_code_vs_ppm
    mean, ci = estimate_div_code_vs_ppm(cb6, cp, trials=8192, seed=21)
    assert abs(mean - exact) <= 4.0 * ci + 1e-9


def test_mc_worker_invariance(cb6, cp):
    a = estimate_div_code_vs_ppm(cb6, cp, trials=2048, seed=5, workers=1)
    b = estimate_div_code_vs_ppm(cb6, cp, trials=2048, seed=5, workers=3)
    assert a == b


def test_mc_deterministic(cb6, cp):
    assert estimate_div_code_vs_ppm(cb6, cp, trials=1024, seed=6) == estimate_div_code_vs_ppm(
        cb6, cp, trials=1024, seed=6
    )


def test_zero_weight_atoms_ignored(cb6, cp):
    weighted = Codebook(
        n=6, l=2, w=3, s=0, m_size=1, n_seq=3,
        threshold=cb6.threshold, master_seed=0,
        atoms=[cb6.atoms[0]], weights=[np.array([0.5, 0.5, 0.0])],
    )
    mean, ci = estimate_div_code_vs_ppm(weighted, cp, trials=512, seed=1)
    assert math.isfinite(mean) and ci >= 0.0


def test_report_exact_path_flags(cb6, cp):
    rep = covertness_report(cb6, cp, delta=1.2)
    assert rep.flag_code_vs_ppm == "exact"
    assert rep.flag_cross == "exact"
    assert rep.term2_ci95 == 0.0
    assert rep.satisfied is (rep.total_or_bound <= 1.2)
    assert rep.ppm_term_ok is (rep.term_ppm_vs_innocent <= rep.ppm_term_budget)


def test_report_satisfied_tristate(cb6, cp):
    assert covertness_report(cb6, cp, delta=100.0).satisfied is True
    assert covertness_report(cb6, cp, delta=1e-9).satisfied is False


def test_report_mc_path(cb6, cp, monkeypatch):
    monkeypatch.setenv("COVERTID_BUDGET_CAP", "32")
    rep = covertness_report(cb6, cp, delta=1.2, trials=1024, seed=8)
    assert rep.flag_code_vs_ppm == "mc"
    assert rep.flag_cross == "bound"
    assert rep.term2_ci95 > 0.0
    # The cross bound dominates the exact cross term.
    monkeypatch.delenv("COVERTID_BUDGET_CAP")
    exact = exact_output_divergence_small(cb6, cp, delta=1.2)
    assert rep.term_cross >= exact.term_cross - 1e-9
    assert rep.total_or_bound >= exact.total_or_bound - rep.term2_ci95 - 1e-9


def test_mc_estimator_requires_ppm_atoms(cp, cb6):
    generic = Codebook(
        n=6, l=2, w=3, s=0, m_size=1, n_seq=1,
        threshold=0.0, master_seed=0,
        atoms=[[np.array([0, 1])]], weights=[None],
    )
    with pytest.raises(AssumptionViolated):
        estimate_div_code_vs_ppm(generic, cp, trials=16)

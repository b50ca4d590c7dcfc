import numpy as np
import pytest

from meanfieldlab.coupling import (
    DeviationRecord,
    coupled_trials,
    estimate_exceedance,
    phase_sup_distance,
    run_coupled_trial,
    sweep_exceedance,
)
from meanfieldlab.dynamics import auto_config
from meanfieldlab.ensemble import InitialLaw, PhaseEnsemble
from meanfieldlab.kernels import ModelParams
from meanfieldlab.mc import wilson_halfwidth
from meanfieldlab.scaling import ExponentSet

LAW = InitialLaw((0.0, 0.0), 1.0, (0.0, 0.0), 0.5)
P = ModelParams(d=2, epsilon=0.8, delta=0.5, r_cut=2.0)
WORKED = ExponentSet(theta=0.04, vartheta=0.02, alpha=0.06, kappa=0.12,
                     gamma_exp=0.05, eta=0.12, mu=0.05)


def small_cfg(p, t_end=0.2):
    return auto_config(p, t_end)


class TestPhaseSupDistance:
    def test_zero_on_identical(self):
        ens = PhaseEnsemble(np.ones((3, 2)), np.zeros((3, 2)))
        assert phase_sup_distance(ens, ens) == 0.0

    def test_max_norm_semantics(self):
        a = PhaseEnsemble(np.zeros((2, 2)), np.zeros((2, 2)))
        b = PhaseEnsemble(np.array([[0.1, 0.0], [0.0, -0.3]]),
                          np.array([[0.0, 0.2], [0.0, 0.0]]))
        assert phase_sup_distance(a, b) == pytest.approx(0.3)

    def test_invariant_under_consistent_relabeling(self):
        rng = np.random.default_rng(0)
        xa, va = rng.normal(size=(2, 10, 2))
        xb, vb = rng.normal(size=(2, 10, 2))
        perm = rng.permutation(10)
        d1 = phase_sup_distance(PhaseEnsemble(xa, va), PhaseEnsemble(xb, vb))
        d2 = phase_sup_distance(PhaseEnsemble(xa[perm], va[perm]),
                                PhaseEnsemble(xb[perm], vb[perm]))
        assert d1 == d2


class TestRunCoupledTrial:
    def test_identical_reference_gives_zero_deviation(self):
        # m = n: the reference ensemble starts exactly as the particle
        # system, so the coupled flows coincide step for step
        n = 12
        rec = run_coupled_trial(n, n, LAW, P, small_cfg(P), alpha=0.06,
                                seed=42)
        assert np.all(rec.sup_deviation == 0.0)
        assert np.all(rec.s_process == 0.0)

    def test_uncoupled_dynamics_gives_zero_deviation(self):
        p0 = ModelParams(d=2, lam=0.0, beta=0.0, gamma_damp=1.0,
                         epsilon=0.8, delta=0.5, r_cut=2.0)
        rec = run_coupled_trial(8, 64, LAW, p0, small_cfg(p0), alpha=0.06,
                                seed=7)
        assert np.all(rec.sup_deviation == 0.0)

    def test_s_process_clipped_and_monotone(self):
        rec = run_coupled_trial(16, 64, LAW, P, small_cfg(P), alpha=0.9,
                                seed=3)
        assert np.all(rec.s_process <= 1.0)
        assert np.all(np.diff(rec.s_process) >= 0.0)
        assert np.all(np.diff(rec.sup_deviation) >= 0.0)
        assert rec.sup_deviation[0] == 0.0

    def test_deterministic_given_seed(self):
        a = run_coupled_trial(10, 40, LAW, P, small_cfg(P), 0.06, seed=11)
        b = run_coupled_trial(10, 40, LAW, P, small_cfg(P), 0.06, seed=11)
        assert np.array_equal(a.sup_deviation, b.sup_deviation)

    def test_rejects_undersized_reference(self):
        with pytest.raises(ValueError, match="m="):
            run_coupled_trial(10, 5, LAW, P, small_cfg(P), 0.06, seed=0)


class TestDeviationRecord:
    def test_invariants_enforced(self):
        t = np.array([0.0, 0.1, 0.2])
        with pytest.raises(ValueError, match="start at zero"):
            DeviationRecord(0, 4, 0.1, t, np.array([0.1, 0.2, 0.3]),
                            np.array([0.0, 0.1, 0.2]))
        with pytest.raises(ValueError, match="non-decreasing"):
            DeviationRecord(0, 4, 0.1, t, np.array([0.0, 0.2, 0.1]),
                            np.array([0.0, 0.1, 0.2]))
        with pytest.raises(ValueError, match="lie in"):
            DeviationRecord(0, 4, 0.1, t, np.array([0.0, 0.2, 0.3]),
                            np.array([0.0, 0.5, 1.5]))


class TestEstimateExceedance:
    @staticmethod
    def synthetic(n, alpha, finals):
        t = np.array([0.0, 1.0])
        out = []
        for f in finals:
            sup = np.array([0.0, f])
            s = np.minimum(1.0, n**alpha * sup)
            out.append(DeviationRecord(0, n, alpha, t, sup, s))
        return out

    def test_all_zero_deviations(self):
        recs = self.synthetic(64, 0.1, [0.0] * 20)
        est = estimate_exceedance(recs, 0.1)
        assert est.hits == 0 and est.p_hat == 0.0

    def test_forced_exceedance(self):
        recs = self.synthetic(64, 0.1, [10.0] * 20)
        est = estimate_exceedance(recs, 0.1)
        assert est.hits == 20 and est.p_hat == 1.0

    def test_bernoulli_coverage(self):
        rng = np.random.default_rng(5)
        n, alpha = 64, 0.1
        thr = n ** (-alpha)
        finals = np.where(rng.uniform(size=1000) < 0.3, 2 * thr, thr / 2)
        est = estimate_exceedance(self.synthetic(n, alpha, finals), alpha)
        assert abs(est.p_hat - 0.3) <= est.ci_halfwidth

    def test_threshold_monotonicity_in_alpha(self):
        rng = np.random.default_rng(6)
        finals = rng.uniform(0, 0.8, size=200)
        n = 64
        hits = []
        for alpha in (0.05, 0.1, 0.2, 0.4):
            est = estimate_exceedance(self.synthetic(n, alpha, finals), alpha)
            hits.append(est.hits)
        assert all(b >= a for a, b in zip(hits, hits[1:]))

    def test_rejects_empty_and_mixed(self):
        with pytest.raises(ValueError):
            estimate_exceedance([], 0.1)
        recs = self.synthetic(64, 0.1, [0.0]) + self.synthetic(32, 0.1, [0.0])
        with pytest.raises(ValueError, match="mix"):
            estimate_exceedance(recs, 0.1)


class TestWilson:
    def test_halfwidth_matches_defining_formula(self):
        import math

        z = 1.959963984540054
        p, n = 0.3, 1000
        expected = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) \
            / (1 + z * z / n)
        assert wilson_halfwidth(300, 1000) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.0283585, abs=1e-6)

    def test_degenerate_counts(self):
        assert wilson_halfwidth(0, 50) > 0.0
        assert wilson_halfwidth(50, 50) > 0.0
        with pytest.raises(ValueError):
            wilson_halfwidth(5, 0)


class TestSweep:
    def test_single_rung_table(self):
        rows, records = sweep_exceedance([8], trials=3, exponents=WORKED,
                                         law=LAW, p_template=ModelParams(d=2),
                                         t_end=0.1, m_factor=2,
                                         master_seed=1, threads=1)
        assert len(rows) == 1
        row = rows[0]
        assert row["N"] == 8
        assert row["epsilon"] == pytest.approx(8 ** (-WORKED.theta), rel=1e-15)
        assert row["R"] * row["delta"] == pytest.approx(1.0, rel=4e-16)
        assert len(records[8]) == 3

    def test_thread_count_does_not_change_results(self):
        kw = dict(n_list=[6, 8], trials=4, exponents=WORKED, law=LAW,
                  p_template=ModelParams(d=2), t_end=0.1, m_factor=2,
                  master_seed=9)
        rows1, _ = sweep_exceedance(threads=1, **kw)
        rows2, _ = sweep_exceedance(threads=2, **kw)
        assert rows1 == rows2

    def test_invalid_exponents_rejected_before_work(self):
        bad = ExponentSet(theta=0.05, vartheta=0.02, alpha=0.06, kappa=0.12,
                          gamma_exp=0.05, eta=0.12, mu=0.05)
        with pytest.raises(ValueError, match="invalid exponents"):
            sweep_exceedance([8], 2, bad, LAW, ModelParams(d=2), 0.1)

    def test_trial_seeds_are_counter_based(self):
        # trial k alone reproduces trial k from the batch
        recs = coupled_trials(6, 12, LAW, P, small_cfg(P), 0.06, trials=3,
                              master_seed=4, stream=0, threads=1)
        from meanfieldlab.mc import trial_seed
        solo = run_coupled_trial(6, 12, LAW, P, small_cfg(P), 0.06,
                                 trial_seed(4, 0, 2))
        assert np.array_equal(solo.sup_deviation, recs[2].sup_deviation)

import math

import numpy as np
import pytest

from meanfieldlab.scaling import (
    ExponentSet,
    attach_scaling,
    compute_n,
    derive_scaling,
    n_components,
    theoretical_bound,
    validate_exponents,
    vartheta_admissible,
)

# worked set: every interval satisfied for d = 2, decay rate 0.02
WORKED = ExponentSet(theta=0.04, vartheta=0.02, alpha=0.06, kappa=0.12,
                     gamma_exp=0.05, eta=0.12, mu=0.05)


class TestExponentSet:
    def test_unit_interval_enforced(self):
        with pytest.raises(ValueError):
            ExponentSet(theta=0.0, vartheta=0.02, alpha=0.06, kappa=0.12,
                        gamma_exp=0.05, eta=0.12, mu=0.05)
        with pytest.raises(ValueError):
            ExponentSet(theta=0.04, vartheta=0.02, alpha=1.0, kappa=0.12,
                        gamma_exp=0.05, eta=0.12, mu=0.05)


class TestDeriveScaling:
    def test_epsilon_arithmetic(self):
        eps, _, _ = derive_scaling(256, 0.05, 0.01)
        assert eps == pytest.approx(0.757858283255199, rel=1e-12)

    def test_delta_arithmetic(self):
        _, delta, r_cut = derive_scaling(10_000, 0.05, 0.01)
        assert delta == pytest.approx(3.295051144911304, rel=1e-12)
        assert r_cut == pytest.approx(0.303485425877029, rel=1e-12)

    def test_cutoffs_are_reciprocal(self):
        for n, th, vt in ((64, 0.04, 0.02), (977, 0.11, 0.3), (2, 0.5, 0.9)):
            _, delta, r_cut = derive_scaling(n, th, vt)
            assert math.isclose(r_cut * delta, 1.0, rel_tol=4e-16)

    def test_rejects_degenerate_count(self):
        with pytest.raises(ValueError):
            derive_scaling(1, 0.05, 0.01)
        with pytest.raises(ValueError):
            derive_scaling(0, 0.05, 0.01)

    def test_monotone_in_count_and_exponents(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 100_000))
            th = float(rng.uniform(0.01, 0.5))
            vt = float(rng.uniform(0.01, 0.9))
            e1, d1, _ = derive_scaling(n, th, vt)
            e2, d2, _ = derive_scaling(2 * n, th, vt)
            assert e2 < e1 and d2 < d1
            e3, _, _ = derive_scaling(n, th * 1.5, vt)
            _, d3, _ = derive_scaling(n, th, vt * 1.5)
            assert e3 < e1 and d3 < d1


class TestValidateExponents:
    def test_worked_set_accepted(self):
        report = validate_exponents(2, WORKED)
        assert report.valid and not report.violations
        assert not report.discrepancies

    def test_theta_boundary_rejected(self):
        # upper endpoint 1/(9d+2) = 1/20 for d = 2, interval is open
        e = ExponentSet(theta=1 / 20, vartheta=0.02, alpha=0.06, kappa=0.12,
                        gamma_exp=0.05, eta=0.12, mu=0.05)
        report = validate_exponents(2, e)
        assert not report.valid
        assert "theta_upper" in report.violations

    def test_alpha_interval_example(self):
        # d = 2, theta = 0.04: alpha interval is (0.04, 0.08)
        rows = {c.name: c for c in validate_exponents(2, WORKED).constraints}
        assert rows["alpha"].lower == pytest.approx(0.04)
        assert rows["alpha"].upper == pytest.approx(0.08)
        assert rows["alpha"].ok

    def test_kappa_interval_example(self):
        e = ExponentSet(theta=0.04, vartheta=0.02, alpha=0.06, kappa=0.101,
                        gamma_exp=0.05, eta=0.12, mu=0.05)
        rows = {c.name: c for c in validate_exponents(2, e).constraints}
        assert rows["kappa"].lower == pytest.approx(0.10)
        assert rows["kappa"].upper == pytest.approx(0.185)
        assert rows["kappa"].ok

    def test_exact_lower_endpoint_rejected(self):
        e = ExponentSet(theta=0.04, vartheta=0.02, alpha=0.04, kappa=0.12,
                        gamma_exp=0.05, eta=0.12, mu=0.05)
        report = validate_exponents(2, e)
        assert "alpha_lower" in report.violations

    def test_rejects_low_dimension(self):
        with pytest.raises(ValueError):
            validate_exponents(1, WORKED)


class TestComputeN:
    def test_worked_example_components(self):
        comps = n_components(2, WORKED)
        assert comps == pytest.approx((0.26, 0.54, 0.02, 0.22, 0.02, 0.02),
                                      abs=1e-12)
        assert compute_n(2, WORKED) == pytest.approx(0.02, abs=1e-12)

    def test_symmetric_kappa_eta_components_coincide(self):
        comps = n_components(2, WORKED)
        assert comps[4] == comps[5]

    def test_rejects_invalid_set(self):
        e = ExponentSet(theta=1 / 20, vartheta=0.02, alpha=0.06, kappa=0.12,
                        gamma_exp=0.05, eta=0.12, mu=0.05)
        with pytest.raises(ValueError, match="fails validation"):
            compute_n(2, e)

    def test_rate_grows_as_kappa_drops_until_gap_binds(self):
        # piecewise-linear landscape in kappa with the other exponents at
        # the worked values: the first component 0.74 - 4 kappa binds near
        # the upper end, the plateau sits at 0.02, and below kappa = 0.12
        # the fifth component kappa - 0.10 binds and the rate falls
        def rate(kappa):
            e = ExponentSet(theta=0.04, vartheta=0.02, alpha=0.06,
                            kappa=kappa, gamma_exp=0.05, eta=0.12, mu=0.05)
            return compute_n(2, e)

        rising = [rate(k) for k in (0.184, 0.182, 0.181)]
        assert rising[0] < rising[1] < rising[2]
        assert rate(0.15) == pytest.approx(0.02, abs=1e-12)
        assert rate(0.11) == pytest.approx(0.01, abs=1e-12)
        assert rate(0.105) < rate(0.11)

    def test_positive_rate_on_random_valid_sets_or_surfaced(self):
        # random interval-valid sets: a non-positive rate can only come
        # from the mu component (its interval does not subtract alpha) and
        # must then be surfaced as a discrepancy, not hidden
        rng = np.random.default_rng(1)
        seen_positive = 0
        seen_discrepancy = 0
        for _ in range(3000):
            d = int(rng.choice([2, 3]))
            theta = float(rng.uniform(1e-4, 1 / (9 * d + 2) - 1e-9))
            a_hi = (1 - (9 * d - 3) * theta) / 5
            alpha = float(rng.uniform(theta, a_hi))
            k_lo = (d - 1) * theta + alpha
            k_hi = (1 - 5 * (d - 1) * theta - alpha) / 4
            g_hi = (1 - (3 * d - 1) * theta - alpha) / 4
            e_lo = (d - 1) * theta + alpha
            e_hi = (1 - (5 * d + 1) * theta - alpha) / 4
            m_hi = (1 - (5 * d + 3) * theta) / 4
            if k_lo >= k_hi or e_lo >= e_hi:
                continue
            e = ExponentSet(
                theta=theta, vartheta=theta / 2, alpha=alpha,
                kappa=float(rng.uniform(k_lo, k_hi)),
                gamma_exp=float(rng.uniform(1e-6, g_hi)),
                eta=float(rng.uniform(e_lo, e_hi)),
                mu=float(rng.uniform(1e-6, m_hi)),
            )
            report = validate_exponents(d, e)
            if not report.valid:
                continue
            if report.n_rate > 0:
                seen_positive += 1
                assert not report.discrepancies
            else:
                seen_discrepancy += 1
                assert report.discrepancies == ["n_rate_nonpositive"]
                comps = n_components(d, e)
                assert min(comps) == comps[3]
        assert seen_positive > 100
        assert seen_discrepancy > 0

    def test_known_mu_counterexample_is_flagged(self):
        # mu close to its upper bound drives the fourth component below
        # zero even though every interval constraint holds
        e = ExponentSet(theta=0.04, vartheta=0.02, alpha=0.06, kappa=0.12,
                        gamma_exp=0.05, eta=0.12, mu=0.119)
        report = validate_exponents(2, e)
        assert report.valid
        assert report.n_rate < 0
        assert report.discrepancies == ["n_rate_nonpositive"]


class TestTheoreticalBound:
    def test_zero_horizon(self):
        assert theoretical_bound(100, 0.0, 2.0, 0.05, 0.02) == pytest.approx(
            2.0 * 100 ** (-0.02))

    def test_small_vartheta_limit(self):
        base = math.e * 64 ** (-0.02)
        val = theoretical_bound(64, 1.0, 1.0, 1e-12, 0.02)
        assert val == pytest.approx(base, rel=1e-9)

    def test_monotone_in_time_and_vartheta(self):
        b = lambda t, vt: theoretical_bound(256, t, 1.0, vt, 0.02)
        assert b(2.0, 0.05) > b(1.0, 0.05) > b(0.5, 0.05)
        assert b(1.0, 0.10) > b(1.0, 0.05)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            theoretical_bound(1, 1.0, 1.0, 0.05, 0.02)
        with pytest.raises(ValueError):
            theoretical_bound(64, 1.0, 0.0, 0.05, 0.02)


class TestReports:
    def test_attach_scaling(self):
        report = attach_scaling(validate_exponents(2, WORKED), 256)
        assert report.n_particles == 256
        assert report.epsilon == pytest.approx(256 ** (-0.04))
        assert report.r_cut * report.delta == pytest.approx(1.0, rel=4e-16)

    def test_vartheta_admissibility_reported(self):
        ok, upper = vartheta_admissible(2, WORKED, c_const=1.0, t=0.5)
        assert upper == pytest.approx(min(0.02 / 0.5, 0.04))
        assert ok == (0.0 < WORKED.vartheta < upper)
        with pytest.raises(ValueError):
            vartheta_admissible(2, WORKED, c_const=0.0, t=0.5)

import math

import numpy as np
import pytest

from meanfieldlab.kernels import (
    ModelParams,
    bump_normalization,
    cutoff_h,
    force_bound,
    linear_drift,
    lipschitz_envelope,
    mollifier,
    mollifier_grad,
    mollifier_grad_bound,
    newtonian_force,
    smoothstep,
    velocity_cutoff,
)

P = ModelParams(d=2, c_d=1.0, epsilon=0.1)


class TestModelParams:
    def test_rejects_low_dimension(self):
        with pytest.raises(ValueError, match="d must be"):
            ModelParams(d=1)

    def test_rejects_nonpositive_scales(self):
        with pytest.raises(ValueError):
            ModelParams(d=2, epsilon=0.0)
        with pytest.raises(ValueError):
            ModelParams(d=2, delta=-0.1)
        with pytest.raises(ValueError):
            ModelParams(d=2, gamma_damp=0.0)

    def test_zero_strengths_allowed(self):
        # lam = beta = 0 turns coupling off, used by the integrator oracles
        p = ModelParams(d=2, lam=0.0, beta=0.0)
        assert p.lam == 0.0 and p.beta == 0.0


class TestNewtonianForce:
    def test_hand_value_outer(self):
        out = newtonian_force([0.2, 0.0], P)
        assert np.allclose(out, [5.0, 0.0], rtol=1e-12)

    def test_origin_is_zero(self):
        assert np.all(newtonian_force([0.0, 0.0], P) == 0.0)

    def test_branches_agree_on_sphere(self):
        rng = np.random.default_rng(1)
        u = rng.standard_normal((1000, 2))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        x = P.epsilon * u
        r = np.linalg.norm(x, axis=1, keepdims=True)
        outer = P.c_d * x / r**2
        inner = P.c_d * P.epsilon ** (-2) * x
        rel = np.abs(outer - inner) / np.max(np.abs(outer))
        assert rel.max() <= 1e-12
        fn = newtonian_force(x, P)
        assert np.allclose(fn, outer, rtol=1e-12)

    def test_bound_and_attainment(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(-2 * P.epsilon, 2 * P.epsilon, size=(100_000, 2))
        norms = np.linalg.norm(newtonian_force(pts, P), axis=1)
        assert norms.max() <= force_bound(P) * (1 + 1e-9)
        u = rng.standard_normal((100, 2))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        on_sphere = np.linalg.norm(newtonian_force(P.epsilon * u, P), axis=1)
        assert on_sphere.min() >= force_bound(P) * (1 - 1e-9)

    def test_batch_matches_pointwise(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-0.5, 0.5, size=(50, 2))
        batch = newtonian_force(pts, P)
        for k in range(50):
            assert np.allclose(batch[k], newtonian_force(pts[k], P), rtol=1e-14)


class TestLipschitzEnvelope:
    def test_outer_value(self):
        assert lipschitz_envelope([0.6, 0.0], P) == pytest.approx(25.0, rel=1e-12)

    def test_inner_value(self):
        assert lipschitz_envelope([0.1, 0.0], P) == pytest.approx(900.0, rel=1e-12)

    def test_monotone_across_branch(self):
        rng = np.random.default_rng(4)
        u = rng.standard_normal((200, 2))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        far = lipschitz_envelope(u * rng.uniform(3 * P.epsilon, 1.0, (200, 1)), P)
        near = lipschitz_envelope(u * rng.uniform(0, 3 * P.epsilon, (200, 1)), P)
        assert far.max() <= near.min() + 1e-12

    def test_envelope_dominates_force_differences(self):
        # zero violations over random pairs closer than 2 eps
        rng = np.random.default_rng(5)
        n = 20_000
        x = rng.uniform(-5 * P.epsilon, 5 * P.epsilon, size=(n, 2))
        u = rng.standard_normal((n, 2))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        y = x + u * rng.uniform(0, 2 * P.epsilon, size=n)[:, None]
        lhs = np.linalg.norm(newtonian_force(x, P) - newtonian_force(y, P), axis=1)
        rhs = lipschitz_envelope(x, P) * np.linalg.norm(x - y, axis=1)
        assert np.all(lhs <= rhs)


class TestMollifier:
    def test_compact_support(self):
        rng = np.random.default_rng(6)
        u = rng.standard_normal((500, 2))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        x = u * rng.uniform(P.epsilon, 3 * P.epsilon, (500, 1))
        assert np.all(mollifier(x, P) == 0.0)

    def test_normalization(self):
        # independent route: tensor trapezoid over the support box
        eps = P.epsilon
        ax = np.linspace(-eps, eps, 513)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        vals = mollifier(np.stack([X.ravel(), Y.ravel()], -1), P).reshape(513, 513)
        mass = np.trapezoid(np.trapezoid(vals, ax, axis=-1), ax)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-P.epsilon, P.epsilon, size=(200, 2))
        assert np.allclose(mollifier(x, P), mollifier(-x, P), rtol=1e-14)

    def test_normalization_is_cached_and_tight(self):
        z1 = bump_normalization(2)
        z2 = bump_normalization(2)
        assert z1 is z2 or z1 == z2
        # radial reference value for d = 2: 2 pi int r exp(-1/(1-r^2)) dr
        r = np.linspace(0.0, 1.0, 200_001)
        s = 1.0 - r * r
        f = np.where(s > 1e-12, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0) * r
        ref = 2 * math.pi * np.trapezoid(f, r)
        assert z1 == pytest.approx(ref, rel=1e-8)


class TestMollifierGrad:
    def test_zero_at_origin_and_outside(self):
        assert np.all(mollifier_grad([0.0, 0.0], P) == 0.0)
        assert np.all(mollifier_grad([P.epsilon, 0.0], P) == 0.0)
        assert np.all(mollifier_grad([0.2, 0.2], P) == 0.0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(8)
        u = rng.standard_normal((100, 2))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        x = u * rng.uniform(0, 0.95 * P.epsilon, (100, 1))
        grad = mollifier_grad(x, P)
        h = 1e-5 * P.epsilon
        fd = np.empty_like(grad)
        for c in range(2):
            e = np.zeros(2)
            e[c] = h
            fd[:, c] = (mollifier(x + e, P) - mollifier(x - e, P)) / (2 * h)
        denom = np.maximum(np.linalg.norm(grad, axis=1),
                           1e-9 * mollifier_grad_bound(P))
        rel = np.linalg.norm(fd - grad, axis=1) / denom
        assert rel.max() <= 1e-6

    def test_magnitude_bound(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-P.epsilon, P.epsilon, size=(50_000, 2))
        mags = np.linalg.norm(mollifier_grad(x, P), axis=1)
        assert mags.max() <= mollifier_grad_bound(P) * (1 + 1e-12)


class TestCutoffH:
    def test_plateaus(self):
        assert cutoff_h(0.99) == 1.0
        assert cutoff_h(0.0) == 1.0
        assert cutoff_h(2.0) == 0.0
        assert cutoff_h(5.0) == 0.0

    def test_midpoint(self):
        assert cutoff_h(1.5) == pytest.approx(0.5, abs=1e-15)

    def test_bridge_derivatives_vanish_at_joins(self):
        # smoothstep S has S(0)=0, S(1)=1, S'=S''=0 at both ends
        for t, val in ((0.0, 0.0), (1.0, 1.0)):
            assert smoothstep(t) == val
        h = 1e-5
        for r0 in (1.0, 2.0):
            d1 = (cutoff_h(r0 + h) - cutoff_h(r0 - h)) / (2 * h)
            d2 = (cutoff_h(r0 + h) - 2 * cutoff_h(r0) + cutoff_h(r0 - h)) / h**2
            assert abs(d1) <= 1e-9
            # centered second difference carries an O(h) term from the
            # third-derivative jump at the join; at h = 1e-5 that is ~2e-4
            assert abs(d2) <= 5e-4

    def test_range_and_monotone(self):
        r = np.linspace(0, 3, 2001)
        vals = cutoff_h(r)
        assert np.all((0.0 <= vals) & (vals <= 1.0))
        assert np.all(np.diff(vals) <= 1e-15)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            cutoff_h(-0.1)
        with pytest.raises(ValueError):
            cutoff_h(np.array([0.5, -0.2]))


class TestVelocityCutoff:
    PV = ModelParams(d=2, r_cut=0.7)

    def test_identity_below_cutoff(self):
        v = np.array([0.3, 0.2])
        assert np.all(velocity_cutoff(v, self.PV) == v)

    def test_zero_past_twice_cutoff(self):
        v = np.array([3 * self.PV.r_cut, 0.0])
        assert np.all(velocity_cutoff(v, self.PV) == 0.0)

    def test_sup_below_twice_cutoff(self):
        rng = np.random.default_rng(10)
        v = rng.standard_normal((1_000_000, 2)) * 2 * self.PV.r_cut
        mags = np.linalg.norm(velocity_cutoff(v, self.PV), axis=1)
        assert mags.max() <= 2 * self.PV.r_cut

    def test_smooth_at_joins(self):
        # centered first differences of each component converge at second
        # order across both joins; second differences settle to a limit
        p = self.PV
        direction = np.array([1.0, 0.0])
        for speed in (p.r_cut, 2 * p.r_cut):
            base = speed * direction

            def comp(h):
                return velocity_cutoff(base + np.array([h, 0.0]), p)[0]

            d1 = []
            d2 = []
            for h in (1e-2, 5e-3, 2.5e-3):
                d1.append((comp(h) - comp(-h)) / (2 * h))
                d2.append((comp(h) - 2 * comp(0.0) + comp(-h)) / h**2)
            # first-difference error drops by ~4x per halving (order 2)
            e1 = [abs(v - d1[-1]) for v in d1[:-1]]
            if e1[0] > 1e-12:
                assert e1[1] <= e1[0] / 2.5
            # second differences form a Cauchy sequence (C^2 at the join)
            assert abs(d2[1] - d2[0]) >= abs(d2[2] - d2[1]) - 1e-6


class TestLinearDrift:
    def test_hand_value(self):
        p = ModelParams(d=2, lam=1.0, beta=1.0, gamma_damp=1.0)
        out = linear_drift([1.0, 0.0], [2.0, 0.0], p)
        assert np.allclose(out, [5.0, 0.0])

    def test_zero_at_origin(self):
        p = ModelParams(d=2)
        assert np.all(linear_drift([0.0, 0.0], [0.0, 0.0], p) == 0.0)

    def test_lipschitz_constant(self):
        p = ModelParams(d=2, lam=0.7, beta=0.4, gamma_damp=1.1)
        lip = max(p.lam, p.gamma_damp + p.beta)
        rng = np.random.default_rng(11)
        for _ in range(200):
            x, xp, v, vp = rng.standard_normal((4, 2))
            lhs = np.linalg.norm(linear_drift(x, v, p) - linear_drift(xp, vp, p))
            rhs = lip * (np.linalg.norm(x - xp) + np.linalg.norm(v - vp))
            assert lhs <= rhs * (1 + 1e-12)

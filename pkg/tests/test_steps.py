"""Single-update steps: branch selection, step lengths, sign rule, and the
guaranteed-decrease inequalities."""

import numpy as np
import pytest

from ncgopt import (
    StepKind,
    exact_hessian_surrogate,
    ih_ncg_step,
    ncg_s_step,
    ncg_step,
    perturbed_hessian_surrogate,
)
from ncgopt.errors import ConfigError, DivergenceError
from ncgopt.rng import run_stream


def _gen(seed):
    return run_stream(seed).child("test").generator()


class TestNcgStep:
    def test_curvature_step_at_symmetric_saddle(self, trig2):
        res = ncg_step(trig2, np.zeros(2), 0.25, 0.1, _gen(5))
        assert res.kind is StepKind.CURVATURE
        assert res.estimate.rayleigh == pytest.approx(-1.0, abs=1e-10)
        # step length 2|v'Hv|/l2 = 2, decrease at least the curvature payoff 2/3
        assert np.linalg.norm(res.x_next) == pytest.approx(2.0, abs=1e-10)
        assert res.observed_decrease >= 2.0 / 3.0 - 1e-9

    def test_gradient_step_on_flat_curvature(self, trig2):
        x = np.array([np.pi / 2, np.pi / 2])
        res = ncg_step(trig2, x, 0.25, 0.1, _gen(6))
        assert res.kind is StepKind.GRADIENT
        np.testing.assert_allclose(res.x_next, x + np.array([1.0, 1.0]), atol=1e-12)
        assert res.predicted_decrease == pytest.approx(1.0)

    def test_tie_break_at_psd_stationary_point(self, trig2):
        x = np.array([np.pi, np.pi])
        res = ncg_step(trig2, x, 0.25, 0.1, _gen(7))
        assert res.kind is StepKind.GRADIENT
        np.testing.assert_allclose(res.x_next, x, atol=1e-12)
        assert res.predicted_decrease == pytest.approx(0.0, abs=1e-20)

    def test_decrease_branch_length_and_sign_invariants(self, trig10, matfac62):
        for p, span in ((trig10, np.pi), (matfac62, 1.2)):
            l1, l2 = p.params.l1, p.params.l2
            rng = np.random.default_rng(99)
            for k in range(120):
                x = rng.uniform(-span, span, p.dim)
                eps_noise = rng.choice([0.5, 0.1, 0.02])
                res = ncg_step(p, x, float(eps_noise), 0.05, _gen(k))
                ray = res.estimate.rayleigh
                payoff_c = 2.0 * max(0.0, -ray) ** 3 / (3.0 * l2**2)
                payoff_g = float(res.grad_used @ res.grad_used) / (2.0 * l1)
                tol = 1e-9 * (1.0 + abs(res.f_x))
                # branch consistency
                assert (res.kind is StepKind.CURVATURE) == (payoff_c > payoff_g)
                assert res.predicted_decrease == pytest.approx(max(payoff_c, payoff_g))
                # guaranteed decrease (curvature payoff clamped at zero)
                if p.iterate_flag(x) is None and p.iterate_flag(res.x_next) is None:
                    assert res.observed_decrease >= res.predicted_decrease - tol
                if res.kind is StepKind.CURVATURE:
                    step_len = float(np.linalg.norm(res.x_next - x))
                    assert step_len == pytest.approx(2.0 * abs(ray) / l2, rel=1e-12)
                    assert float((x - res.x_next) @ res.grad_used) >= -1e-12

    def test_nonfinite_iterate_rejected(self, trig2):
        with pytest.raises(DivergenceError):
            ncg_step(trig2, np.array([np.nan, 0.0]), 0.1, 0.1, _gen(0))

    def test_bad_noise_rejected(self, trig2):
        with pytest.raises(ConfigError):
            ncg_step(trig2, np.zeros(2), -1.0, 0.1, _gen(0))


class TestIhNcgStep:
    def test_exact_surrogate_curvature_branch(self, trig2):
        factory = exact_hessian_surrogate(trig2)
        x = np.zeros(2)
        eps2 = 0.5
        res = ih_ncg_step(trig2, factory(x, None), x, 0.25, 0.1, eps2, _gen(3))
        # condition value: 0.25*1/2 - 5*0.125/24 = 0.099 > 0
        assert res.kind is StepKind.CURVATURE
        assert np.linalg.norm(res.x_next - x) == pytest.approx(eps2 / trig2.params.l2)

    def test_psd_surrogate_takes_gradient_branch(self, trig2):
        factory = exact_hessian_surrogate(trig2)
        x = np.array([2.6, 2.8])  # PSD Hessian, sizable gradient
        res = ih_ncg_step(trig2, factory(x, None), x, 0.25, 0.1, 0.5, _gen(4))
        assert res.kind is StepKind.GRADIENT

    @pytest.mark.parametrize("perturb", [False, True])
    def test_decrease_inequality_on_random_points(self, trig10, perturb):
        eps2 = 0.4
        if perturb:
            factory = perturbed_hessian_surrogate(trig10, eps2 / 12.0, _gen(55))
        else:
            factory = exact_hessian_surrogate(trig10)
        rng = np.random.default_rng(11)
        for k in range(50):
            x = rng.uniform(-np.pi, np.pi, trig10.dim)
            res = ih_ncg_step(trig10, factory(x, None), x, 0.2, 0.1, eps2, _gen(k))
            tol = 1e-9 * (1.0 + abs(res.f_x))
            assert res.observed_decrease >= res.predicted_decrease - tol
            if res.kind is StepKind.CURVATURE:
                assert np.linalg.norm(res.x_next - x) == pytest.approx(
                    eps2 / trig10.params.l2, rel=1e-12
                )


class TestNcgSStep:
    def test_full_batch_matches_inexact_step_with_adjusted_thresholds(self, finitesum_small):
        p = finitesum_small
        n = p.n_components
        full = np.arange(n)
        rng = np.random.default_rng(77)
        eps1, eps2 = 0.05, 0.3
        for k in range(25):
            x = rng.standard_normal(p.dim)
            res = ncg_s_step(p, x, full, full, 0.15, 0.1, eps1, eps2, _gen(k))
            # full-batch sample mean equals the exact gradient
            np.testing.assert_allclose(res.grad_used, p.gradient(x), atol=1e-12)
            ray = res.estimate.rayleigh
            lhs = -(eps2**2) * ray / (2 * p.params.l2**2) - 11 * eps2**3 / (48 * p.params.l2**2)
            rhs = float(res.grad_used @ res.grad_used) / (4 * p.params.l1) - eps1**2 / (
                8 * p.params.l1
            )
            assert (res.kind is StepKind.CURVATURE) == (lhs > rhs)
            # same update vector as the inexact step given the same direction
            if res.kind is StepKind.CURVATURE:
                assert np.linalg.norm(res.x_next - x) == pytest.approx(
                    eps2 / p.params.l2, rel=1e-12
                )
            else:
                np.testing.assert_allclose(
                    res.x_next, x - res.grad_used / p.params.l1, atol=1e-14
                )

    def test_gradient_branch_on_large_gradient_psd_point(self, finitesum_small):
        p = finitesum_small
        rng = np.random.default_rng(5)
        # search for a point with sizable sub-sampled gradient and PSD Hessian
        for _ in range(200):
            x = 3.0 * rng.standard_normal(p.dim)
            h = p.dense_hessian(x)
            g = p.gradient(x)
            if np.linalg.eigvalsh(h)[0] >= 0 and np.linalg.norm(g) > 0.02:
                break
        else:
            pytest.skip("no suitable point found")
        full = np.arange(p.n_components)
        res = ncg_s_step(p, x, full, full, 0.2, 0.1, 0.01, 0.2, _gen(9))
        assert res.kind is StepKind.GRADIENT

    def test_conditional_decrease_full_batch(self, finitesum_small):
        p = finitesum_small
        full = np.arange(p.n_components)
        rng = np.random.default_rng(31)
        for k in range(50):
            x = rng.standard_normal(p.dim)
            res = ncg_s_step(p, x, full, full, 0.1, 0.1, 0.05, 0.25, _gen(k))
            tol = 1e-9 * (1.0 + abs(res.f_x))
            assert res.observed_decrease >= res.predicted_decrease - tol

    def test_empty_samples_rejected(self, finitesum_small):
        with pytest.raises(ConfigError):
            ncg_s_step(
                finitesum_small,
                np.zeros(finitesum_small.dim),
                [],
                [0],
                0.1,
                0.1,
                0.1,
                0.2,
                _gen(0),
            )

    def test_needs_components(self, trig2):
        with pytest.raises(ConfigError):
            ncg_s_step(trig2, np.zeros(2), [0], [0], 0.1, 0.1, 0.1, 0.2, _gen(0))


class TestSignConvention:
    def test_zero_gradient_uses_plus_sign(self, trig2):
        # at the saddle the gradient is exactly zero: sign(0) = +1 means the
        # step moves along -v
        res = ncg_step(trig2, np.zeros(2), 0.25, 0.1, _gen(12))
        assert res.kind is StepKind.CURVATURE
        np.testing.assert_allclose(res.x_next, -2.0 * res.estimate.v, atol=1e-12)

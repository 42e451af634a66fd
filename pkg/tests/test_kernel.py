"""Closed-form Gaussians of the residual-shifting chain."""

import math

import numpy as np
import pytest

from resshift.core.errors import ShapeError, StepRangeError
from resshift.core.kernel import (
    GaussianParams,
    elbo_weight,
    forward_chain,
    forward_transition_params,
    marginal_params,
    posterior_params,
    reverse_step,
    sample_marginal,
)
from resshift.core.rng import chain_rng, make_rng
from resshift.core.schedule import Schedule


class TestForwardTransition:
    def test_worked_example(self, worked_schedule):
        q = forward_transition_params(0.5, 0.2, 0.8, 1, worked_schedule)
        assert float(q.mean) == pytest.approx(0.56)
        assert q.var == pytest.approx(0.4)

    def test_zero_residual_keeps_the_state(self, resshift_schedule, rng):
        x_prev = rng.standard_normal((1, 4, 4))
        x0 = rng.uniform(size=(1, 4, 4))
        q = forward_transition_params(x_prev, x0, x0, 5, resshift_schedule)
        np.testing.assert_array_equal(q.mean, x_prev)

    def test_small_kappa_is_nearly_deterministic(self):
        s = Schedule.from_sequence([0.1, 0.5, 0.999], kappa=1e-8)
        assert forward_transition_params(0.0, 0.0, 1.0, 2, s).var < 1e-15

    def test_shape_mismatch(self, resshift_schedule):
        with pytest.raises(ShapeError):
            forward_transition_params(np.zeros(3), np.zeros(3), np.zeros(4), 1, resshift_schedule)

    def test_step_out_of_range(self, resshift_schedule):
        with pytest.raises(StepRangeError):
            forward_transition_params(0.0, 0.0, 1.0, 0, resshift_schedule)


class TestMarginal:
    def test_worked_example(self):
        s = Schedule.from_sequence([0.25, 0.5, 0.999], kappa=2.0)
        q = marginal_params(0.2, 0.8, 1, s)
        assert float(q.mean) == pytest.approx(0.35)
        assert q.var == pytest.approx(1.0)

    def test_final_state_approximates_lq(self):
        s = Schedule.from_sequence([0.1, 0.5, 0.999], kappa=1e-3)
        q = marginal_params(0.2, 0.8, 3, s)
        assert float(q.mean) == pytest.approx(0.8 * 0.999 + 0.2 * 0.001)
        assert q.var == pytest.approx(1e-6 * 0.999)

    def test_chapman_kolmogorov_identity(self, resshift_schedule):
        k2 = resshift_schedule.kappa**2
        for t in range(2, resshift_schedule.T + 1):
            prev = marginal_params(0.2, 0.8, t - 1, resshift_schedule)
            pushed = forward_transition_params(prev.mean, 0.2, 0.8, t, resshift_schedule)
            here = marginal_params(0.2, 0.8, t, resshift_schedule)
            assert float(pushed.mean) == pytest.approx(float(here.mean), abs=1e-15)
            step_var = k2 * resshift_schedule.alpha_at(t)
            assert prev.var + step_var == pytest.approx(here.var, abs=1e-12)

    def test_t_zero_is_rejected(self, resshift_schedule):
        with pytest.raises(StepRangeError):
            marginal_params(0.2, 0.8, 0, resshift_schedule)


class TestSampleMarginal:
    def test_zero_noise_returns_the_mean(self, resshift_schedule, rng):
        x0 = rng.uniform(size=(1, 8, 8))
        y0 = rng.uniform(size=(1, 8, 8))
        x_t = sample_marginal(x0, y0, 7, resshift_schedule, noise=np.zeros((1, 8, 8)))
        np.testing.assert_array_equal(x_t, marginal_params(x0, y0, 7, resshift_schedule).mean)

    def test_fixed_seed_is_bit_identical(self, resshift_schedule):
        x0 = np.full((1, 8, 8), 0.2)
        y0 = np.full((1, 8, 8), 0.8)
        a = sample_marginal(x0, y0, 3, resshift_schedule, rng=make_rng(5, 1, 2))
        b = sample_marginal(x0, y0, 3, resshift_schedule, rng=make_rng(5, 1, 2))
        assert a.tobytes() == b.tobytes()

    def test_requires_rng_or_noise(self, resshift_schedule):
        with pytest.raises(ValueError):
            sample_marginal(0.2, 0.8, 3, resshift_schedule)

    def test_noise_shape_must_match(self, resshift_schedule):
        with pytest.raises(ShapeError):
            sample_marginal(np.zeros(3), np.zeros(3), 3, resshift_schedule, noise=np.zeros(4))

    @pytest.mark.parametrize("t", [1, 8, 15])
    def test_empirical_moments(self, resshift_schedule, t):
        n = 100_000
        q = marginal_params(0.2, 0.8, t, resshift_schedule)
        draws = sample_marginal(
            np.full(n, 0.2), np.full(n, 0.8), t, resshift_schedule, rng=make_rng(0, "moments", t)
        )
        assert abs(draws.mean() - float(q.mean)) < 4 * q.std / math.sqrt(n)
        assert abs(draws.var(ddof=1) - q.var) / q.var < 0.02


class TestForwardChain:
    def test_composition_matches_marginal(self, resshift_schedule):
        n = 100_000
        t = 10
        q = marginal_params(0.2, 0.8, t, resshift_schedule)
        draws = forward_chain(np.full(n, 0.2), np.full(n, 0.8), t, resshift_schedule, make_rng(3))
        assert abs(draws.mean() - float(q.mean)) < 4 * q.std / math.sqrt(n)
        assert abs(draws.var(ddof=1) - q.var) / q.var < 0.02


class TestPosterior:
    def test_worked_example(self, worked_schedule):
        q = posterior_params(0.5, 0.2, 2, worked_schedule)
        assert float(q.mean) == pytest.approx(0.35)
        assert q.var == pytest.approx(0.2)

    def test_first_step_is_a_point_mass(self, resshift_schedule, rng):
        x_t = rng.standard_normal((1, 4, 4))
        x0 = rng.uniform(size=(1, 4, 4))
        q = posterior_params(x_t, x0, 1, resshift_schedule)
        np.testing.assert_array_equal(q.mean, x0)
        assert q.var == 0.0

    def test_shape_mismatch(self, resshift_schedule):
        with pytest.raises(ShapeError):
            posterior_params(np.zeros((2, 2)), np.zeros((3, 3)), 4, resshift_schedule)


class TestReverseStep:
    def test_worked_example(self, worked_schedule):
        x = reverse_step(0.6, 0.3, 2, worked_schedule, noise=np.zeros(()))
        assert float(x) == pytest.approx(0.45)
        std = posterior_params(0.6, 0.3, 2, worked_schedule).std
        assert std == pytest.approx(0.447214, abs=1e-6)

    def test_noise_is_scaled_by_posterior_std(self, worked_schedule):
        x = reverse_step(0.6, 0.3, 2, worked_schedule, noise=np.ones(()))
        assert float(x) == pytest.approx(0.45 + math.sqrt(0.2))

    def test_first_step_ignores_noise(self, resshift_schedule, rng):
        x0_hat = rng.uniform(size=(1, 4, 4))
        x_1 = rng.standard_normal((1, 4, 4))
        out = reverse_step(x_1, x0_hat, 1, resshift_schedule, rng=make_rng(0))
        np.testing.assert_array_equal(out, x0_hat)

    def test_perfect_predictor_inverts_the_noiseless_chain(self, resshift_schedule, rng):
        s = resshift_schedule
        x0 = rng.uniform(size=(1, 6, 6))
        y0 = rng.uniform(size=(1, 6, 6))
        x = marginal_params(x0, y0, s.T, s).mean
        for t in range(s.T, 0, -1):
            x = reverse_step(x, x0, t, s, noise=np.zeros(x.shape))
            if t > 1:
                np.testing.assert_allclose(x, marginal_params(x0, y0, t - 1, s).mean, atol=1e-12)
        assert np.max(np.abs(x - x0)) < 1e-10

    def test_chain_rng_streams_differ_per_step(self):
        a = chain_rng(0, chain_id=3, t=4).standard_normal(8)
        b = chain_rng(0, chain_id=3, t=5).standard_normal(8)
        assert not np.array_equal(a, b)


class TestElboWeight:
    def test_worked_example(self, worked_schedule):
        w = elbo_weight(2, worked_schedule)
        assert w.value == pytest.approx(0.625)
        assert not w.is_sentinel

    def test_first_step_sentinel(self, resshift_schedule):
        w = elbo_weight(1, resshift_schedule)
        assert w.value == 1.0
        assert w.is_sentinel
        assert float(w) == 1.0

    def test_finite_and_positive(self, resshift_schedule, ldm_schedule):
        for s in (resshift_schedule, ldm_schedule):
            weights = [elbo_weight(t, s).value for t in range(2, s.T + 1)]
            assert all(math.isfinite(w) and w > 0 for w in weights)


def test_gaussian_params_rejects_negative_variance():
    with pytest.raises(ValueError):
        GaussianParams(mean=np.zeros(1), var=-1e-3)

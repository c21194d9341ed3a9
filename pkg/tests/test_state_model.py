"""Transition and process-noise closed forms against independent oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bqode import IWPModel, process_noise, transition_matrix, transition_pair
from oracles import expm_series, process_noise_quadrature


class TestTransitionMatrix:
    def test_once_integrated_step(self):
        model = IWPModel(q=2, sigma2=1.0, damping=(1.0,))
        np.testing.assert_allclose(
            transition_matrix(model, 0.5), [[1.0, 0.5], [0.0, 1.0]], rtol=0, atol=0
        )

    def test_unit_diagonal_and_lower_zero(self):
        model = IWPModel(q=3, sigma2=2.0, damping=(0.7, 1.9))
        A = transition_matrix(model, 0.83)
        np.testing.assert_array_equal(np.diag(A), np.ones(3))
        assert A[1, 0] == A[2, 0] == A[2, 1] == 0.0

    def test_damping_product_in_upper_corner(self):
        model = IWPModel(q=3, sigma2=1.0, damping=(1.0, 2.0))
        A = transition_matrix(model, 1.0)
        assert A[0, 2] == pytest.approx(1.0, abs=1e-15)
        series = expm_series(model.drift(), 1.0)
        np.testing.assert_allclose(A, series, rtol=1e-12)

    def test_rejects_nonpositive_step(self):
        model = IWPModel(q=2, sigma2=1.0)
        with pytest.raises(ValueError):
            transition_matrix(model, 0.0)
        with pytest.raises(ValueError):
            transition_matrix(model, -0.1)

    @settings(max_examples=60, deadline=None)
    @given(
        q=st.integers(1, 4),
        h1=st.floats(0.01, 2.0),
        h2=st.floats(0.01, 2.0),
        seed=st.integers(0, 2**31),
    )
    def test_semigroup_property(self, q, h1, h2, seed):
        damping = tuple(np.random.default_rng(seed).uniform(0.5, 3.0, size=q - 1))
        model = IWPModel(q=q, sigma2=1.0, damping=damping)
        lhs = transition_matrix(model, h1) @ transition_matrix(model, h2)
        rhs = transition_matrix(model, h1 + h2)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


class TestProcessNoise:
    def test_brownian_motion_variance(self):
        model = IWPModel(q=1, sigma2=1.0, damping=())
        np.testing.assert_allclose(process_noise(model, 0.3), [[0.3]], rtol=1e-15)

    def test_once_integrated_closed_form(self):
        model = IWPModel(q=2, sigma2=1.0, damping=(1.0,))
        h = 0.5
        expected = [[h**3 / 3, h**2 / 2], [h**2 / 2, h]]
        np.testing.assert_allclose(process_noise(model, h), expected, rtol=1e-15)

    def test_matches_integral_oracle_with_damping(self, rng):
        model = IWPModel(q=3, sigma2=0.1, damping=(1.0, 2.0))
        for h in rng.uniform(0.01, 1.0, size=5):
            Q = process_noise(model, h)
            np.testing.assert_allclose(Q, process_noise_quadrature(model, h), rtol=1e-10)

    def test_rejects_nonpositive_step(self):
        model = IWPModel(q=2, sigma2=1.0)
        with pytest.raises(ValueError):
            process_noise(model, 0.0)

    def test_eigenvalues_nonnegative(self, rng):
        for q in (1, 2, 3, 4):
            damping = tuple(rng.uniform(0.5, 3.0, size=q - 1))
            model = IWPModel(q=q, sigma2=rng.uniform(0.01, 2.0), damping=damping)
            Q = process_noise(model, rng.uniform(0.01, 2.0))
            w = np.linalg.eigvalsh(Q)
            assert w.min() >= -1e-12 * np.linalg.norm(Q)


class TestModelValidation:
    def test_damping_length(self):
        with pytest.raises(ValueError):
            IWPModel(q=3, sigma2=1.0, damping=(1.0,))

    def test_default_damping_counts_up(self):
        assert IWPModel(q=4, sigma2=1.0).damping == (1.0, 2.0, 3.0)

    def test_invalid_order_and_variance(self):
        with pytest.raises(ValueError):
            IWPModel(q=0, sigma2=1.0)
        with pytest.raises(ValueError):
            IWPModel(q=2, sigma2=0.0)

    def test_transition_pair_carries_step(self):
        model = IWPModel(q=2, sigma2=1.0)
        pair = transition_pair(model, 0.25)
        assert pair.h == 0.25
        np.testing.assert_array_equal(pair.A, transition_matrix(model, 0.25))
        np.testing.assert_array_equal(pair.Qh, process_noise(model, 0.25))

    def test_derivative_basis_strips_damping(self):
        model = IWPModel(q=3, sigma2=0.1, damping=(1.0, 2.0))
        flat = model.in_derivative_basis()
        assert flat.damping == (1.0, 1.0)
        assert flat.sigma2 == model.sigma2
        undamped = IWPModel(q=3, sigma2=0.1, damping=(1.0, 1.0))
        assert undamped.in_derivative_basis() is undamped

"""Numerics layer: validated wrappers and the first-crossing scan."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reset_lab import DimensionError
from reset_lab.numerics import (
    as_matrix,
    as_vector,
    eigenvalues,
    expm,
    first_crossing,
    is_hurwitz,
    is_schur,
    max_symmetric_eigenvalue,
    min_symmetric_eigenvalue,
    real_eigenvalues,
    spectral_radius,
    symmetric_eigenvalues,
    symmetrize,
)
from conftest import taylor_expm


def _bounded_matrix(n):
    return st.lists(
        st.lists(st.floats(-3, 3, allow_nan=False), min_size=n, max_size=n),
        min_size=n,
        max_size=n,
    ).map(lambda rows: np.array(rows))


class TestShapes:
    def test_as_matrix_accepts_nested_lists(self):
        M = as_matrix([[1, 2], [3, 4]], rows=2, cols=2, name="M")
        assert M.dtype == float and M.shape == (2, 2)

    def test_as_matrix_rejects_wrong_shape(self):
        with pytest.raises(DimensionError):
            as_matrix([[1, 2, 3]], rows=2, cols=3, name="M")

    def test_as_matrix_rejects_nonfinite(self):
        with pytest.raises(DimensionError):
            as_matrix([[np.nan, 0], [0, 1]], name="M")

    def test_as_vector(self):
        v = as_vector([1, 2, 3], size=3, name="v")
        assert v.shape == (3,)
        with pytest.raises(DimensionError):
            as_vector([1, 2], size=3, name="v")


class TestExpm:
    def test_identity_at_zero_time(self):
        A = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.allclose(expm(A, 0.0), np.eye(2))

    def test_against_series_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = rng.integers(1, 6)
            A = rng.standard_normal((n, n))
            t = float(rng.uniform(0.0, 3.0))
            assert np.allclose(expm(A, t), taylor_expm(A, t), atol=1e-10, rtol=1e-10)

    def test_diagonal_closed_form(self):
        A = np.diag([-1.0, 2.0])
        E = expm(A, 0.5)
        assert np.allclose(np.diag(E), [np.exp(-0.5), np.exp(1.0)])

    @settings(max_examples=100, deadline=None)
    @given(_bounded_matrix(3), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
    def test_semigroup_property(self, A, s, t):
        left = expm(A, s) @ expm(A, t)
        right = expm(A, s + t)
        assert np.allclose(left, right, atol=1e-9 * (1 + np.abs(right).max()))


class TestSpectra:
    def test_eigenvalues_of_rotationlike_block(self):
        A = np.array([[-1.0, 1.0, 1.0], [-4.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        lam = eigenvalues(A)
        expected = {-0.5 + 2.1794494717703369j, -0.5 - 2.1794494717703369j, 0.0}
        for e in expected:
            assert min(abs(lam - e) for lam in lam) < 1e-12

    def test_spectral_radius_and_schur(self):
        M = np.diag([-0.4864, -0.1891])
        assert abs(spectral_radius(M) - 0.4864) < 1e-12
        assert is_schur(M)
        assert not is_schur(np.diag([1.0, 0.5]))

    def test_hurwitz(self):
        assert is_hurwitz(np.diag([-1.0, -2.0]))
        assert not is_hurwitz(np.array([[0.0, 1.0], [-1.0, 0.0]]))  # marginal
        # chaotic-loop flow matrix is Hurwitz
        A = np.array(
            [[0.0, 0.0, 3.5, 5.0], [1.0, 0.0, -4.3, 1.0], [0.0, 1.0, -1.0, 0.0], [0.0, 0.0, -1.0, -1.0]]
        )
        assert is_hurwitz(A)

    def test_real_eigenvalues_filter(self):
        A = np.array([[0.0, 1.0], [-1.0, 0.0]])  # +-i, no real eigenvalues
        assert real_eigenvalues(A).size == 0
        B = np.diag([2.0, -3.0])
        assert sorted(real_eigenvalues(B)) == [-3.0, 2.0]

    def test_symmetric_helpers(self):
        S = np.array([[2.0, 1.0], [1.0, 2.0]])
        w = symmetric_eigenvalues(S)
        assert np.allclose(sorted(w), [1.0, 3.0])
        assert abs(min_symmetric_eigenvalue(S) - 1.0) < 1e-12
        assert abs(max_symmetric_eigenvalue(S) - 3.0) < 1e-12
        N = np.array([[1.0, 2.0], [0.0, 1.0]])
        assert np.allclose(symmetrize(N), [[1.0, 1.0], [1.0, 1.0]])


class TestFirstCrossing:
    def test_simple_sine_crossing(self):
        # -sin(t) is negative on (0, pi) and crosses zero upward at t = pi
        f = lambda t: -np.sin(t)
        root = first_crossing(f, 0.1, 8.0)
        assert abs(root - np.pi) < 1e-8

    def test_returns_start_when_already_nonnegative(self):
        f = lambda t: 1.0
        assert first_crossing(f, 0.7, 5.0) == 0.7

    def test_none_when_no_crossing(self):
        f = lambda t: -1.0
        assert first_crossing(f, 0.0, 5.0) is None

    def test_nonnegative_at_returned_point(self):
        # the located point sits on the nonnegative side of the crossing
        f = lambda t: t - 2.0
        root = first_crossing(f, 0.0, 5.0)
        assert abs(root - 2.0) < 1e-8 and f(root) >= 0.0

    def test_grid_step_override_finds_narrow_pulse(self):
        # pulse of width 0.02 would be skipped by a coarse default grid
        f = lambda t: 1.0 if 1.0 <= t <= 1.02 else -1.0
        root = first_crossing(f, 0.0, 50.0, grid_step=0.005)
        assert 0.995 <= root <= 1.02

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import kaczbench as kb
from kaczbench.errors import DegenerateRowError, DimensionMismatchError

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


def vec(length):
    return st.lists(finite, min_size=length, max_size=length).map(np.array)


class TestDot:
    def test_orthogonal(self):
        assert kb.dot(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_hand_value(self):
        # 3*3 + 4*4
        assert kb.dot(np.array([3.0, 4.0]), np.array([3.0, 4.0])) == 25.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kb.dot(np.zeros(3), np.zeros(4))

    @given(vec(7))
    def test_self_dot_nonnegative(self, u):
        assert kb.dot(u, u) >= 0.0

    @given(vec(9), vec(9))
    def test_symmetry_exact(self, u, v):
        assert kb.dot(u, v) == kb.dot(v, u)


class TestAxpyRow:
    def test_zero_scale(self):
        x = np.array([1.0, 1.0])
        kb.axpy_row(x, 0.0, np.array([5.0, -5.0]))
        assert np.array_equal(x, [1.0, 1.0])

    def test_hand_value(self):
        x = np.zeros(2)
        kb.axpy_row(x, 2.0, np.array([1.0, 3.0]))
        assert np.array_equal(x, [2.0, 6.0])

    def test_self_cancellation(self):
        x = np.array([1.0, 2.0])
        kb.axpy_row(x, -1.0, np.array([1.0, 2.0]))
        assert np.array_equal(x, [0.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kb.axpy_row(np.zeros(3), 1.0, np.zeros(2))

    @given(
        st.lists(st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=6, max_size=6).map(np.array),
        st.lists(st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=6, max_size=6).map(np.array),
        st.floats(min_value=-10, max_value=10, allow_nan=False),
    )
    @settings(max_examples=50)
    def test_negated_scale_restores(self, x, row, scale):
        orig = x.copy()
        kb.axpy_row(x, scale, row)
        kb.axpy_row(x, -scale, row)
        assert np.all(np.abs(x - orig) <= 1e-12)


class TestRowNormCache:
    def test_identity(self):
        cache = kb.row_norm_cache(np.eye(2))
        assert np.array_equal(cache.sq_norms, [1.0, 1.0])
        assert cache.frobenius_sq == 2.0

    def test_hand_value(self):
        cache = kb.row_norm_cache(np.array([[3.0, 4.0]]))
        assert np.array_equal(cache.sq_norms, [25.0])
        assert cache.frobenius_sq == 25.0

    def test_zero_row_names_index(self):
        with pytest.raises(DegenerateRowError) as exc:
            kb.row_norm_cache(np.array([[1.0, 0.0], [0.0, 0.0]]))
        assert exc.value.row == 1
        assert "row 1" in str(exc.value)

    @given(st.integers(2, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    @settings(max_examples=50)
    def test_frobenius_matches_double_sum(self, m, n, seed):
        a = kb.Prng(seed).standard_normal((m, n)) + 0.1  # keep rows nonzero
        cache = kb.row_norm_cache(a)
        # independent oracle: plain python accumulation
        total = 0.0
        for i in range(m):
            for j in range(n):
                total += float(a[i, j]) ** 2
        assert cache.frobenius_sq == pytest.approx(total, rel=1e-12)


class TestValidators:
    def test_as_matrix_rejects_1d(self):
        with pytest.raises(DimensionMismatchError):
            kb.linalg.as_matrix(np.zeros(3))

    def test_as_matrix_rejects_empty(self):
        with pytest.raises(DimensionMismatchError):
            kb.linalg.as_matrix(np.zeros((0, 3)))

    def test_as_vector_length(self):
        with pytest.raises(DimensionMismatchError):
            kb.linalg.as_vector(np.zeros(3), length=4)

import numpy as np
import pytest

import kaczbench as kb
from kaczbench.errors import DimensionMismatchError


def jacobi_eigvals(g, sweeps=100, tol=1e-14):
    """Dense Jacobi rotation eigensolver for small symmetric matrices.

    Test-only oracle, independent of the power-iteration path.
    """
    g = np.array(g, dtype=float)
    n = g.shape[0]
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(g[p, q]))
                if abs(g[p, q]) <= tol * np.sqrt(abs(g[p, p] * g[q, q]) + 1e-300):
                    continue
                theta = 0.5 * np.arctan2(2 * g[p, q], g[q, q] - g[p, p])
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                g = rot.T @ g @ rot
        if off < tol:
            break
    return np.sort(np.diag(g))


class TestSpectralStats:
    def test_identity(self):
        st = kb.spectral_stats(np.eye(4))
        assert st.sigma_max == pytest.approx(1.0, rel=1e-6)
        assert st.sigma_min == pytest.approx(1.0, rel=1e-6)
        assert st.s_min == pytest.approx(0.25, rel=1e-6)
        assert st.s_max == pytest.approx(0.25, rel=1e-6)

    def test_diagonal(self):
        st = kb.spectral_stats(np.diag([1.0, 2.0, 3.0]))
        assert st.sigma_max == pytest.approx(3.0, rel=1e-5)
        assert st.sigma_min == pytest.approx(1.0, rel=1e-5)
        assert st.s_max == pytest.approx(9 / 14, rel=1e-5)
        assert st.s_min == pytest.approx(1 / 14, rel=1e-5)

    def test_three_by_two_against_closed_form(self):
        a = np.array([[3.0, 0.0], [0.0, 4.0], [1.0, 1.0]])
        st = kb.spectral_stats(a)
        g = a.T @ a  # [[10, 1], [1, 17]]
        tr, det = g[0, 0] + g[1, 1], g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        disc = np.sqrt(tr * tr - 4 * det)
        assert st.sigma_max == pytest.approx(np.sqrt((tr + disc) / 2), rel=1e-5)
        assert st.sigma_min == pytest.approx(np.sqrt((tr - disc) / 2), rel=1e-5)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_20x5_against_jacobi_oracle(self, seed):
        a = kb.Prng(seed, 99).standard_normal((20, 5))
        st = kb.spectral_stats(a)
        eigs = jacobi_eigvals(a.T @ a)
        assert st.sigma_min == pytest.approx(np.sqrt(eigs[0]), rel=1e-4)
        assert st.sigma_max == pytest.approx(np.sqrt(eigs[-1]), rel=1e-4)

    @pytest.mark.parametrize("seed", [3, 4])
    def test_normalized_extremes_bounded(self, seed):
        a = kb.Prng(seed, 98).standard_normal((30, 6)) + 0.5
        st = kb.spectral_stats(a)
        assert 0 < st.sigma_min <= st.sigma_max
        assert st.s_min <= st.s_max <= 1 + 1e-12


class TestOptimalAlpha:
    def test_single_worker(self):
        st = kb.SpectralStats(sigma_max=1, sigma_min=1, s_min=0.3, s_max=0.9)
        assert kb.optimal_alpha(st, 1) == 1.0

    def test_small_gap_branch(self):
        st = kb.SpectralStats(sigma_max=1, sigma_min=1, s_min=0.5, s_max=0.5)
        assert kb.optimal_alpha(st, 2) == pytest.approx(4 / 3, rel=1e-12)

    def test_large_gap_branch(self):
        st = kb.SpectralStats(sigma_max=1, sigma_min=1, s_min=0.1, s_max=0.9)
        assert kb.optimal_alpha(st, 3) == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.parametrize("q,s_min", [(2, 0.05), (3, 0.1), (4, 0.2), (5, 0.01), (8, 0.07)])
    def test_branches_agree_on_their_boundary(self, q, s_min):
        s_max = s_min + 1.0 / (q - 1)
        first = q / (1 + (q - 1) * s_min)
        second = 2 * q / (1 + (q - 1) * (s_min + s_max))
        assert first == pytest.approx(second, rel=1e-12)

    def test_rejects_bad_q(self):
        st = kb.SpectralStats(sigma_max=1, sigma_min=1, s_min=0.1, s_max=0.2)
        with pytest.raises(ValueError):
            kb.optimal_alpha(st, 0)


class TestPartialAlphas:
    def test_single_block_equals_full(self):
        a = kb.Prng(5, 50).standard_normal((40, 4)) + 1.0
        full = kb.optimal_alpha(kb.spectral_stats(a), 1)
        assert kb.partial_alphas(a, 1).tolist() == [full]

    def test_identical_blocks_identical_alphas(self):
        block = kb.Prng(6, 51).standard_normal((12, 3)) + 0.5
        a = np.vstack([block, block, block])
        alphas = kb.partial_alphas(a, 3)
        assert alphas[0] == alphas[1] == alphas[2]

    def test_partial_close_to_full_on_random_system(self):
        sys_ = kb.generate_mother(kb.GeneratorConfig(m_max=200, n_max=10, seed=5))
        full = kb.optimal_alpha(kb.spectral_stats(sys_.A), 2)
        parts = kb.partial_alphas(sys_.A, 2)
        assert np.all(np.abs(parts - full) / full < 0.25)

    def test_rank_deficient_block_rejected(self):
        a = kb.Prng(7, 52).standard_normal((8, 5)) + 0.5
        with pytest.raises(DimensionMismatchError):
            kb.partial_alphas(a, 4)  # blocks of 2 rows < 5 columns

import numpy as np
import pytest

import kaczbench as kb


def tiny_system(a, b, x_star):
    a = np.asarray(a, dtype=float)
    return kb.LinearSystem(A=a, b=np.asarray(b, dtype=float),
                           x_star=np.asarray(x_star, dtype=float), seed=0)


class TestKaczmarzStep:
    def test_axis_projection(self):
        a = np.array([[1.0, 0.0]])
        x = np.zeros(2)
        kb.kaczmarz_step(x, a, np.array([2.0]), kb.row_norm_cache(a).sq_norms, 0)
        assert np.array_equal(x, [2.0, 0.0])

    def test_oblique_projection(self):
        a = np.array([[3.0, 4.0]])
        x = np.zeros(2)
        kb.kaczmarz_step(x, a, np.array([10.0]), kb.row_norm_cache(a).sq_norms, 0)
        assert np.allclose(x, [1.2, 1.6], rtol=0, atol=1e-15)
        assert abs(np.dot(a[0], x) - 10.0) <= 1e-10 * 11.0

    def test_zero_alpha_is_noop(self):
        a = np.array([[3.0, 4.0]])
        x = np.array([0.5, -0.5])
        kb.kaczmarz_step(x, a, np.array([10.0]), kb.row_norm_cache(a).sq_norms, 0, alpha=0.0)
        assert np.array_equal(x, [0.5, -0.5])

    def test_projection_property_randomized(self):
        # after a unit-weight step the sampled equation holds to rounding
        rng = kb.Prng(77)
        for _ in range(300):
            n = 2 + int(rng.random() * 8)
            a = rng.standard_normal((3, n))
            cache = kb.row_norm_cache(a)
            b = rng.standard_normal(3)
            x = rng.standard_normal(n) * 10
            i = int(rng.random() * 3)
            kb.kaczmarz_step(x, a, b, cache.sq_norms, i)
            assert abs(np.dot(a[i], x) - b[i]) <= 1e-10 * (1 + abs(b[i]))


class TestCyclic:
    def test_one_by_one(self):
        sys_ = tiny_system([[2.0]], [6.0], [3.0])
        r = kb.solve_ck(sys_, kb.SolverConfig(variant="ck"))
        assert r.converged and r.iterations == 1
        assert np.array_equal(r.x, [3.0])

    def test_orthogonal_rows_one_sweep(self):
        sys_ = tiny_system([[1.0, 0.0], [0.0, 2.0]], [1.0, 4.0], [1.0, 2.0])
        r = kb.solve_ck(sys_, kb.SolverConfig(variant="ck"))
        assert r.converged and r.iterations == 2
        assert np.allclose(r.x, [1.0, 2.0], atol=1e-12)

    def test_nonconvergence_is_flagged_not_raised(self, coherent_system):
        r = kb.solve_ck(coherent_system, kb.SolverConfig(variant="ck", max_iterations=10))
        assert not r.converged and r.iterations == 10

    def test_coherent_system_much_slower_than_rk(self, coherent_system):
        ck = kb.solve_ck(coherent_system, kb.SolverConfig(variant="ck", max_iterations=5_000_000))
        rk_counts = [
            kb.solve_rk(coherent_system, kb.SolverConfig(variant="rk", base_seed=s)).iterations
            for s in range(10)
        ]
        assert ck.converged
        assert ck.iterations >= 10 * np.median(rk_counts)


class TestRandomized:
    def test_one_by_one(self):
        sys_ = tiny_system([[2.0]], [6.0], [3.0])
        r = kb.solve_rk(sys_, kb.SolverConfig(variant="rk"))
        assert r.converged and r.iterations == 1

    def test_identity_system(self):
        sys_ = tiny_system(np.eye(3), [1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        r = kb.solve_rk(sys_, kb.SolverConfig(variant="rk", base_seed=4))
        assert r.converged
        assert np.allclose(r.x, [1.0, 2.0, 3.0], atol=np.sqrt(1e-8))

    def test_desk_scale_all_seeds_converge(self, sys_2000x50):
        for seed in range(10):
            r = kb.solve_rk(sys_2000x50, kb.SolverConfig(variant="rk", base_seed=seed))
            assert r.converged and r.iterations < 1_000_000
            assert r.final_error_sq < 1e-8

    def test_monotone_expected_error(self, sys_500x20):
        # seed-mean squared error at fixed checkpoints never increases
        step, total = 100, 800
        curves = []
        for seed in range(10):
            recs = kb.trace_run(
                sys_500x20, kb.SolverConfig(variant="rk", base_seed=seed), total, step,
                sys_500x20.x_star,
            )
            curves.append([r.error_norm ** 2 for r in recs])
        mean_curve = np.mean(np.array(curves), axis=0)
        assert np.all(np.diff(mean_curve) <= 0)


class TestCombinedStep:
    def test_single_row_equals_kaczmarz_step(self):
        a = np.array([[3.0, 4.0], [1.0, 2.0]])
        cache = kb.row_norm_cache(a)
        b = np.array([10.0, 3.0])
        x1 = np.array([0.3, -0.7])
        x2 = x1.copy()
        kb.kaczmarz_step(x1, a, b, cache.sq_norms, 1, alpha=0.9)
        kb.rka_combined_step(x2, a, b, cache.sq_norms, [1], alpha=0.9)
        assert np.array_equal(x1, x2)

    def test_duplicate_rows_average_to_single_step(self):
        a = np.array([[3.0, 4.0], [1.0, 2.0]])
        cache = kb.row_norm_cache(a)
        b = np.array([10.0, 3.0])
        x1 = np.array([0.3, -0.7])
        x2 = x1.copy()
        kb.kaczmarz_step(x1, a, b, cache.sq_norms, 0)
        kb.rka_combined_step(x2, a, b, cache.sq_norms, [0, 0])
        assert np.allclose(x1, x2, rtol=0, atol=1e-15)

    def test_identity_two_rows(self):
        a = np.eye(2)
        cache = kb.row_norm_cache(a)
        x = np.zeros(2)
        kb.rka_combined_step(x, a, np.array([2.0, 4.0]), cache.sq_norms, [0, 1])
        assert np.array_equal(x, [1.0, 2.0])  # mean of (2,0) and (0,4)


class TestAveraging:
    def test_q1_reduces_to_rk_bitwise(self, sys_500x20):
        cap_rk, cap_rka = [], []
        rk = kb.solve_rk(sys_500x20, kb.SolverConfig(variant="rk", base_seed=5), capture=cap_rk)
        rka = kb.solve_rka_seq(sys_500x20, kb.SolverConfig(variant="rka", q=1, base_seed=5),
                               capture=cap_rka)
        assert rk.iterations == rka.iterations
        assert len(cap_rk) == len(cap_rka)
        assert all(np.array_equal(u, v) for u, v in zip(cap_rk, cap_rka))

    def test_mean_iterations_decrease_with_workers(self, sys_500x20):
        means = []
        for q in (1, 4):
            counts = [
                kb.solve_rka_seq(sys_500x20, kb.SolverConfig(variant="rka", q=q, base_seed=s)).iterations
                for s in range(10)
            ]
            means.append(np.mean(counts))
        assert means[1] < means[0]

    def test_sampling_schemes_close_at_q2(self, sys_2000x50):
        full = np.mean([
            kb.solve_rka_seq(sys_2000x50, kb.SolverConfig(variant="rka", q=2, base_seed=s)).iterations
            for s in range(10)
        ])
        dist = np.mean([
            kb.solve_rka_seq(
                sys_2000x50,
                kb.SolverConfig(variant="rka", q=2, base_seed=s, sampling_scheme="distributed"),
            ).iterations
            for s in range(10)
        ])
        assert abs(full - dist) / full < 0.05

    def test_distributed_scheme_respects_blocks(self, sys_500x20):
        cfg = kb.SolverConfig(variant="rka", q=4, base_seed=0, sampling_scheme="distributed")
        r = kb.solve_rka_seq(sys_500x20, cfg)
        assert r.converged


class TestWorkerBlock:
    def test_block_of_one_is_one_step(self):
        a = np.array([[3.0, 4.0], [1.0, 2.0]])
        cache = kb.row_norm_cache(a)
        b = np.array([10.0, 3.0])
        sampler = kb.make_sampler(cache)
        v1 = np.array([0.1, 0.2])
        v2 = v1.copy()
        rng1, rng2 = kb.worker_rng(3, 0), kb.worker_rng(3, 0)
        kb.rkab_worker_block(v1, a, b, cache.sq_norms, sampler, rng1, 1)
        kb.kaczmarz_step(v2, a, b, cache.sq_norms, sampler.sample(rng2))
        assert np.array_equal(v1, v2)

    def test_orthogonal_cover_solves_exactly(self):
        # identity rows: hitting every index once lands exactly on b
        a = np.eye(2)
        cache = kb.row_norm_cache(a)
        b = np.array([3.0, -1.0])
        sampler = kb.make_sampler(cache)
        # pick a seed whose first two draws are distinct
        for seed in range(100):
            g = kb.worker_rng(seed, 0)
            if sampler.sample(g) != sampler.sample(g):
                break
        v = np.zeros(2)
        kb.rkab_worker_block(v, a, b, cache.sq_norms, sampler, kb.worker_rng(seed, 0), 2)
        assert np.array_equal(v, b)

    def test_zero_alpha_leaves_v(self):
        a = np.array([[3.0, 4.0], [1.0, 2.0]])
        cache = kb.row_norm_cache(a)
        v = np.array([0.1, 0.2])
        kb.rkab_worker_block(v, a, np.array([10.0, 3.0]), cache.sq_norms,
                             kb.make_sampler(cache), kb.worker_rng(0, 0), 10, alpha=0.0)
        assert np.array_equal(v, [0.1, 0.2])


class TestBlockAveraging:
    def test_bs1_reduces_to_rka_bitwise(self, sys_500x20):
        cap_a, cap_b = [], []
        rka = kb.solve_rka_seq(sys_500x20, kb.SolverConfig(variant="rka", q=3, base_seed=2),
                               capture=cap_a)
        rkab = kb.solve_rkab_seq(
            sys_500x20, kb.SolverConfig(variant="rkab", q=3, block_size=1, base_seed=2),
            capture=cap_b,
        )
        assert rka.iterations == rkab.iterations
        assert all(np.array_equal(u, v) for u, v in zip(cap_a, cap_b))

    def test_q1_bs1_reduces_to_rk_bitwise(self, sys_500x20):
        rk = kb.solve_rk(sys_500x20, kb.SolverConfig(variant="rk", base_seed=8))
        rkab = kb.solve_rkab_seq(
            sys_500x20, kb.SolverConfig(variant="rkab", q=1, block_size=1, base_seed=8)
        )
        assert rk.iterations == rkab.iterations
        assert np.array_equal(rk.x, rkab.x)

    def test_outer_iterations_decrease_with_block_size(self, sys_500x20):
        means = []
        for bs in (2, 8):
            counts = [
                kb.solve_rkab_seq(
                    sys_500x20, kb.SolverConfig(variant="rkab", q=4, block_size=bs, base_seed=s)
                ).iterations
                for s in range(10)
            ]
            means.append(np.mean(counts))
        assert means[1] < means[0]

    def test_lead_row_consumes_one_extra_draw_per_worker(self, sys_500x20):
        cfg = kb.SolverConfig(variant="rkab", q=2, block_size=3, base_seed=1)
        plain = kb.solve_rkab_seq(sys_500x20, cfg, budget=5)
        lead = kb.solve_rkab_seq(sys_500x20, cfg, budget=5, lead_row=True)
        assert not np.array_equal(plain.x, lead.x)

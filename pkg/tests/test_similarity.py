import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cupcf import (
    RatingsMatrix,
    build_similarity_matrix,
    jaccard_mod,
    nhsm_similarity,
    pearson_similarity,
    pss_factors,
    user_stats,
)
from cupcf._accel import HAVE_NUMBA

import oracle
from helpers import grid_to_dict, matrix_from_grid, random_grid

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])

# Reference upper triangles for the toy grid, 4 decimals.
NHSM_TOY = {
    (1, 2): 0.0122, (1, 3): 0.0066, (1, 4): 0.0213, (1, 5): 0.0035,
    (2, 3): 0.0025, (2, 4): 0.0150, (2, 5): 0.0010,
    (3, 4): 0.0125, (3, 5): 0.0018,
    (4, 5): 0.0067,
}
PEARSON_TOY = {
    (1, 2): 0.9487, (1, 3): -0.7071, (1, 4): -0.7921, (1, 5): -1.0,
    (2, 3): -1.0, (2, 4): -0.1886, (2, 5): -1.0,
    (3, 4): 0.0, (3, 5): -1.0,
    (4, 5): -0.5547,
}
# u1-u5 share only item 3, where u1 sits exactly on its mean: 0/0, stored as 0.
PEARSON_DEGENERATE = {(1, 5)}


def stats(m, u):
    return user_stats(m, u)


class TestFactors:
    def test_jaccard(self, toy):
        assert jaccard_mod(stats(toy, 1), stats(toy, 2)) == pytest.approx(2 / 9)
        m = RatingsMatrix.from_triples([1, 2, 3], [1, 1, 2], [3, 4, 5])
        assert jaccard_mod(stats(m, 1), stats(m, 2)) == 1.0
        assert jaccard_mod(stats(m, 1), stats(m, 3)) == 0.0

    def test_pss_equal_ratings(self):
        f = pss_factors(4, 4, 3.0, 2.0)
        assert f.proximity == 0.5
        assert pss_factors(3, 3, 3.0, 3.0).significance == 0.5

    def test_pss_u1_u2_item2(self):
        f = pss_factors(5, 4, 3.0, 11 / 3)
        assert f.proximity == pytest.approx(0.2689414213699951, abs=1e-12)
        assert f.significance == pytest.approx(0.8807970779778823, abs=1e-12)
        assert f.singularity == pytest.approx(0.3029407160345926, abs=1e-12)
        assert f.product == pytest.approx(0.07176145052844951, abs=1e-12)

    @given(st.integers(1, 5), st.integers(1, 5), st.floats(1, 5))
    def test_pss_factor_ranges(self, a, b, mu):
        f = pss_factors(a, b, 3.0, mu)
        assert 0 < f.proximity <= 0.5
        assert 0 < f.significance < 1
        assert 0 < f.singularity <= 0.5
        assert f.product == f.proximity * f.significance * f.singularity


class TestPairwise:
    @pytest.mark.parametrize("pair", sorted(NHSM_TOY))
    def test_nhsm_toy_pairs(self, toy, pair):
        u, v = pair
        assert nhsm_similarity(toy, stats(toy, u), stats(toy, v)) == pytest.approx(NHSM_TOY[pair], abs=5e-4)

    @pytest.mark.parametrize("pair", sorted(set(PEARSON_TOY) - PEARSON_DEGENERATE))
    def test_pearson_toy_pairs(self, toy, pair):
        u, v = pair
        assert pearson_similarity(toy, stats(toy, u), stats(toy, v)) == pytest.approx(PEARSON_TOY[pair], abs=5e-4)

    def test_pearson_degenerate_pair(self, toy):
        assert pearson_similarity(toy, stats(toy, 1), stats(toy, 5)) == 0.0

    def test_pearson_zero_numerator(self, toy):
        assert pearson_similarity(toy, stats(toy, 3), stats(toy, 4)) == 0.0

    def test_disjoint(self):
        m = RatingsMatrix.from_triples([1, 1, 2, 2], [1, 2, 3, 4], [5, 1, 2, 4])
        assert nhsm_similarity(m, stats(m, 1), stats(m, 2)) == 0.0
        assert pearson_similarity(m, stats(m, 1), stats(m, 2)) == 0.0


@pytest.mark.parametrize("backend", BACKENDS)
class TestMatrix:
    def test_nhsm_toy(self, toy, backend):
        sim = build_similarity_matrix(toy, "nhsm", backend)
        for (u, v), want in NHSM_TOY.items():
            assert sim[u, v] == pytest.approx(want, abs=5e-4)
            assert sim[v, u] == sim[u, v]
        assert np.all(np.diag(sim.values) == 0)

    def test_pearson_toy(self, toy, backend):
        sim = build_similarity_matrix(toy, "pearson", backend)
        for (u, v), want in PEARSON_TOY.items():
            if (u, v) in PEARSON_DEGENERATE:
                assert sim[u, v] == 0.0
            else:
                assert sim[u, v] == pytest.approx(want, abs=5e-4)

    def test_single_user(self, backend):
        m = RatingsMatrix.from_triples([4], [1], [3])
        for measure in ("nhsm", "pearson"):
            sim = build_similarity_matrix(m, measure, backend)
            assert sim.values.shape == (1, 1) and sim.values[0, 0] == 0.0

    def test_symmetry_and_range(self, backend):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n, k = rng.integers(2, 12, size=2)
            m = matrix_from_grid(random_grid(rng, n, k, rng.uniform(0.1, 1.0)))
            nh = build_similarity_matrix(m, "nhsm", backend).values
            pe = build_similarity_matrix(m, "pearson", backend).values
            assert np.array_equal(nh, nh.T) and np.array_equal(pe, pe.T)
            assert nh.min() >= 0 and nh.max() <= 1
            assert pe.min() >= -1 and pe.max() <= 1

    def test_oracle_equivalence(self, backend):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            grid = random_grid(rng, 10, 10, rng.uniform(0.2, 0.9))
            m, R = matrix_from_grid(grid), grid_to_dict(grid)
            nh = build_similarity_matrix(m, "nhsm", backend)
            pe = build_similarity_matrix(m, "pearson", backend)
            for u in R:
                for v in R:
                    if u == v:
                        continue
                    assert abs(nh[u, v] - oracle.nhsm(R, u, v)) <= 1e-10
                    assert abs(pe[u, v] - oracle.pearson(R, u, v)) <= 1e-10

    def test_pearson_shift_invariance(self, backend):
        rng = np.random.default_rng(5)
        for _ in range(30):
            grid = random_grid(rng, 8, 10, 0.8)
            grid[0][grid[0] > 0] = rng.integers(1, 4, size=(grid[0] > 0).sum())
            shifted = grid.copy()
            shifted[0][shifted[0] > 0] += 2
            a = build_similarity_matrix(matrix_from_grid(grid), "pearson", backend).values
            b = build_similarity_matrix(matrix_from_grid(shifted), "pearson", backend).values
            np.testing.assert_allclose(a[0], b[0], atol=1e-10)

    def test_duplicate_user_beats_disjoint(self, backend):
        rng = np.random.default_rng(9)
        for _ in range(30):
            row = rng.integers(1, 6, size=6)
            row[0], row[1] = 1, 5
            grid = np.zeros((3, 12), dtype=int)
            grid[0, :6] = grid[1, :6] = row
            grid[2, 6:] = rng.integers(1, 6, size=6)
            sim = build_similarity_matrix(matrix_from_grid(grid), "nhsm", backend)
            assert sim[1, 3] == 0.0
            assert sim[1, 2] >= sim[1, 3]


def test_ranking_view(toy):
    sim = build_similarity_matrix(toy, "nhsm")
    assert [(u, r) for u, _, r in sim.ranking(1)] == [(4, 1), (2, 2), (3, 3), (5, 4)]


def test_csv_dump(toy):
    buf = io.StringIO()
    build_similarity_matrix(toy, "pearson").to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "user_a,user_b,value"
    assert len(lines) == 1 + 10
    a, b, v = lines[1].split(",")
    assert (a, b) == ("1", "2") and float(v) == pytest.approx(0.9487, abs=5e-4)


def test_unknown_measure(toy):
    with pytest.raises(ValueError):
        build_similarity_matrix(toy, "cosine")

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from balsub.anova import dummy_code, fit_ols
from balsub.criterion import (
    Subsample,
    balance_stats,
    delta,
    f_direct,
    f_of,
    f_pairwise,
    f_squared_pairwise,
    is_orthogonal_array,
    pairwise_delta_sq_sum,
)
from balsub.dataset import DataError, LevelSpec

from conftest import OA9, OA9_SPEC, OA25, OA25_SPEC, random_rows, random_spec


def f_squared_bruteforce(rows, spec):
    """Literal transcription of the criterion with ordered pairs j != k."""
    rows = np.asarray(rows)
    n = rows.shape[0]
    total = 0.0
    for j, qj in enumerate(spec.q):
        for u in range(qj):
            nju = np.sum(rows[:, j] == u)
            total += qj**2 * (1 / qj - nju / n) ** 2
    for j, k in itertools.permutations(range(spec.p), 2):
        qj, qk = spec.q[j], spec.q[k]
        for u in range(qj):
            for v in range(qk):
                c = np.sum((rows[:, j] == u) & (rows[:, k] == v))
                total += qj * qk * (1 / (qj * qk) - c / n) ** 2
    return total


@st.composite
def subsamples(draw, max_p=4, max_q=5, max_n=30):
    p = draw(st.integers(1, max_p))
    q = tuple(draw(st.lists(st.integers(2, max_q), min_size=p, max_size=p)))
    n = draw(st.integers(1, max_n))
    rows = [[draw(st.integers(0, qj - 1)) for qj in q] for _ in range(n)]
    return np.array(rows, dtype=np.int64), LevelSpec(q)


class TestBalanceStats:
    def test_example1_all_rows(self, example1):
        stats = balance_stats(Subsample.from_dataset(example1, range(10)), example1.spec)
        assert stats.single[0].tolist() == [2, 2, 2, 2, 2]

    def test_single_row(self):
        spec = LevelSpec((3, 4))
        stats = balance_stats(np.array([[2, 1]]), spec)
        assert stats.single[0].tolist() == [0, 0, 1]
        assert stats.single[1].tolist() == [0, 1, 0, 0]

    def test_oa_pairs_once(self, oa9):
        stats = balance_stats(oa9, OA9_SPEC)
        assert len(stats.pairwise) == 3
        for table in stats.pairwise.values():
            assert np.all(table == 1)

    def test_out_of_range(self):
        with pytest.raises(DataError):
            balance_stats(np.array([[3]]), LevelSpec((3,)))

    @settings(max_examples=100, deadline=None)
    @given(subsamples())
    def test_count_invariants(self, case):
        rows, spec = case
        stats = balance_stats(rows, spec)
        n = rows.shape[0]
        for c in stats.single:
            assert c.sum() == n
        for (j, k), table in stats.pairwise.items():
            assert j < k
            assert table.sum() == n
            np.testing.assert_array_equal(table.sum(axis=1), stats.single[j])
            np.testing.assert_array_equal(table.sum(axis=0), stats.single[k])


class TestFDirect:
    def test_oa_zero(self, oa9):
        assert f_of(oa9, OA9_SPEC) == 0.0

    def test_hand_values(self):
        spec = LevelSpec((2,))
        assert f_of(np.array([[0], [0]]), spec) == pytest.approx(math.sqrt(2), abs=1e-15)
        assert f_of(np.array([[0], [1]]), spec) == 0.0

    @settings(max_examples=200, deadline=None)
    @given(subsamples())
    def test_matches_bruteforce(self, case):
        rows, spec = case
        assert f_of(rows, spec) ** 2 == pytest.approx(f_squared_bruteforce(rows, spec),
                                                      rel=1e-12, abs=1e-12)


class TestDelta:
    def test_examples(self):
        spec = LevelSpec((5, 5))
        assert delta([1, 2], [1, 2], spec) == 10
        assert delta([1, 2], [0, 3], spec) == 0
        assert delta([1, 2], [1, 3], spec) == 5

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            delta([1, 2], [1], LevelSpec((3, 3)))

    @settings(max_examples=100, deadline=None)
    @given(subsamples(max_n=2))
    def test_symmetry(self, case):
        rows, spec = case
        a, b = rows[0], rows[-1]
        assert delta(a, b, spec) == delta(b, a, spec)
        assert delta(a, a, spec) == spec.sum_q


class TestFPairwise:
    def test_two_identical_rows(self):
        spec = LevelSpec((2,))
        rows = np.array([[0], [0]])
        assert pairwise_delta_sq_sum(rows, spec) == 4
        assert f_squared_pairwise(rows, spec) == 2
        assert f_pairwise(rows, spec) == pytest.approx(f_of(rows, spec), rel=1e-15)

    def test_oa9(self, oa9):
        # 27 row pairs agree in one column (delta 3), 9 in none
        assert pairwise_delta_sq_sum(oa9, OA9_SPEC) == 27 * 9 == 243
        assert f_squared_pairwise(oa9, OA9_SPEC) == 0
        assert f_pairwise(oa9, OA9_SPEC) == 0.0

    def test_oa25(self, oa25):
        # 100 row pairs agree in exactly one column (delta 5)
        assert pairwise_delta_sq_sum(oa25, OA25_SPEC) == 2500
        assert f_squared_pairwise(oa25, OA25_SPEC) == 0
        assert f_of(oa25, OA25_SPEC) == 0.0

    def test_printed_constant_would_be_negative(self, oa9):
        # without the factor 2 on the pair sum f^2 would be 243/81 - 6 = -3
        S = pairwise_delta_sq_sum(oa9, OA9_SPEC)
        assert S / 81 - 6 == -3

    def test_blocked_sum_matches_naive(self):
        rng = np.random.default_rng(3)
        spec = LevelSpec((4, 6, 3))
        rows = random_rows(rng, spec, 1100)
        sub = rows[::37]
        naive = sum(delta(a, b, spec) ** 2 for a, b in itertools.combinations(sub, 2))
        assert pairwise_delta_sq_sum(sub, spec) == naive
        assert pairwise_delta_sq_sum(rows, spec, block=97) == pairwise_delta_sq_sum(rows, spec)

    @settings(max_examples=300, deadline=None)
    @given(subsamples())
    def test_identity(self, case):
        rows, spec = case
        fd2 = f_of(rows, spec) ** 2
        fp2 = float(f_squared_pairwise(rows, spec))
        assert abs(fd2 - fp2) <= 1e-9 * max(1.0, fd2)


class TestOrthogonalArray:
    def test_oa9(self, oa9):
        assert is_orthogonal_array(oa9, OA9_SPEC)

    def test_example1(self, example1):
        assert is_orthogonal_array(example1.levels, example1.spec)

    def test_indivisible_size(self, oa9):
        assert not is_orthogonal_array(oa9[:8], OA9_SPEC)
        assert not is_orthogonal_array(np.vstack([oa9, oa9[:1]]), OA9_SPEC)

    def test_doubled_oa(self, oa9):
        assert is_orthogonal_array(np.vstack([oa9, oa9]), OA9_SPEC)

    @pytest.mark.parametrize("row", range(9))
    def test_perturbed_oa(self, oa9, row):
        # replace one run by a copy of the next one
        near = oa9.copy()
        near[row] = oa9[(row + 1) % 9]
        assert not is_orthogonal_array(near, OA9_SPEC)
        assert f_of(near, OA9_SPEC) > 0

    @settings(max_examples=200, deadline=None)
    @given(subsamples(max_p=3, max_q=3, max_n=18))
    def test_iff_f_zero(self, case):
        rows, spec = case
        assert is_orthogonal_array(rows, spec) == (f_of(rows, spec) == 0.0)


class TestInvariances:
    @settings(max_examples=100, deadline=None)
    @given(subsamples(), st.randoms(use_true_random=False))
    def test_row_order_and_relabeling(self, case, rnd):
        rows, spec = case
        f0 = f_of(rows, spec)
        perm = list(range(rows.shape[0]))
        rnd.shuffle(perm)
        assert f_of(rows[perm], spec) == pytest.approx(f0, abs=1e-12)
        relabeled = rows.copy()
        j = rnd.randrange(spec.p)
        mapping = list(range(spec.q[j]))
        rnd.shuffle(mapping)
        relabeled[:, j] = np.array(mapping)[rows[:, j]]
        assert f_of(relabeled, spec) == pytest.approx(f0, abs=1e-12)
        assert f_squared_pairwise(relabeled, spec) == f_squared_pairwise(rows, spec)

    def test_f_below_one_is_nonsingular(self):
        rng = np.random.default_rng(21)
        hits = 0
        for _ in range(400):
            spec = random_spec(rng, max_p=3, max_q=4)
            n = int(rng.integers(spec.Q, 3 * spec.Q + 1))
            rows = random_rows(rng, spec, n)
            if f_of(rows, spec) < 1:
                hits += 1
                assert not fit_ols(dummy_code(rows, spec), np.zeros(n)).singular
        assert hits > 20

import math

import numpy as np
import pytest

from iomlab.core import (
    DegenerateInput,
    FeatureMetric,
    FeatureThresholds,
    InvalidInput,
    SchemeParams,
    comparison_score,
    euclidean_distance,
    hamming_distance,
    iom,
    similarity_score,
    verify_feature,
    verify_template,
)

from oracles import hamming_loop, iom_loop


class TestIom:
    def test_tie_breaks_to_smallest_index(self):
        assert iom([0.1, 0.5, 0.5]) == 2

    def test_singleton(self):
        assert iom([3.0]) == 1

    def test_all_negative(self):
        assert iom([-1.0, -2.0]) == 1

    def test_empty_rejected(self):
        with pytest.raises(InvalidInput):
            iom([])

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInput):
            iom([1.0, float("nan")])

    def test_tie_break_invariant_random(self):
        # entries before the argmax are strictly smaller, entries after at most equal
        rng = np.random.default_rng(42)
        for _ in range(10_000):
            n = int(rng.integers(1, 12))
            v = rng.integers(-3, 4, n).astype(float)  # coarse values force ties
            j = iom(v) - 1
            assert all(v[i] < v[j] for i in range(j))
            assert all(v[i] <= v[j] for i in range(j + 1, n))
            assert iom_loop(list(v)) == j + 1


class TestHamming:
    def test_identity(self):
        assert hamming_distance([1, 2, 3], [1, 2, 3]) == 0

    def test_single_difference(self):
        assert hamming_distance([1, 2, 3], [1, 2, 4]) == 1

    def test_all_differ(self):
        assert hamming_distance([1, 1], [2, 2]) == 2

    def test_length_mismatch(self):
        with pytest.raises(InvalidInput):
            hamming_distance([1, 2], [1, 2, 3])

    def test_metric_axioms_random(self):
        rng = np.random.default_rng(7)
        for _ in range(2000):
            m = int(rng.integers(1, 20))
            a = rng.integers(1, 5, m)
            b = rng.integers(1, 5, m)
            c = rng.integers(1, 5, m)
            dab = hamming_distance(a, b)
            assert dab == hamming_loop(a, b)
            assert dab == hamming_distance(b, a)
            assert (dab == 0) == bool(np.array_equal(a, b))
            assert dab <= hamming_distance(a, c) + hamming_distance(c, b)


class TestVerifyTemplate:
    def test_self_always_accepted(self):
        for tau in (0.0, 0.25, 0.5, 1.0):
            assert verify_template([1, 2, 3], [1, 2, 3], tau)

    def test_one_mismatch_low_tau(self):
        assert verify_template([1, 2, 3], [1, 2, 4], 0.06)

    def test_total_mismatch_rejected(self):
        assert not verify_template([1, 2, 3], [4, 5, 6], 0.11)

    def test_bad_tau(self):
        with pytest.raises(InvalidInput):
            verify_template([1], [1], 1.5)

    def test_matches_comparison_score(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            m = int(rng.integers(1, 30))
            a = rng.integers(1, 6, m)
            b = rng.integers(1, 6, m)
            tau = float(rng.uniform(0, 1))
            assert verify_template(a, b, tau) == (comparison_score(a, b) >= tau)


class TestDistanceAndSimilarity:
    def test_distance_identity(self):
        assert euclidean_distance([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_unit_distance(self):
        assert euclidean_distance([1.0, 0.0], [0.0, 0.0]) == 1.0

    def test_three_four_five(self):
        assert euclidean_distance([3.0, 4.0], [0.0, 0.0]) == 5.0

    def test_similarity_max_half(self):
        assert similarity_score([1.0, 2.0], [1.0, 2.0]) == 0.5

    def test_similarity_negated(self):
        assert similarity_score([1.0, -2.0], [-1.0, 2.0]) == -0.5

    def test_similarity_orthogonal(self):
        assert similarity_score([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_similarity_one_zero_vector_defined(self):
        assert similarity_score([0.0, 0.0], [1.0, 2.0]) == 0.0

    def test_similarity_both_zero_rejected(self):
        with pytest.raises(DegenerateInput):
            similarity_score([0.0, 0.0], [0.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(InvalidInput):
            euclidean_distance([1.0], [1.0, 2.0])

    def test_similarity_distance_identity_random(self):
        # s = (1 - d^2 / sum(x_i^2 + y_i^2)) / 2 on random nonzero pairs
        rng = np.random.default_rng(3)
        for _ in range(10_000):
            n = int(rng.integers(1, 30))
            x = rng.uniform(-2, 2, n)
            y = rng.uniform(-2, 2, n)
            denom = float(np.sum(x * x) + np.sum(y * y))
            if denom == 0.0:
                continue
            s = similarity_score(x, y)
            d = euclidean_distance(x, y)
            assert abs(s - 0.5 * (1.0 - d * d / denom)) <= 1e-9


class TestVerifyFeature:
    def test_euclidean_self(self):
        th = FeatureThresholds(tau_euc=0.0, tau_sim=0.13)
        assert verify_feature([1.0, 2.0], [1.0, 2.0], th, FeatureMetric.EUCLIDEAN)

    def test_euclidean_table_regime(self):
        # d = 0.2 under the 0.33 threshold
        th = FeatureThresholds(tau_euc=0.33)
        assert verify_feature([0.2, 0.0], [0.0, 0.0], th, FeatureMetric.EUCLIDEAN)

    def test_similarity_self(self):
        th = FeatureThresholds(tau_sim=0.13)
        assert verify_feature([1.0, 2.0], [1.0, 2.0], th, FeatureMetric.SIMILARITY)


class TestParams:
    def test_valid(self):
        p = SchemeParams(n=299, k=16, m=300, tau=0.06)
        assert p.k <= p.n

    def test_k_exceeds_n(self):
        with pytest.raises(InvalidInput):
            SchemeParams(n=10, k=11, m=5)

    def test_tau_range(self):
        with pytest.raises(InvalidInput):
            SchemeParams(n=10, k=2, m=5, tau=1.2)

    def test_thresholds_sim_cap(self):
        with pytest.raises(InvalidInput):
            FeatureThresholds(tau_sim=0.6)

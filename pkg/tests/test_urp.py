import numpy as np
import pytest

from iomlab.core import InvalidInput, SchemeParams
from iomlab.urp import UrpSecret, urp_gen_secret, urp_transform

from oracles import urp_transform_loop


def small_params(n=5, k=3, m=3, p=2):
    return SchemeParams(n=n, k=k, m=m, p=p)


class TestGenSecret:
    def test_deterministic(self):
        params = small_params()
        a = urp_gen_secret(42, params)
        b = urp_gen_secret(42, params)
        assert np.array_equal(a.perms, b.perms)

    def test_paper_scale_count(self):
        params = SchemeParams(n=299, k=128, m=600, p=2)
        secret = urp_gen_secret(9, params)
        assert secret.perms.shape == (600, 2, 128)
        flat = secret.perms.reshape(1200, 128)
        for row in flat[:20]:
            assert len(set(row.tolist())) == 128

    def test_entries_distinct_and_in_range(self):
        params = small_params(n=7, k=5, m=10, p=3)
        secret = urp_gen_secret(2, params)
        assert secret.perms.min() >= 1 and secret.perms.max() <= 7
        for i in range(10):
            for j in range(3):
                assert len(set(secret.perms[i, j].tolist())) == 5

    def test_full_permutation_when_k_equals_n(self):
        params = small_params(n=4, k=4, m=5, p=2)
        secret = urp_gen_secret(3, params)
        for i in range(5):
            for j in range(2):
                assert sorted(secret.perms[i, j].tolist()) == [1, 2, 3, 4]

    def test_k_larger_than_n_rejected(self):
        with pytest.raises(InvalidInput):
            SchemeParams(n=3, k=4, m=1, p=2)

    def test_uniformity_over_snk(self):
        # n=3, k=2: 6 partial permutations, each should appear ~uniformly
        params = SchemeParams(n=3, k=2, m=600, p=2)
        secret = urp_gen_secret(11, params)
        flat = secret.perms.reshape(-1, 2)
        counts = {}
        for row in flat:
            counts[tuple(row)] = counts.get(tuple(row), 0) + 1
        assert len(counts) == 6
        expected = flat.shape[0] / 6
        for c in counts.values():
            assert abs(c - expected) < 5 * np.sqrt(expected)


class TestTransform:
    def test_hand_computed_example(self):
        params = SchemeParams(n=4, k=2, m=1, p=2)
        perms = np.array([[[1, 3], [2, 4]]])
        secret = UrpSecret(perms=perms, seed=0, params=params)
        # windows: (x1*x2, x3*x4) = (2, 1.5) -> index 1
        assert urp_transform(secret, [1.0, 2.0, 3.0, 0.5]).tolist() == [1]

    def test_all_ones_gives_all_ones(self):
        params = small_params()
        secret = urp_gen_secret(1, params)
        assert urp_transform(secret, np.ones(params.n)).tolist() == [1] * params.m

    def test_depth_one_is_plain_window_max(self):
        params = small_params(n=6, k=3, m=4, p=1)
        secret = urp_gen_secret(5, params)
        x = np.random.default_rng(2).uniform(0.1, 1.0, 6)
        t = urp_transform(secret, x)
        for i in range(4):
            window = x[secret.perms[i, 0] - 1]
            assert t[i] == int(np.argmax(window)) + 1

    def test_dimension_mismatch(self):
        secret = urp_gen_secret(1, small_params())
        with pytest.raises(InvalidInput):
            urp_transform(secret, np.zeros(9))

    def test_positive_scaling_invariance(self):
        rng = np.random.default_rng(19)
        params = small_params(n=6, k=3, m=4, p=2)
        for _ in range(10_000):
            secret = urp_gen_secret(int(rng.integers(1 << 30)), params)
            x = rng.standard_normal(6)
            c = float(rng.uniform(0.01, 100.0))
            assert np.array_equal(
                urp_transform(secret, x), urp_transform(secret, c * x)
            )

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(29)
        for _ in range(1000):
            n = int(rng.integers(1, 6))
            k = int(rng.integers(1, min(n, 3) + 1))
            m = int(rng.integers(1, 4))
            p = int(rng.integers(1, 3))
            params = SchemeParams(n=n, k=k, m=m, p=p)
            secret = urp_gen_secret(int(rng.integers(1 << 30)), params)
            x = rng.standard_normal(n)
            expected = urp_transform_loop(secret.perms.tolist(), x.tolist())
            assert urp_transform(secret, x).tolist() == expected

"""URP-IoM: uniformly random partial-permutation instantiation.

The secret parameter set is an m-by-p array of partial permutations, each
an injective sequence of k distinct indices from [1, n]. A feature vector x
maps to the template u with u_i the smallest index of the maximum entry of
the componentwise product of the p permuted k-windows of x.

Reproducibility contract: permutations come from a partial Fisher-Yates
shuffle over numpy's PCG64 stream, sampled in (i ascending, j ascending)
order; within one permutation, draws occur in slot order 1..k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidInput, SchemeParams, as_feature


@dataclass(frozen=True)
class UrpSecret:
    """m*p partial permutations of k distinct indices from [1, n] (1-based)."""

    perms: np.ndarray  # shape (m, p, k), entries in [1, n]
    seed: int
    params: SchemeParams

    def __post_init__(self):
        m, p, k, n = self.params.m, self.params.p, self.params.k, self.params.n
        if self.perms.shape != (m, p, k):
            raise InvalidInput(
                f"secret permutations have shape {self.perms.shape}, expected {(m, p, k)}"
            )
        if np.any(self.perms < 1) or np.any(self.perms > n):
            raise InvalidInput("permutation entries must lie in [1, n]")
        # injectivity per permutation
        sorted_rows = np.sort(self.perms.reshape(m * p, k), axis=1)
        if k > 1 and np.any(sorted_rows[:, 1:] == sorted_rows[:, :-1]):
            raise InvalidInput("partial permutations must have distinct entries")


def _partial_fisher_yates(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """First k entries of a Fisher-Yates shuffle of [0, n), uniform over S_{n,k}."""
    pool = np.arange(n)
    for l in range(k):
        j = int(rng.integers(l, n))
        pool[l], pool[j] = pool[j], pool[l]
    return pool[:k]


def urp_gen_secret(seed: int, params: SchemeParams) -> UrpSecret:
    """Generate the URP secret parameter set deterministically from a seed."""
    if params.k > params.n:
        raise InvalidInput(f"k={params.k} exceeds n={params.n}")
    rng = np.random.default_rng(seed)
    m, p, k, n = params.m, params.p, params.k, params.n
    perms = np.empty((m, p, k), dtype=np.int64)
    for i in range(m):
        for j in range(p):
            perms[i, j] = _partial_fisher_yates(rng, n, k) + 1
    perms.setflags(write=False)
    return UrpSecret(perms=perms, seed=int(seed), params=params)


def urp_products(secret: UrpSecret, x) -> np.ndarray:
    """The m product windows v_1 ⊙ ... ⊙ v_p, as an (m, k) array."""
    v = as_feature(x, secret.params.n)
    windows = v[secret.perms - 1]  # (m, p, k)
    return windows.prod(axis=1)


def urp_transform(secret: UrpSecret, x) -> np.ndarray:
    """Template u with u_i = iom of the i-th product window, 1-based."""
    prod = urp_products(secret, x)
    return np.argmax(prod, axis=1).astype(np.int64) + 1

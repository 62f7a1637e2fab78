"""GRP-IoM: Gaussian random projection instantiation.

The secret parameter set is a sequence of m random n-by-k matrices whose
columns are standard Gaussian vectors of length n. A feature vector x maps
to the template u with u_i the smallest index of the maximum entry of
x @ W_i.

Reproducibility contract: secrets are regenerated bit-identically from
(seed, params) using numpy's PCG64 generator. Matrices are drawn in index
order; within each matrix, columns in index order, each column's entries in
row order; samples come from ``Generator.standard_normal`` (ziggurat).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidInput, SchemeParams, as_feature


@dataclass(frozen=True)
class GrpSecret:
    """m Gaussian projection matrices of shape (n, k), plus their provenance."""

    matrices: np.ndarray  # shape (m, n, k)
    seed: int
    params: SchemeParams

    def __post_init__(self):
        m, n, k = self.params.m, self.params.n, self.params.k
        if self.matrices.shape != (m, n, k):
            raise InvalidInput(
                f"secret matrices have shape {self.matrices.shape}, expected {(m, n, k)}"
            )
        if not np.all(np.isfinite(self.matrices)):
            raise InvalidInput("secret matrices contain NaN or Inf")


def grp_gen_secret(seed: int, params: SchemeParams) -> GrpSecret:
    """Generate the GRP secret parameter set deterministically from a seed."""
    rng = np.random.default_rng(seed)
    m, n, k = params.m, params.n, params.k
    # standard_normal((k, n)) fills row-by-row, so transposing gives each
    # n-by-k matrix its columns in draw order with entries in row order.
    mats = np.empty((m, n, k), dtype=np.float64)
    for i in range(m):
        mats[i] = rng.standard_normal((k, n)).T
    mats.setflags(write=False)
    return GrpSecret(matrices=mats, seed=int(seed), params=params)


def grp_project(secret: GrpSecret, x) -> np.ndarray:
    """All m projection vectors x @ W_i, as an (m, k) array."""
    v = as_feature(x, secret.params.n)
    return np.einsum("j,ijl->il", v, secret.matrices)


def grp_transform(secret: GrpSecret, x) -> np.ndarray:
    """Template u with u_i = iom(x @ W_i), entries 1-based in [1, k]."""
    proj = grp_project(secret, x)
    return np.argmax(proj, axis=1).astype(np.int64) + 1

"""Shared domain types, the index-of-max primitive, and both verifiers.

Feature vectors are plain 1-D float arrays of length ``n``; templates are
1-D integer arrays of length ``m`` with 1-based entries in ``[1, k]``.
All operations here are pure functions over immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class IomlabError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(IomlabError):
    """Malformed or inconsistent operation input."""


class DegenerateInput(IomlabError):
    """Input for which the requested quantity is undefined (e.g. zero denominator)."""


class Unsupported(IomlabError):
    """Requested configuration is outside the supported attack surface."""


@dataclass(frozen=True)
class SchemeParams:
    """Parameters of an IoM instantiation.

    n: feature vector length; k: window size; m: number of hashes;
    p: permutation-product depth (URP only, 1 for GRP); tau: acceptance
    rate threshold for the template verifier.
    """

    n: int
    k: int
    m: int
    p: int = 1
    tau: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInput(f"n must be >= 1, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise InvalidInput(f"k must satisfy 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.m < 1:
            raise InvalidInput(f"m must be >= 1, got {self.m}")
        if self.p < 1:
            raise InvalidInput(f"p must be >= 1, got {self.p}")
        if not 0.0 <= self.tau <= 1.0:
            raise InvalidInput(f"tau must be in [0, 1], got {self.tau}")


@dataclass(frozen=True)
class FeatureThresholds:
    """Feature-space acceptance thresholds for the two similarity conventions."""

    tau_euc: float = 0.33
    tau_sim: float = 0.13

    def __post_init__(self):
        if self.tau_euc < 0:
            raise InvalidInput(f"tau_euc must be >= 0, got {self.tau_euc}")
        if self.tau_sim > 0.5:
            raise InvalidInput(f"tau_sim cannot exceed 0.5, got {self.tau_sim}")


class FeatureMetric(Enum):
    EUCLIDEAN = "euclidean"
    SIMILARITY = "similarity"


def as_feature(x, n: int | None = None) -> np.ndarray:
    """Validate and return ``x`` as a finite 1-D float64 vector."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInput(f"feature vector must be non-empty 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInput("feature vector contains NaN or Inf")
    if n is not None and v.size != n:
        raise InvalidInput(f"feature vector has length {v.size}, expected {n}")
    return v


def as_template(u, m: int | None = None, k: int | None = None) -> np.ndarray:
    """Validate and return ``u`` as a 1-D int64 template with entries in [1, k]."""
    t = np.asarray(u)
    if t.ndim != 1 or t.size == 0:
        raise InvalidInput(f"template must be non-empty 1-D, got shape {t.shape}")
    if not np.issubdtype(t.dtype, np.integer):
        ti = np.asarray(t, dtype=np.int64)
        if not np.array_equal(ti, t):
            raise InvalidInput("template entries must be integers")
        t = ti
    t = t.astype(np.int64, copy=False)
    if np.any(t < 1):
        raise InvalidInput("template entries must be >= 1 (indices are 1-based)")
    if m is not None and t.size != m:
        raise InvalidInput(f"template has length {t.size}, expected {m}")
    if k is not None and np.any(t > k):
        raise InvalidInput(f"template entry exceeds window size k={k}")
    return t


def iom(v) -> int:
    """Smallest 1-based index at which ``v`` attains its maximum.

    Ties break to the smallest index; comparison is exact (no epsilon), so
    callers dealing with near-ties must enforce margins on their side.
    """
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise InvalidInput("iom requires a non-empty 1-D vector")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("iom input contains NaN or Inf")
    return int(np.argmax(a)) + 1


def hamming_distance(u, u2) -> int:
    """Number of positions where two equal-length templates differ."""
    a = as_template(u)
    b = as_template(u2)
    if a.size != b.size:
        raise InvalidInput(f"template lengths differ: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


def comparison_score(u, u2) -> float:
    """Rate of agreeing indices, 1 - D_H(u, u')/m."""
    a = as_template(u)
    d = hamming_distance(u, u2)
    return 1.0 - d / a.size


def verify_template(u, u2, tau: float) -> bool:
    """Template verifier: accept iff D_H(u, u')/m <= 1 - tau.

    ``tau`` is the minimum rate of agreeing indices for a genuine pair.
    """
    if not 0.0 <= tau <= 1.0:
        raise InvalidInput(f"tau must be in [0, 1], got {tau}")
    a = as_template(u)
    d = hamming_distance(u, u2)
    return d / a.size <= 1.0 - tau


def euclidean_distance(x, y) -> float:
    a = as_feature(x)
    b = as_feature(y)
    if a.size != b.size:
        raise InvalidInput(f"vector lengths differ: {a.size} vs {b.size}")
    return float(math.sqrt(math.fsum((a - b) ** 2)))


def similarity_score(x, y) -> float:
    """Similarity s = sum(x_i * y_i) / sum(x_i^2 + y_i^2); maximum 1/2 at x = y.

    Defined whenever the denominator is nonzero, i.e. unless both vectors
    are identically zero.
    """
    a = as_feature(x)
    b = as_feature(y)
    if a.size != b.size:
        raise InvalidInput(f"vector lengths differ: {a.size} vs {b.size}")
    denom = math.fsum(a * a) + math.fsum(b * b)
    if denom == 0.0:
        raise DegenerateInput("similarity undefined for two zero vectors")
    return math.fsum(a * b) / denom


def verify_feature(x, y, thresholds: FeatureThresholds, metric: FeatureMetric) -> bool:
    """Feature-space verifier.

    Euclidean: accept iff d <= tau_euc. Similarity: accept iff s >= tau_sim.
    """
    if metric is FeatureMetric.EUCLIDEAN:
        return euclidean_distance(x, y) <= thresholds.tau_euc
    if metric is FeatureMetric.SIMILARITY:
        return similarity_score(x, y) >= thresholds.tau_sim
    raise InvalidInput(f"unknown feature metric: {metric!r}")

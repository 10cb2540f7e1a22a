"""Measures over training indices, smooth distributions and the divergences between them.

A measure is a dense float vector with entries in [0, 1]; its weight is the
entry sum and its density is weight / m. All logarithms are natural.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kl_sum, ksum, re_sum
from .errors import SupportViolation, ZeroWeight

_ENTRY_TOL = 1e-12


@dataclass(frozen=True)
class TrainingSet:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise ValueError("feature matrix must be 2-d (one row per example)")
        if X.shape[0] < 1:
            raise ValueError("training set needs at least one example")
        if y.shape != (X.shape[0],):
            raise ValueError(f"expected {X.shape[0]} labels, got shape {y.shape}")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be in {-1, +1}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int8))

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class SmoothDistribution:
    """Probability vector together with the smoothness it is certified for.

    ``epsilon`` is the largest value for which ``max(probs) <= 1 / (epsilon m)``
    is guaranteed by construction (for normalized measures: their density).
    """

    probs: np.ndarray
    epsilon: float

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self):
        return len(self.probs)

    def is_smooth(self, epsilon):
        return is_smooth(self.probs, epsilon)


def as_measure(M):
    """Validate and return ``M`` as a float64 vector with entries in [0, 1]."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 1 or M.size == 0:
        raise ValueError("a measure is a non-empty 1-d vector")
    if np.any(M < -_ENTRY_TOL) or np.any(M > 1 + _ENTRY_TOL) or not np.all(np.isfinite(M)):
        raise ValueError("measure entries must lie in [0, 1]")
    return np.clip(M, 0.0, 1.0)


def weight(M):
    return ksum(np.asarray(M, dtype=np.float64))


def density(M):
    M = np.asarray(M, dtype=np.float64)
    return weight(M) / M.size


def normalize(M):
    """D_M = M / |M|; certified ``density(M)``-smooth."""
    M = as_measure(M)
    w = weight(M)
    if w <= 0.0:
        raise ZeroWeight("cannot normalize a measure of zero weight")
    return SmoothDistribution(M / w, min(1.0, w / M.size))


def is_smooth(probs, epsilon, tol=1e-12):
    p = np.asarray(probs, dtype=np.float64)
    return bool(p.max() <= 1.0 / (epsilon * p.size) + tol)


def _check_support(a, b):
    bad = (a > 0) & (b <= 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise SupportViolation(f"index {i} has mass {a[i]!r} but reference mass 0")


def kl_measures(M, N):
    """Unnormalized KL divergence sum(M log(M/N) + N - M), with 0 log 0 = 0."""
    M = np.asarray(M, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    _check_support(M, N)
    return kl_sum(M, N)


def relative_entropy(P, Q):
    """RE(P||Q) = sum P log(P/Q) between probability vectors."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    _check_support(P, Q)
    return re_sum(P, Q)


def kl_re_identity_residual(A, B):
    """KL(A||B) minus its decomposition through the normalized distributions.

    Should be zero up to rounding for every admissible pair.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    wa, wb = weight(A), weight(B)
    if wa <= 0 or wb <= 0:
        raise ZeroWeight("both measures need positive weight")
    _check_support(A, B)
    lhs = kl_sum(A, B)
    rhs = wa * re_sum(A / wa, B / wb) + wa * np.log(wa / wb) + wb - wa
    return lhs - rhs

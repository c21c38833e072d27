"""Task-related component analysis spatial filters.

Per class, the inter-trial covariance sum S rewards components that repeat
across trials while the self-trial covariance sum Q normalizes total power;
the spatial filter collects top generalized eigenvectors of (S, Q). The
binary variant concatenates per-class solutions; the multi-class variant
pools S and Q over classes and solves once, so the filter width stays P
regardless of the class count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .numerics import sym_generalized_eig

VARIANT_BINARY = "binary"
VARIANT_MULTICLASS = "multiclass"


@dataclass(frozen=True)
class CovPair:
    """Summed covariances of one class: S inter-trial, Q self-trial."""

    s: np.ndarray
    q: np.ndarray
    class_id: int
    trial_count: int


@dataclass(frozen=True)
class SpatialFilter:
    """Channels x components projection matrix with its fitting variant."""

    w: np.ndarray
    variant: str
    p: int

    @property
    def n_components(self) -> int:
        return self.w.shape[1]


def class_covariances(trials: list[np.ndarray], class_id: int = 0) -> CovPair:
    """S and Q sums for one class from its (C, T) trial matrices.

    S is assembled through the summation identity
    S = X_sum X_sum^T - sum_i X_i X_i^T, which equals the pairwise
    inter-trial covariance sum at O(I) cost instead of O(I^2).
    """
    if len(trials) < 2:
        raise DataError(
            f"class {class_id} needs at least 2 trials, got {len(trials)}"
        )
    shape = trials[0].shape
    if any(t.shape != shape for t in trials):
        raise DataError(f"class {class_id} mixes trial shapes")

    q = np.zeros((shape[0], shape[0]))
    x_sum = np.zeros(shape)
    for x in trials:
        q += x @ x.T
        x_sum += x
    s = x_sum @ x_sum.T - q
    return CovPair(s=s, q=q, class_id=class_id, trial_count=len(trials))


def fit_binary_filter(cov1: CovPair, cov2: CovPair, p: int) -> SpatialFilter:
    """Concatenate the per-class top-``p`` eigenvectors into a C x 2p filter."""
    if cov1.s.shape != cov2.s.shape:
        raise ConfigError("covariance pairs disagree on channel count")
    w1 = sym_generalized_eig(cov1.s, cov1.q, p).eigenvectors
    w2 = sym_generalized_eig(cov2.s, cov2.q, p).eigenvectors
    return SpatialFilter(w=np.hstack([w1, w2]), variant=VARIANT_BINARY, p=p)


def fit_multiclass_filter(covs: list[CovPair], p: int) -> SpatialFilter:
    """Single GEVD on class-pooled S and Q; the filter is C x p for any K."""
    if len(covs) < 2:
        raise ConfigError(f"need at least 2 classes, got {len(covs)}")
    shape = covs[0].s.shape
    if any(c.s.shape != shape for c in covs):
        raise ConfigError("covariance pairs disagree on channel count")
    s = np.sum([c.s for c in covs], axis=0)
    q = np.sum([c.q for c in covs], axis=0)
    w = sym_generalized_eig(s, q, p).eigenvectors
    return SpatialFilter(w=w, variant=VARIANT_MULTICLASS, p=p)

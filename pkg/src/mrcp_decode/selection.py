"""Mutual-information mRMR ranking over the pooled filter-bank features.

Features are discretized into equal-frequency bins, labels used as-is.
Ranking is greedy: the first pick maximizes relevance MI(feature; label),
every later pick maximizes relevance minus the mean MI to the already
picked features (the difference criterion). Ties break to the lowest
column index, making the ranking deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

MI_BINS = 8


@dataclass(frozen=True)
class FeatureColumn:
    """Provenance of one feature column."""

    bank: int
    class_id: int
    rho: str

    def header(self) -> str:
        return f"bank{self.bank:02d}_class{self.class_id}_{self.rho}"


@dataclass
class FeatureMatrix:
    """Trials x features values with column provenance and row labels."""

    values: np.ndarray
    columns: list[FeatureColumn]
    labels: np.ndarray

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def headers(self) -> list[str]:
        return [c.header() for c in self.columns]

    def to_csv(self) -> str:
        lines = [",".join(["label"] + self.headers())]
        for label, row in zip(self.labels, self.values):
            lines.append(",".join([str(int(label))] + [f"{v:.10g}" for v in row]))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FeatureRanking:
    """Column permutation in selection order with per-step criterion scores."""

    order: tuple[int, ...]
    scores: tuple[float, ...]


def discretize(column: np.ndarray, bins: int = MI_BINS) -> np.ndarray:
    """Equal-frequency binning; boundary ties fall into the lower bin."""
    if bins < 2:
        raise ConfigError(f"need at least 2 bins, got {bins}")
    column = np.asarray(column, dtype=float)
    if column.max() == column.min():
        return np.zeros(column.size, dtype=np.int64)
    edges = np.quantile(column, np.arange(1, bins) / bins)
    return np.searchsorted(edges, column, side="left").astype(np.int64)


def mutual_information(x: np.ndarray, y: np.ndarray) -> float:
    """Plug-in MI estimate in nats from the joint histogram of two codes."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.size != y.size:
        raise ConfigError(f"length mismatch: {x.size} vs {y.size}")
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    return _mi_codes(xi, int(xi.max()) + 1, yi, int(yi.max()) + 1)


def _mi_codes(xi: np.ndarray, nx: int, yi: np.ndarray, ny: int) -> float:
    """MI of two dense 0-based integer codes with known arities."""
    joint = np.bincount(xi * ny + yi, minlength=nx * ny).astype(float)
    joint = joint.reshape(nx, ny) / xi.size
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    outer = np.outer(px, py)
    return float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz])))


def _greedy_order(disc, labels, limit):
    """Greedy mRMR order over pre-discretized columns, up to ``limit`` picks."""
    n_features = len(disc)
    arity = [int(col.max()) + 1 for col in disc]
    _, label_codes = np.unique(labels, return_inverse=True)
    n_labels = int(label_codes.max()) + 1
    relevance = np.array(
        [_mi_codes(col, arity[j], label_codes, n_labels)
         for j, col in enumerate(disc)]
    )
    picked: list[int] = []
    scores: list[float] = []
    redundancy = np.zeros(n_features)
    remaining = np.ones(n_features, dtype=bool)
    while len(picked) < limit:
        if picked:
            criterion = relevance - redundancy / len(picked)
        else:
            criterion = relevance.copy()
        criterion[~remaining] = -np.inf
        best = int(np.argmax(criterion))  # argmax takes the lowest tied index
        picked.append(best)
        scores.append(float(criterion[best]))
        remaining[best] = False
        for j in np.flatnonzero(remaining):
            redundancy[j] += _mi_codes(disc[j], arity[j], disc[best], arity[best])
    return picked, scores


def mrmr_rank(matrix: FeatureMatrix, bins: int = MI_BINS) -> FeatureRanking:
    """Full mRMR permutation of a feature matrix's columns."""
    if matrix.n_features < 2:
        raise ConfigError("ranking needs at least 2 features")
    if np.unique(matrix.labels).size < 2:
        raise DataError("ranking needs at least 2 classes present")
    disc = [discretize(matrix.values[:, j], bins)
            for j in range(matrix.n_features)]
    order, scores = _greedy_order(disc, matrix.labels, matrix.n_features)
    return FeatureRanking(order=tuple(order), scores=tuple(scores))


def partial_rank(matrix: FeatureMatrix, limit: int,
                 bins: int = MI_BINS) -> tuple[int, ...]:
    """Only the first ``limit`` picks of the greedy order (used by inner CV)."""
    limit = min(limit, matrix.n_features)
    disc = [discretize(matrix.values[:, j], bins)
            for j in range(matrix.n_features)]
    order, _ = _greedy_order(disc, matrix.labels, limit)
    return tuple(order)


def select_top_k(matrix: FeatureMatrix, ranking: FeatureRanking,
                 k: int) -> FeatureMatrix:
    """Column subset in ranking order, provenance preserved."""
    if not 1 <= k <= matrix.n_features:
        raise ConfigError(f"k={k} outside 1..{matrix.n_features}")
    idx = list(ranking.order[:k])
    return FeatureMatrix(
        values=matrix.values[:, idx],
        columns=[matrix.columns[i] for i in idx],
        labels=matrix.labels,
    )

"""Linear SVM (binary and one-vs-one multi-class) and LDA backends.

The SVM solves the L1-loss soft-margin dual by coordinate descent with a
seeded per-epoch permutation and no shrinking, terminating on a relative
duality gap of 1e-6; everything about a fit is reproducible bit-for-bit.
Features are standardized with train-fold statistics stored in the model
and replayed at prediction time. The bias rides along as an augmented
constant feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

SVM_GAP_TOL = 1e-6
SVM_MAX_EPOCHS = 20_000
LDA_RIDGE = 1e-6

try:  # numba only accelerates the coordinate-descent epochs
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "Standardizer":
        std = values.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=values.mean(axis=0), std=std)

    @classmethod
    def identity(cls, n_features: int) -> "Standardizer":
        return cls(mean=np.zeros(n_features), std=np.ones(n_features))

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std


@dataclass
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    c_reg: float
    class_pair: tuple[int, int]  # (negative label, positive label)
    scaler: Standardizer
    gap: float
    dual_objective: float

    def decision_values(self, values: np.ndarray) -> np.ndarray:
        return self.scaler.apply(values) @ self.weights + self.bias

    def predict(self, values: np.ndarray) -> np.ndarray:
        neg, pos = self.class_pair
        return np.where(self.decision_values(values) > 0.0, pos, neg)


@dataclass
class MulticlassSvmModel:
    models: list[LinearSvmModel]
    classes: np.ndarray
    scaler: Standardizer


@dataclass
class LdaModel:
    means: np.ndarray          # (K, d)
    precision: np.ndarray      # ridge-regularized pooled covariance inverse
    log_priors: np.ndarray
    classes: np.ndarray


def _cd_epoch_loops(xa, y, alpha, w, sq_norms, order, c_reg):
    """One coordinate-descent sweep in the given order (numba-compilable)."""
    n_features = xa.shape[1]
    for k in range(order.shape[0]):
        i = order[k]
        q = sq_norms[i]
        if q <= 0.0:
            continue
        g = 0.0
        for j in range(n_features):
            g += xa[i, j] * w[j]
        g = y[i] * g - 1.0
        updated = alpha[i] - g / q
        if updated < 0.0:
            updated = 0.0
        elif updated > c_reg:
            updated = c_reg
        delta = updated - alpha[i]
        if delta != 0.0:
            step = delta * y[i]
            for j in range(n_features):
                w[j] += step * xa[i, j]
            alpha[i] = updated


if HAVE_NUMBA:
    _cd_epoch = njit(cache=True)(_cd_epoch_loops)
else:  # pragma: no cover - exercised only without numba
    def _cd_epoch(xa, y, alpha, w, sq_norms, order, c_reg):
        # Same sweep with numpy row operations (slower, tiny rounding
        # differences from blocked dot products).
        for i in order:
            q = sq_norms[i]
            if q <= 0.0:
                continue
            g = y[i] * float(xa[i] @ w) - 1.0
            updated = min(max(alpha[i] - g / q, 0.0), c_reg)
            if updated != alpha[i]:
                w += (updated - alpha[i]) * y[i] * xa[i]
                alpha[i] = updated


def _dual_cd(xa: np.ndarray, y: np.ndarray, c_reg: float, seed: int,
             tol: float, max_epochs: int):
    """L1-loss SVM dual coordinate descent on bias-augmented rows."""
    n = xa.shape[0]
    xa = np.ascontiguousarray(xa)
    alpha = np.zeros(n)
    w = np.zeros(xa.shape[1])
    sq_norms = np.einsum("ij,ij->i", xa, xa)
    rng = np.random.default_rng(seed)

    gap, dual = np.inf, 0.0
    for _ in range(max_epochs):
        order = rng.permutation(n)
        _cd_epoch(xa, y, alpha, w, sq_norms, order, c_reg)
        margins = 1.0 - y * (xa @ w)
        primal = 0.5 * float(w @ w) + c_reg * float(np.clip(margins, 0.0, None).sum())
        dual = float(alpha.sum()) - 0.5 * float(w @ w)
        gap = primal - dual
        if gap <= tol * max(abs(dual), 1e-12):
            break
    return w, gap, dual


def fit_linear_svm(values: np.ndarray, labels: np.ndarray, c_reg: float = 1.0,
                   seed: int = 0, scaler: Standardizer | None = None,
                   tol: float = SVM_GAP_TOL,
                   max_epochs: int = SVM_MAX_EPOCHS) -> LinearSvmModel:
    """Soft-margin linear SVM between the two labels present in ``labels``.

    The lower label maps to the negative side. Pass a pre-fit ``scaler``
    to share standardization across one-vs-one submodels.
    """
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size != 2:
        raise DataError(f"binary SVM needs exactly 2 classes, got {classes.size}")
    if scaler is None:
        scaler = Standardizer.fit(values)
    x = scaler.apply(values)
    xa = np.hstack([x, np.ones((x.shape[0], 1))])
    y = np.where(labels == classes[1], 1.0, -1.0)

    w, gap, dual = _dual_cd(xa, y, c_reg, seed, tol, max_epochs)
    return LinearSvmModel(
        weights=w[:-1],
        bias=float(w[-1]),
        c_reg=c_reg,
        class_pair=(int(classes[0]), int(classes[1])),
        scaler=scaler,
        gap=gap,
        dual_objective=dual,
    )


def fit_multiclass_svm(values: np.ndarray, labels: np.ndarray,
                       c_reg: float = 1.0, seed: int = 0) -> MulticlassSvmModel:
    """One-vs-one decomposition with a shared feature standardization."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise DataError(f"need at least 2 classes, got {classes.size}")
    scaler = Standardizer.fit(values)
    identity = Standardizer.identity(values.shape[1])
    scaled = scaler.apply(values)

    models = []
    pair_index = 0
    for a_idx in range(classes.size):
        for b_idx in range(a_idx + 1, classes.size):
            mask = np.isin(labels, [classes[a_idx], classes[b_idx]])
            sub_seed = int(
                np.random.SeedSequence([seed, pair_index]).generate_state(1)[0]
            )
            models.append(
                fit_linear_svm(scaled[mask], labels[mask], c_reg=c_reg,
                               seed=sub_seed, scaler=identity)
            )
            pair_index += 1
    return MulticlassSvmModel(models=models, classes=classes, scaler=scaler)


def predict_multiclass_svm(model: MulticlassSvmModel,
                           values: np.ndarray) -> np.ndarray:
    """Majority vote; ties fall to summed signed margins, then lowest class."""
    values = model.scaler.apply(np.asarray(values, dtype=float))
    n = values.shape[0]
    class_pos = {int(c): i for i, c in enumerate(model.classes)}
    votes = np.zeros((n, model.classes.size))
    scores = np.zeros((n, model.classes.size))
    for sub in model.models:
        neg, pos = sub.class_pair
        d = values @ sub.weights + sub.bias
        votes[d > 0.0, class_pos[pos]] += 1
        votes[d <= 0.0, class_pos[neg]] += 1
        scores[:, class_pos[pos]] += d
        scores[:, class_pos[neg]] -= d

    predictions = np.empty(n, dtype=model.classes.dtype)
    for i in range(n):
        best = sorted(
            range(model.classes.size),
            key=lambda j: (-votes[i, j], -scores[i, j], j),
        )[0]
        predictions[i] = model.classes[best]
    return predictions


def fit_lda(values: np.ndarray, labels: np.ndarray) -> LdaModel:
    """Equal-covariance Gaussian discriminant with a ridge on the pooled
    covariance (1e-6 of the mean diagonal)."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise DataError(f"need at least 2 classes, got {classes.size}")
    n, d = values.shape

    means = np.stack([values[labels == c].mean(axis=0) for c in classes])
    pooled = np.zeros((d, d))
    for i, c in enumerate(classes):
        centered = values[labels == c] - means[i]
        pooled += centered.T @ centered
    pooled /= max(n - classes.size, 1)
    pooled += (LDA_RIDGE * np.trace(pooled) / d) * np.eye(d)

    counts = np.array([(labels == c).sum() for c in classes], dtype=float)
    return LdaModel(
        means=means,
        precision=np.linalg.inv(pooled),
        log_priors=np.log(counts / n),
        classes=classes,
    )


def predict_lda(model: LdaModel, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    projected = values @ model.precision @ model.means.T
    offsets = 0.5 * np.einsum("kd,dj,kj->k", model.means, model.precision,
                              model.means)
    scores = projected - offsets + model.log_priors
    return model.classes[np.argmax(scores, axis=1)]

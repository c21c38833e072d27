"""Dense linear-algebra kernels shared by the whole pipeline.

Matrices are plain ``numpy.ndarray`` of float64. Three operations live here:
the symmetric-definite generalized eigendecomposition used for spatial-filter
fitting, canonical correlation analysis used for the correlation features,
and the two-dimensional Pearson correlation used everywhere a similarity
between two equal-shaped matrices is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, DegenerateInputError, NotPositiveDefiniteError

# Ridge policy for nearly singular right-hand matrices: trigger when the
# smallest eigenvalue drops below RIDGE_TRIGGER * trace/C, then add
# RIDGE_SCALE * trace/C to the diagonal.
RIDGE_TRIGGER = 1e-10
RIDGE_SCALE = 1e-8

# Relative cutoff below which singular directions are dropped in CCA.
CCA_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class GevdResult:
    """Top eigenpairs of a symmetric-definite generalized eigenproblem.

    Attributes
    ----------
    eigenvalues : (P,) ndarray
        Generalized eigenvalues, sorted descending.
    eigenvectors : (C, P) ndarray
        Matching eigenvectors, unit 2-norm, sign-normalized so the
        largest-magnitude entry of each column is positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class CcaResult:
    """Canonical coefficient matrices and canonical correlations.

    ``coeffs_a`` (p, r) and ``coeffs_b`` (q, r) project the centered input
    blocks onto canonical variates; ``correlations`` (r,) holds the matching
    canonical correlations in [0, 1], descending. r can fall below
    min(p, q) when an input block is rank deficient.
    """

    coeffs_a: np.ndarray
    coeffs_b: np.ndarray
    correlations: np.ndarray


def _as_square_pair(s, q):
    s = np.asarray(s, dtype=float)
    q = np.asarray(q, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ConfigError(f"left matrix must be square, got shape {s.shape}")
    if q.shape != s.shape:
        raise ConfigError(f"matrix shapes differ: {s.shape} vs {q.shape}")
    return s, q


def sign_normalize(w: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    w = np.array(w, dtype=float)
    idx = np.argmax(np.abs(w), axis=0)
    flip = w[idx, np.arange(w.shape[1])] < 0
    w[:, flip] *= -1.0
    return w


def sym_generalized_eig(s: np.ndarray, q: np.ndarray, p: int) -> GevdResult:
    """Top-``p`` eigenpairs of ``S w = lambda Q w`` for symmetric S, SPD Q.

    Q is reduced by Cholesky to a standard symmetric eigenproblem; a small
    ridge is added first when Q is close to singular (short-window
    covariances). Eigenvectors are returned unit-norm and sign-normalized,
    which makes the decomposition fully deterministic.

    Raises
    ------
    ConfigError
        Non-square or mismatched inputs, or ``p`` outside 1..C.
    NotPositiveDefiniteError
        Q indefinite even after the ridge.
    """
    s, q = _as_square_pair(s, q)
    c = s.shape[0]
    if not 1 <= p <= c:
        raise ConfigError(f"eigenvector count p={p} outside 1..{c}")

    # Symmetrize to remove accumulation round-off before factorizing.
    s = 0.5 * (s + s.T)
    q = 0.5 * (q + q.T)

    trace_scale = np.trace(q) / c
    if np.linalg.eigvalsh(q)[0] < RIDGE_TRIGGER * trace_scale:
        q = q + (RIDGE_SCALE * trace_scale) * np.eye(c)

    try:
        chol = np.linalg.cholesky(q)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "right-hand matrix is not positive definite after ridge"
        ) from exc

    # M = L^-1 S L^-T shares eigenvalues with the generalized problem.
    half = solve_triangular(chol, s, lower=True)
    m = solve_triangular(chol, half.T, lower=True).T
    m = 0.5 * (m + m.T)
    eigvals, eigvecs = np.linalg.eigh(m)

    order = np.argsort(eigvals)[::-1][:p]
    values = eigvals[order]
    back = solve_triangular(chol.T, eigvecs[:, order], lower=False)
    back /= np.linalg.norm(back, axis=0, keepdims=True)
    return GevdResult(eigenvalues=values, eigenvectors=sign_normalize(back))


def _orthonormal_basis(block: np.ndarray):
    """Orthonormal column basis of a centered block plus the back-map.

    QR of the block followed by an SVD of the triangular factor; singular
    directions below CCA_RANK_RTOL of the largest are dropped. Returns
    ``(basis, back)`` with ``block @ back == basis`` column-wise.
    """
    qm, rm = np.linalg.qr(block, mode="reduced")
    u, sv, vt = np.linalg.svd(rm)
    if sv.size == 0 or sv[0] <= 0.0:
        raise DegenerateInputError("rank-zero block: all columns constant")
    rank = int(np.count_nonzero(sv > CCA_RANK_RTOL * sv[0]))
    if rank == 0:
        raise DegenerateInputError("rank-zero block: all columns constant")
    basis = qm @ u[:, :rank]
    back = vt[:rank].T / sv[:rank]
    return basis, back


def cca(a: np.ndarray, b: np.ndarray) -> CcaResult:
    """Canonical correlation analysis of two observation blocks.

    Parameters
    ----------
    a : (T, p) ndarray
    b : (T, q) ndarray
        Observations in rows; columns are centered internally.

    Raises
    ------
    ConfigError
        Mismatched row counts or too few rows (T must exceed max(p, q)).
    DegenerateInputError
        A block whose columns are all constant.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[0] != b.shape[0]:
        raise ConfigError(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] <= max(a.shape[1], b.shape[1]):
        raise ConfigError(
            f"need more rows than columns: T={a.shape[0]}, "
            f"p={a.shape[1]}, q={b.shape[1]}"
        )

    basis_a, back_a = _orthonormal_basis(a - a.mean(axis=0))
    basis_b, back_b = _orthonormal_basis(b - b.mean(axis=0))

    u, sv, vt = np.linalg.svd(basis_a.T @ basis_b)
    r = min(basis_a.shape[1], basis_b.shape[1])
    return CcaResult(
        coeffs_a=back_a @ u[:, :r],
        coeffs_b=back_b @ vt[:r].T,
        correlations=np.clip(sv[:r], 0.0, 1.0),
    )


def corr2(a: np.ndarray, b: np.ndarray) -> float:
    """Two-dimensional Pearson correlation of two equal-shaped matrices.

    Entries are flattened, mean-removed, and correlated; the result is
    clipped into [-1, 1] against round-off.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ConfigError(f"shapes differ: {a.shape} vs {b.shape}")
    av = a.ravel() - a.mean()
    bv = b.ravel() - b.mean()
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("zero variance input to corr2")
    return float(np.clip(av @ bv / (na * nb), -1.0, 1.0))

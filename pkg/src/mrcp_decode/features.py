"""Class templates and the canonical correlation pattern features.

A template bank holds one grand-average matrix per class. Against it, each
trial yields three coefficients per class:

* a direct 2-D correlation of the spatially filtered trial and template,
* the same correlation after projecting both sides onto the canonical
  directions of the template block, and
* a contrast correlation between (trial - template) and the mean of the
  other templates minus this one, projected onto the canonical directions
  of the trial-difference block.

The binary variant uses two raw templates (6 coefficients); the multi-class
variant first subtracts the mean template from the trial and every template
(3K coefficients). Both run through the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, DegenerateInputError
from .numerics import _orthonormal_basis, cca, corr2
from .trca import SpatialFilter

RHO_PLAIN = "plain"
RHO_CCA = "cca"
RHO_CONTRAST = "contrast"
RHO_KINDS = (RHO_PLAIN, RHO_CCA, RHO_CONTRAST)


@dataclass(frozen=True)
class TemplateBank:
    """Per-class grand averages for one filter bank plus their mean."""

    templates: np.ndarray  # (K, C, T)
    class_ids: tuple[int, ...]
    bank_index: int
    mean_template: np.ndarray  # (C, T)

    @property
    def n_classes(self) -> int:
        return self.templates.shape[0]


@dataclass(frozen=True)
class CcpVector:
    """Ordered correlation coefficients with per-entry provenance."""

    values: np.ndarray
    provenance: tuple[tuple[int, str], ...]  # (class_id, rho kind)


def grand_average(trials: list[np.ndarray], class_id: int = 0) -> np.ndarray:
    """Elementwise mean across a class's trials."""
    if not trials:
        raise DataError(f"class {class_id} has no trials to average")
    shape = trials[0].shape
    if any(t.shape != shape for t in trials):
        raise DataError(f"class {class_id} mixes trial shapes")
    return np.mean(trials, axis=0)


def build_template_bank(
    trials_by_class: dict[int, list[np.ndarray]], bank_index: int = 0
) -> TemplateBank:
    """Grand-average every class and record the across-class mean."""
    class_ids = tuple(sorted(trials_by_class))
    templates = np.stack(
        [grand_average(trials_by_class[k], k) for k in class_ids]
    )
    return TemplateBank(
        templates=templates,
        class_ids=class_ids,
        bank_index=bank_index,
        mean_template=templates.mean(axis=0),
    )


def center_for_multiclass(
    x: np.ndarray, bank: TemplateBank
) -> tuple[np.ndarray, TemplateBank]:
    """Subtract the mean template from a trial and from every template."""
    if bank.n_classes < 2:
        raise ConfigError("multi-class centering needs at least 2 classes")
    if x.shape != bank.mean_template.shape:
        raise ConfigError(
            f"trial shape {x.shape} does not match template shape "
            f"{bank.mean_template.shape}"
        )
    centered = TemplateBank(
        templates=bank.templates - bank.mean_template,
        class_ids=bank.class_ids,
        bank_index=bank.bank_index,
        mean_template=np.zeros_like(bank.mean_template),
    )
    return x - bank.mean_template, centered


def _corr_or_zero(a: np.ndarray, b: np.ndarray) -> float:
    try:
        return corr2(a, b)
    except DegenerateInputError:
        return 0.0


def _cca_corr(left: np.ndarray, right: np.ndarray, project_with: str) -> float:
    """Correlation after projecting both sides by one CCA coefficient block.

    Degenerate inputs fall back to 0.0 so the feature vector keeps its
    length; rank-deficient blocks simply use the surviving canonical pairs.
    """
    try:
        res = cca(left, right)
    except DegenerateInputError:
        return 0.0
    coeffs = res.coeffs_a if project_with == "a" else res.coeffs_b
    return _corr_or_zero(left @ coeffs, right @ coeffs)


def _ccp(x: np.ndarray, templates: np.ndarray, w: np.ndarray) -> np.ndarray:
    """The three coefficients per class; templates along axis 0."""
    k = templates.shape[0]
    xw = x.T @ w
    values = np.empty(3 * k)
    for i in range(k):
        tw = templates[i].T @ w
        values[3 * i] = _corr_or_zero(xw, tw)
        values[3 * i + 1] = _cca_corr(xw, tw, project_with="b")
        others = (templates.sum(axis=0) - templates[i]) / (k - 1)
        contrast = others - templates[i]
        values[3 * i + 2] = _cca_corr(
            (x - templates[i]).T @ w, contrast.T @ w, project_with="a"
        )
    return values


def _provenance(class_ids) -> tuple[tuple[int, str], ...]:
    return tuple((k, kind) for k in class_ids for kind in RHO_KINDS)


def ccp_binary(
    x: np.ndarray, template_1: np.ndarray, template_2: np.ndarray,
    spatial: SpatialFilter,
) -> CcpVector:
    """Six coefficients of one trial against two raw class templates."""
    templates = np.stack([template_1, template_2])
    values = _ccp(x, templates, spatial.w)
    return CcpVector(values=values, provenance=_provenance((0, 1)))


def ccp_multiclass(x: np.ndarray, bank: TemplateBank,
                   spatial: SpatialFilter) -> CcpVector:
    """3K coefficients of one centered trial against centered templates.

    Callers are expected to have run :func:`center_for_multiclass` on both
    the trial and the bank.
    """
    if bank.n_classes < 2:
        raise ConfigError("multi-class pattern needs at least 2 classes")
    values = _ccp(x, bank.templates, spatial.w)
    return CcpVector(values=values, provenance=_provenance(bank.class_ids))


class CcpExtractor:
    """Repeated-extraction form of the pattern with template work hoisted.

    The template-side projections and their orthonormal bases are fixed per
    class, so they are computed once; per trial only the trial-side bases
    and the small cross-product SVDs remain. Values match :func:`ccp_binary`
    / :func:`ccp_multiclass` exactly.
    """

    def __init__(self, templates: np.ndarray, w: np.ndarray):
        self.w = w
        k = templates.shape[0]
        self.n_classes = k
        self.templates_cache = templates
        self.template_proj = [templates[i].T @ w for i in range(k)]
        self.template_side = [self._side(p) for p in self.template_proj]
        self.contrast_proj = []
        self.contrast_side = []
        total = templates.sum(axis=0)
        for i in range(k):
            contrast = (total - templates[i]) / (k - 1) - templates[i]
            proj = contrast.T @ w
            self.contrast_proj.append(proj)
            self.contrast_side.append(self._side(proj))

    @staticmethod
    def _side(proj: np.ndarray):
        try:
            return _orthonormal_basis(proj - proj.mean(axis=0))
        except DegenerateInputError:
            return None

    @staticmethod
    def _paired_corr(left_raw, left_side, right_raw, right_side, use_left):
        if left_side is None or right_side is None:
            return 0.0
        basis_l, back_l = left_side
        basis_r, back_r = right_side
        u, _, vt = np.linalg.svd(basis_l.T @ basis_r)
        r = min(basis_l.shape[1], basis_r.shape[1])
        coeffs = back_l @ u[:, :r] if use_left else back_r @ vt[:r].T
        return _corr_or_zero(left_raw @ coeffs, right_raw @ coeffs)

    def extract(self, x: np.ndarray) -> np.ndarray:
        xw = x.T @ self.w
        x_side = self._side(xw)
        values = np.empty(3 * self.n_classes)
        for i in range(self.n_classes):
            tw = self.template_proj[i]
            values[3 * i] = _corr_or_zero(xw, tw)
            values[3 * i + 1] = self._paired_corr(
                xw, x_side, tw, self.template_side[i], use_left=False
            )
            # Projecting the difference (not differencing the projections)
            # keeps this bit-identical to the one-shot code path.
            dw = (x - self.templates_cache[i]).T @ self.w
            values[3 * i + 2] = self._paired_corr(
                dw, self._side(dw), self.contrast_proj[i],
                self.contrast_side[i], use_left=True,
            )
        return values

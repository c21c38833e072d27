"""End-to-end composition: fold fitting, cross-validation, sweeps, reports.

A fold model is fitted from training trials only: per band it holds the
spatial filter and template bank, then the pooled feature matrix feeds the
mRMR ranking, the inner-CV choice of k, and the classifier. Prediction
replays the same per-band extraction against the stored templates. The
harness wraps this into seeded stratified k-fold evaluation, accuracy
sweeps over the eigenvector count, and report assembly.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .classify import (
    LdaModel,
    MulticlassSvmModel,
    fit_lda,
    fit_multiclass_svm,
    predict_lda,
    predict_multiclass_svm,
)
from .dataio import EegTrial, TrialSet, znormalize
from .errors import ConfigError, DataError
from .features import (
    RHO_KINDS,
    CcpExtractor,
    TemplateBank,
    build_template_bank,
    center_for_multiclass,
)
from .filterbank import BandSpec, apply_zero_phase, make_filter_banks, widest_band
from .numerics import corr2
from .selection import (
    FeatureColumn,
    FeatureMatrix,
    FeatureRanking,
    mrmr_rank,
    partial_rank,
    select_top_k,
)
from .trca import SpatialFilter, class_covariances, fit_binary_filter, \
    fit_multiclass_filter

VARIANTS = ("bstrca", "bfbtrca", "mstrca", "mfbtrca")
CLASSIFIERS = ("svm", "lda")
DEFAULT_K_GRID = (5, 10, 15, 20, 30, 40)
INNER_FOLDS = 5


@dataclass
class PipelineConfig:
    variant: str = "mfbtrca"
    p: int | None = None
    classifier: str = "svm"
    c_reg: float = 1.0
    banks: bool | None = None
    k_grid: tuple[int, ...] | None = None
    folds: int = 10
    seed: int = 0
    jobs: int = 1

    @property
    def is_binary(self) -> bool:
        return self.variant in ("bstrca", "bfbtrca")

    @property
    def banks_enabled(self) -> bool:
        if self.banks is not None:
            return self.banks
        return self.variant in ("bfbtrca", "mfbtrca")

    @property
    def selection_enabled(self) -> bool:
        # Feature selection only exists as part of the filter-bank machinery.
        return self.banks_enabled

    @property
    def effective_p(self) -> int:
        if self.p is not None:
            return self.p
        return 2 if self.is_binary else 3

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant '{self.variant}'")
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(f"unknown classifier '{self.classifier}'")
        if self.p is not None and self.p < 1:
            raise ConfigError(f"p must be positive, got {self.p}")
        if self.c_reg <= 0:
            raise ConfigError(f"c_reg must be positive, got {self.c_reg}")
        if self.folds < 2:
            raise ConfigError(f"need at least 2 folds, got {self.folds}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be positive, got {self.jobs}")
        if self.k_grid is not None and any(k < 1 for k in self.k_grid):
            raise ConfigError("k grid entries must be positive")

    def echo(self) -> dict:
        doc = asdict(self)
        doc["k_grid"] = list(self.k_grid) if self.k_grid is not None else None
        doc["resolved"] = {
            "p": self.effective_p,
            "banks_enabled": self.banks_enabled,
            "selection_enabled": self.selection_enabled,
        }
        return doc


@dataclass
class BandModel:
    """Fitted state of one filter bank: spatial filter plus templates."""

    band: BandSpec
    spatial: SpatialFilter
    templates: TemplateBank        # centered for the multi-class variant
    trial_offset: np.ndarray | None  # mean template subtracted from trials
    extractor: CcpExtractor

    def extract_filtered(self, x: np.ndarray) -> np.ndarray:
        """Pattern values of one already z-normalized, band-filtered trial."""
        if self.trial_offset is not None:
            x = x - self.trial_offset
        return self.extractor.extract(x)

    def extract(self, trial: EegTrial) -> np.ndarray:
        return self.extract_filtered(apply_zero_phase(trial, self.band).data)


@dataclass
class FoldModel:
    config: PipelineConfig
    band_models: list[BandModel]
    columns: list[FeatureColumn]
    ranking: FeatureRanking | None
    k: int
    selected: tuple[int, ...]
    classifier: MulticlassSvmModel | LdaModel
    class_names: list[str]


@dataclass
class FoldResult:
    accuracy: float
    predictions: np.ndarray
    truth: np.ndarray
    k: int
    selected_headers: list[str]


@dataclass
class EvaluationReport:
    config: dict
    class_names: list[str]
    fold_accuracies: list[float]
    mean_accuracy: float
    std_accuracy: float
    confusion: np.ndarray
    template_corr: np.ndarray
    fold_records: list[dict]
    bands: list[str]
    wall_clock_s: float

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "class_names": self.class_names,
            "fold_accuracies": self.fold_accuracies,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "confusion": self.confusion.tolist(),
            "template_corr": self.template_corr.tolist(),
            "fold_records": self.fold_records,
            "bands": self.bands,
            "wall_clock_s": self.wall_clock_s,
        }


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _bands_for(cfg: PipelineConfig, fs: float) -> tuple[BandSpec, ...]:
    if cfg.banks_enabled:
        return make_filter_banks(fs).bands
    return (widest_band(fs),)


def _check_trainable(train: TrialSet, cfg: PipelineConfig) -> None:
    if train.role == "test":
        raise ConfigError("refusing to fit on a trial set tagged as test data")
    labels = train.labels()
    counts = np.bincount(labels, minlength=train.n_classes)
    if np.any(counts < 2):
        missing = int(np.argmin(counts))
        raise DataError(
            f"class '{train.class_names[missing]}' has {counts[missing]} "
            "training trials; need at least 2"
        )
    if cfg.is_binary and train.n_classes != 2:
        raise ConfigError(
            f"variant '{cfg.variant}' needs exactly 2 classes, "
            f"got {train.n_classes}"
        )


def _fit_band(band: BandSpec, filtered: list[np.ndarray], labels: np.ndarray,
              n_classes: int, cfg: PipelineConfig) -> BandModel:
    by_class = {
        k: [x for x, lab in zip(filtered, labels) if lab == k]
        for k in range(n_classes)
    }
    bank = build_template_bank(by_class, band.index)
    covs = [class_covariances(by_class[k], k) for k in range(n_classes)]
    if cfg.is_binary:
        spatial = fit_binary_filter(covs[0], covs[1], cfg.effective_p)
        return BandModel(
            band=band, spatial=spatial, templates=bank, trial_offset=None,
            extractor=CcpExtractor(bank.templates, spatial.w),
        )
    spatial = fit_multiclass_filter(covs, cfg.effective_p)
    offset = bank.mean_template
    _, centered = center_for_multiclass(bank.mean_template, bank)
    return BandModel(
        band=band, spatial=spatial, templates=centered, trial_offset=offset,
        extractor=CcpExtractor(centered.templates, spatial.w),
    )


def _feature_matrix(band_models: list[BandModel],
                    filtered_by_band: dict[int, list[np.ndarray]],
                    labels: np.ndarray) -> FeatureMatrix:
    blocks = []
    columns: list[FeatureColumn] = []
    for bm in band_models:
        arrays = filtered_by_band[bm.band.index]
        blocks.append(np.stack([bm.extract_filtered(x) for x in arrays]))
        columns.extend(
            FeatureColumn(bank=bm.band.index, class_id=k, rho=kind)
            for k in bm.templates.class_ids for kind in RHO_KINDS
        )
    return FeatureMatrix(
        values=np.hstack(blocks), columns=columns, labels=labels.copy()
    )


def default_k_grid(n_features: int) -> tuple[int, ...]:
    grid = [k for k in DEFAULT_K_GRID if k < n_features]
    grid.append(n_features)
    return tuple(grid)


def _fit_classifier(values: np.ndarray, labels: np.ndarray,
                    cfg: PipelineConfig, seed: int):
    if cfg.classifier == "svm":
        return fit_multiclass_svm(values, labels, c_reg=cfg.c_reg, seed=seed)
    return fit_lda(values, labels)


def _predict_classifier(model, values: np.ndarray) -> np.ndarray:
    if isinstance(model, MulticlassSvmModel):
        return predict_multiclass_svm(model, values)
    return predict_lda(model, values)


def stratified_folds(labels: np.ndarray, n_folds: int, seed: int) -> list[np.ndarray]:
    """Seeded stratified fold assignment; returns test indices per fold."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for k in np.unique(labels):
        members = np.flatnonzero(labels == k)
        if members.size < n_folds:
            raise DataError(
                f"class {k} has {members.size} trials; need at least "
                f"{n_folds} for {n_folds}-fold evaluation"
            )
        for j, idx in enumerate(rng.permutation(members)):
            folds[j % n_folds].append(int(idx))
    return [np.array(sorted(f), dtype=int) for f in folds]


def choose_k(features: FeatureMatrix, cfg: PipelineConfig, seed: int) -> int:
    """Pick k by stratified inner cross-validation; smallest k wins ties."""
    grid = cfg.k_grid if cfg.k_grid is not None else default_k_grid(
        features.n_features
    )
    grid = tuple(sorted({min(k, features.n_features) for k in grid}))
    if len(grid) == 1:
        return grid[0]

    labels = features.labels
    min_count = np.bincount(labels).min()
    inner = min(INNER_FOLDS, int(min_count))
    if inner < 2:
        return features.n_features

    limit = max((k for k in grid if k < features.n_features), default=0)
    folds = stratified_folds(labels, inner, _derive_seed(seed, 101))
    scores = np.zeros(len(grid))
    for fold_i, test_idx in enumerate(folds):
        mask = np.ones(labels.size, dtype=bool)
        mask[test_idx] = False
        train_values = features.values[mask]
        train_labels = labels[mask]
        inner_matrix = FeatureMatrix(
            values=train_values, columns=features.columns, labels=train_labels
        )
        order = partial_rank(inner_matrix, limit) if limit else ()
        for gi, k in enumerate(grid):
            cols = list(order[:k]) if k < features.n_features else \
                list(range(features.n_features))
            model = _fit_classifier(
                train_values[:, cols], train_labels, cfg,
                _derive_seed(seed, 211, fold_i, gi),
            )
            pred = _predict_classifier(model, features.values[test_idx][:, cols])
            scores[gi] += float(np.mean(pred == labels[test_idx]))
    best = int(np.argmax(scores))  # argmax returns the smallest tied k
    return grid[best]


def fit_fold_model(train: TrialSet, cfg: PipelineConfig,
                   fold_seed: int | None = None) -> FoldModel:
    """Fit templates, spatial filters, selection, and classifier on train."""
    cfg.validate()
    _check_trainable(train, cfg)
    seed = cfg.seed if fold_seed is None else fold_seed
    bands = _bands_for(cfg, train.sampling_rate)
    znormed = [znormalize(t) for t in train.trials]
    labels = train.labels()

    filtered_by_band = {
        band.index: [apply_zero_phase(t, band).data for t in znormed]
        for band in bands
    }
    band_models = [
        _fit_band(band, filtered_by_band[band.index], labels, train.n_classes,
                  cfg)
        for band in bands
    ]
    features = _feature_matrix(band_models, filtered_by_band, labels)

    if cfg.selection_enabled:
        ranking = mrmr_rank(features)
        k = choose_k(features, cfg, seed)
        selected = ranking.order[:k]
        train_values = features.values[:, list(selected)]
    else:
        ranking = None
        k = features.n_features
        selected = tuple(range(features.n_features))
        train_values = features.values

    classifier = _fit_classifier(train_values, labels, cfg,
                                 _derive_seed(seed, 307))
    return FoldModel(
        config=cfg,
        band_models=band_models,
        columns=features.columns,
        ranking=ranking,
        k=k,
        selected=tuple(selected),
        classifier=classifier,
        class_names=list(train.class_names),
    )


def predict_fold(model: FoldModel, test: TrialSet) -> np.ndarray:
    """Predict labels for test trials against the fitted fold state."""
    znormed = [znormalize(t) for t in test.trials]
    blocks = [
        np.stack([bm.extract(t) for t in znormed])
        for bm in model.band_models
    ]
    values = np.hstack(blocks)[:, list(model.selected)]
    return _predict_classifier(model.classifier, values)


def extract_features(ds: TrialSet, cfg: PipelineConfig) -> FeatureMatrix:
    """Pooled filter-bank feature matrix of a dataset fitted on itself."""
    model = fit_fold_model(
        ds if ds.role != "test" else ds.subset(range(len(ds.trials)), role=None),
        cfg,
    )
    znormed = [znormalize(t) for t in ds.trials]
    blocks = [
        np.stack([bm.extract(t) for t in znormed])
        for bm in model.band_models
    ]
    return FeatureMatrix(
        values=np.hstack(blocks), columns=model.columns, labels=ds.labels()
    )


def run_fold(train: TrialSet, test: TrialSet, cfg: PipelineConfig,
             fold_seed: int | None = None) -> FoldResult:
    if not test.trials:
        raise DataError("empty test set")
    model = fit_fold_model(train, cfg, fold_seed)
    predictions = predict_fold(model, test)
    truth = test.labels()
    return FoldResult(
        accuracy=float(np.mean(predictions == truth)),
        predictions=predictions,
        truth=truth,
        k=model.k,
        selected_headers=[model.columns[i].header() for i in model.selected],
    )


def _run_fold_payload(args) -> FoldResult:
    ds, cfg, test_idx, fold_seed = args
    mask = np.ones(len(ds.trials), dtype=bool)
    mask[test_idx] = False
    train = ds.subset(np.flatnonzero(mask), role="train")
    test = ds.subset(test_idx, role="test")
    return run_fold(train, test, cfg, fold_seed)


def confusion(predictions: np.ndarray, truth: np.ndarray, n_classes: int) -> np.ndarray:
    """Row-normalized confusion matrix; rows are truth, columns predictions."""
    predictions = np.asarray(predictions, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if predictions.size != truth.size:
        raise ConfigError("prediction/truth length mismatch")
    for name, arr in (("prediction", predictions), ("truth", truth)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ConfigError(f"{name} label outside 0..{n_classes - 1}")
    counts = np.zeros((n_classes, n_classes))
    np.add.at(counts, (truth, predictions), 1.0)
    sums = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, sums, out=np.zeros_like(counts), where=sums > 0)


def template_corr_map(templates: np.ndarray, spatial: SpatialFilter) -> np.ndarray:
    """Symmetric K x K map of corr2 between spatially filtered templates."""
    k = templates.shape[0]
    projected = [templates[i].T @ spatial.w for i in range(k)]
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = corr2(projected[i], projected[j])
    return out


def dataset_template_map(ds: TrialSet, cfg: PipelineConfig) -> np.ndarray:
    """Template correlation map over the full dataset in the widest band."""
    band = widest_band(ds.sampling_rate)
    filtered = [apply_zero_phase(znormalize(t), band) for t in ds.trials]
    by_class = {
        k: [t.data for t in filtered if t.label == k]
        for k in range(ds.n_classes)
    }
    bank = build_template_bank(by_class, band.index)
    covs = [class_covariances(by_class[k], k) for k in range(ds.n_classes)]
    p = min(cfg.effective_p, len(ds.channel_names))
    spatial = fit_multiclass_filter(covs, p)
    return template_corr_map(bank.templates, spatial)


def kfold_evaluate(ds: TrialSet, cfg: PipelineConfig) -> EvaluationReport:
    """Seeded stratified k-fold evaluation with report assembly."""
    cfg.validate()
    started = time.perf_counter()
    labels = ds.labels()
    folds = stratified_folds(labels, cfg.folds, cfg.seed)
    payloads = [
        (ds, cfg, test_idx, _derive_seed(cfg.seed, fold_i))
        for fold_i, test_idx in enumerate(folds)
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_fold_payload, payloads))
    else:
        results = [_run_fold_payload(p) for p in payloads]

    accuracies = [r.accuracy for r in results]
    pooled_pred = np.concatenate([r.predictions for r in results])
    pooled_truth = np.concatenate([r.truth for r in results])
    fold_records = [
        {
            "fold": i,
            "accuracy": r.accuracy,
            "n_test": int(r.truth.size),
            "k": r.k,
            "selected_features": r.selected_headers,
        }
        for i, r in enumerate(results)
    ]
    report = EvaluationReport(
        config=cfg.echo(),
        class_names=list(ds.class_names),
        fold_accuracies=accuracies,
        mean_accuracy=float(np.mean(accuracies)),
        std_accuracy=float(np.std(accuracies)),
        confusion=confusion(pooled_pred, pooled_truth, ds.n_classes),
        template_corr=dataset_template_map(ds, cfg),
        fold_records=fold_records,
        bands=[b.describe() for b in _bands_for(cfg, ds.sampling_rate)],
        wall_clock_s=time.perf_counter() - started,
    )
    return report


def p_sweep(ds: TrialSet, cfg: PipelineConfig,
            p_range: tuple[int, ...] | None = None) -> list[dict]:
    """Accuracy curve of the single-band multi-class variant over P."""
    n_channels = len(ds.channel_names)
    if p_range is None:
        p_range = tuple(range(1, n_channels + 1))
    if any(p < 1 or p > n_channels for p in p_range):
        raise ConfigError(f"P range outside 1..{n_channels}")
    curve = []
    for p in p_range:
        sweep_cfg = replace(cfg, variant="mstrca", p=p, banks=None)
        report = kfold_evaluate(ds, sweep_cfg)
        curve.append({
            "p": p,
            "mean_accuracy": report.mean_accuracy,
            "std_accuracy": report.std_accuracy,
        })
    return curve

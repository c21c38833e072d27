"""Multi-class upper-limb movement decoding from low-frequency EEG."""

from .dataio import EegTrial, TrialSet, extract_window, load_manifest, \
    save_dataset, znormalize
from .pipeline import (
    EvaluationReport,
    PipelineConfig,
    fit_fold_model,
    kfold_evaluate,
    p_sweep,
    predict_fold,
    run_fold,
)
from .synth import SynthSpec, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "EegTrial",
    "TrialSet",
    "extract_window",
    "load_manifest",
    "save_dataset",
    "znormalize",
    "EvaluationReport",
    "PipelineConfig",
    "fit_fold_model",
    "kfold_evaluate",
    "p_sweep",
    "predict_fold",
    "run_fold",
    "SynthSpec",
    "generate_synthetic",
    "__version__",
]

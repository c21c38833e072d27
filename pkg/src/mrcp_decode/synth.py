"""Synthetic slow-potential dataset generator used as the desk-scale oracle.

Each class is a negative bell-shaped deflection with its own amplitude,
latency, and width, mapped to channels through a class-specific mixing
vector. Trials add spatially mixed 1/f noise at a requested SNR, optionally
with per-trial onset jitter for non-aligned experiments. Everything is
drawn from a single seeded generator, so a spec maps to exactly one
dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataio import MONTAGE, EegTrial, TrialSet
from .errors import ConfigError


@dataclass(frozen=True)
class ClassShape:
    """Waveform parameters of one class's deflection."""

    amplitude: float
    latency_s: float
    width_s: float


@dataclass
class SynthSpec:
    n_classes: int
    trials_per_class: int
    n_channels: int = 11
    n_samples: int = 512
    sampling_rate: float = 256.0
    snr_db: float = 0.0
    seed: int = 0
    jitter_samples: int = 0
    shapes: list[ClassShape] | None = None
    pattern_ids: list[int] | None = None  # classes sharing an id share mixing
    class_names: list[str] | None = None
    pattern_overlap: float = 1.0  # weight of the shared direction in mixing

    def validate(self) -> None:
        if self.n_classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.trials_per_class < 1:
            raise ConfigError("need at least 1 trial per class")
        if self.n_channels < 1 or self.n_samples < 64:
            raise ConfigError("channel/sample counts too small")
        if not np.isfinite(self.snr_db):
            raise ConfigError("snr_db must be finite")
        if self.jitter_samples < 0:
            raise ConfigError("jitter must be non-negative")
        if self.shapes is not None and len(self.shapes) != self.n_classes:
            raise ConfigError("one shape per class required")
        if self.pattern_ids is not None and len(self.pattern_ids) != self.n_classes:
            raise ConfigError("one pattern id per class required")
        if self.class_names is not None and len(self.class_names) != self.n_classes:
            raise ConfigError("one name per class required")


def default_shapes(spec: SynthSpec) -> list[ClassShape]:
    """Distinct latencies/widths/amplitudes spread over the window."""
    duration = spec.n_samples / spec.sampling_rate
    latencies = np.linspace(0.3, 0.7, spec.n_classes) * duration
    widths = np.linspace(0.05, 0.1, spec.n_classes) * duration
    amplitudes = 1.0 + 0.1 * np.arange(spec.n_classes)
    return [
        ClassShape(amplitude=float(a), latency_s=float(b), width_s=float(c))
        for a, b, c in zip(amplitudes, latencies, widths)
    ]


def pink_noise(rng: np.random.Generator, n_series: int, n_samples: int) -> np.ndarray:
    """Unit-variance noise rows with a 1/f amplitude spectrum."""
    freqs = np.fft.rfftfreq(n_samples)
    shaping = np.zeros_like(freqs)
    shaping[1:] = 1.0 / np.sqrt(freqs[1:])
    spectrum = shaping * (
        rng.standard_normal((n_series, freqs.size))
        + 1j * rng.standard_normal((n_series, freqs.size))
    )
    series = np.fft.irfft(spectrum, n=n_samples, axis=1)
    return series / series.std(axis=1, keepdims=True)


def _bell_wave(spec: SynthSpec, shape: ClassShape, shift: int) -> np.ndarray:
    t = np.arange(spec.n_samples) / spec.sampling_rate
    center = shape.latency_s + shift / spec.sampling_rate
    return -shape.amplitude * np.exp(-(((t - center) / shape.width_s) ** 2))


def generate_synthetic(spec: SynthSpec) -> TrialSet:
    """Materialize a TrialSet from a spec; same seed gives identical data."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    shapes = spec.shapes if spec.shapes is not None else default_shapes(spec)
    pattern_ids = (
        spec.pattern_ids if spec.pattern_ids is not None
        else list(range(spec.n_classes))
    )

    shared = rng.standard_normal(spec.n_channels)
    patterns = {}
    for pid in sorted(set(pattern_ids)):
        own = rng.standard_normal(spec.n_channels)
        vec = spec.pattern_overlap * shared + own
        patterns[pid] = vec / np.linalg.norm(vec)

    noise_mix = rng.standard_normal((spec.n_channels, spec.n_channels))
    noise_mix /= np.sqrt(spec.n_channels)
    snr_linear = 10 ** (spec.snr_db / 10)

    trials = []
    for k in range(spec.n_classes):
        mixing = patterns[pattern_ids[k]]
        for _ in range(spec.trials_per_class):
            shift = (
                int(rng.integers(-spec.jitter_samples, spec.jitter_samples + 1))
                if spec.jitter_samples else 0
            )
            signal = np.outer(mixing, _bell_wave(spec, shapes[k], shift))
            noise = noise_mix @ pink_noise(rng, spec.n_channels, spec.n_samples)
            scale = np.sqrt(
                np.mean(signal**2) / (np.mean(noise**2) * snr_linear)
            )
            onset = int(round(shapes[k].latency_s * spec.sampling_rate)) + shift
            trials.append(
                EegTrial(
                    data=signal + scale * noise,
                    label=k,
                    subject="synth",
                    sampling_rate=spec.sampling_rate,
                    onset_sample=onset,
                )
            )

    if spec.n_channels <= len(MONTAGE):
        channels = MONTAGE[: spec.n_channels]
    else:
        channels = MONTAGE + [f"EX{i}" for i in range(spec.n_channels - len(MONTAGE))]
    names = (
        spec.class_names if spec.class_names is not None
        else [f"class{k}" for k in range(spec.n_classes)]
    )
    return TrialSet(
        trials=trials,
        channel_names=channels,
        class_names=list(names),
        dataset_id=f"synth-seed{spec.seed}",
    )


def spec_from_dict(doc: dict) -> SynthSpec:
    """Build a SynthSpec from the JSON dialect used by the CLI."""
    known = {
        "n_classes", "trials_per_class", "n_channels", "n_samples",
        "sampling_rate", "snr_db", "seed", "jitter_samples", "class_names",
        "pattern_overlap",
    }
    unknown = set(doc) - known - {"shapes", "pattern_ids"}
    if unknown:
        raise ConfigError(f"unknown synth spec fields: {sorted(unknown)}")
    kwargs = {key: doc[key] for key in known if key in doc}
    if "shapes" in doc:
        kwargs["shapes"] = [ClassShape(**entry) for entry in doc["shapes"]]
    if "pattern_ids" in doc:
        kwargs["pattern_ids"] = list(doc["pattern_ids"])
    try:
        return SynthSpec(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"invalid synth spec: {exc}") from exc

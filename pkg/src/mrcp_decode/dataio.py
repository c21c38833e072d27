"""Trial/dataset model, JSON-manifest ingestion, normalization, windowing.

On-disk layout: a ``manifest.json`` next to one raw binary file per trial.
Trial payloads are little-endian float32, row-major channels x samples;
trajectory payloads are little-endian float32 1-D series. The manifest
carries the schema version, sampling rate, channel and class lists, and one
record per trial (file, label, subject, optional onset sample, optional
trajectory file, optional cue sample).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError

MANIFEST_VERSION = 1

# 11-channel montage used by both public recordings.
MONTAGE = ["FCz", "C3", "Cz", "C4", "CPz", "F3", "Fz", "F4", "P3", "Pz", "P4"]


@dataclass
class EegTrial:
    """One trial: channels x samples matrix plus its metadata."""

    data: np.ndarray
    label: int
    subject: str
    sampling_rate: float
    onset_sample: int | None = None
    cue_sample: int | None = None

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass
class TrialSet:
    """Immutable-by-convention collection of same-shape trials.

    ``role`` tags provenance when the set came out of a train/test split;
    template construction refuses sets tagged ``"test"``.
    """

    trials: list[EegTrial]
    channel_names: list[str]
    class_names: list[str]
    dataset_id: str = ""
    role: str | None = None

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def sampling_rate(self) -> float:
        return self.trials[0].sampling_rate

    def labels(self) -> np.ndarray:
        return np.array([t.label for t in self.trials], dtype=int)

    def subset(self, indices, role: str | None = None) -> "TrialSet":
        return TrialSet(
            trials=[self.trials[i] for i in indices],
            channel_names=self.channel_names,
            class_names=self.class_names,
            dataset_id=self.dataset_id,
            role=role if role is not None else self.role,
        )

    def restrict_classes(self, keep: list[int]) -> "TrialSet":
        """Keep only the listed classes, relabelling to 0..len(keep)-1."""
        remap = {old: new for new, old in enumerate(keep)}
        trials = [
            replace(t, label=remap[t.label]) for t in self.trials if t.label in remap
        ]
        return TrialSet(
            trials=trials,
            channel_names=self.channel_names,
            class_names=[self.class_names[i] for i in keep],
            dataset_id=self.dataset_id,
            role=self.role,
        )


@dataclass
class ManifestTrial:
    file: str
    label: str
    subject: str = ""
    onset_sample: int | None = None
    trajectory_file: str | None = None
    cue_sample: int | None = None


@dataclass
class Manifest:
    sampling_rate_hz: float
    channels: list[str]
    classes: list[str]
    trials: list[ManifestTrial]
    version: int = MANIFEST_VERSION
    dataset_id: str = ""


def read_f32(path: Path, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Read a little-endian float32 payload, optionally checking its shape."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"payload file not found: {path}")
    raw = np.fromfile(path, dtype="<f4")
    if shape is not None:
        expected = int(np.prod(shape))
        if raw.size != expected:
            raise DataError(
                f"byte-length mismatch in {path}: expected {expected * 4} bytes "
                f"for shape {shape}, found {raw.size * 4}"
            )
        raw = raw.reshape(shape)
    if not np.all(np.isfinite(raw)):
        raise DataError(f"non-finite samples in {path}")
    return raw.astype(np.float64)


def write_f32(path: Path, array: np.ndarray) -> None:
    np.asarray(array, dtype="<f4").tofile(path)


def parse_manifest(path: Path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest is not valid JSON: {path}: {exc}") from exc
    for key in ("sampling_rate_hz", "channels", "classes", "trials"):
        if key not in doc:
            raise DataError(f"manifest missing required field '{key}': {path}")
    trials = [
        ManifestTrial(
            file=entry["file"],
            label=entry["label"],
            subject=str(entry.get("subject", "")),
            onset_sample=entry.get("onset_sample"),
            trajectory_file=entry.get("trajectory_file"),
            cue_sample=entry.get("cue_sample"),
        )
        for entry in doc["trials"]
    ]
    return Manifest(
        sampling_rate_hz=float(doc["sampling_rate_hz"]),
        channels=list(doc["channels"]),
        classes=list(doc["classes"]),
        trials=trials,
        version=int(doc.get("version", MANIFEST_VERSION)),
        dataset_id=str(doc.get("dataset_id", "")),
    )


def load_manifest(path) -> TrialSet:
    """Materialize the TrialSet described by a manifest file.

    Channel order follows the manifest; labels are mapped to indices into
    the manifest's class list. Raises DataError on missing files, byte-length
    mismatches, unknown labels, or an empty trial list.
    """
    path = Path(path)
    manifest = parse_manifest(path)
    if not manifest.trials:
        raise DataError(f"manifest lists no trials: {path}")
    base = path.parent
    class_index = {name: i for i, name in enumerate(manifest.classes)}
    n_ch = len(manifest.channels)

    trials = []
    shape_seen: tuple[int, int] | None = None
    for entry in manifest.trials:
        if entry.label not in class_index:
            raise DataError(
                f"unknown label '{entry.label}' in {path} (classes: {manifest.classes})"
            )
        raw = read_f32(base / entry.file)
        if raw.size % n_ch != 0:
            raise DataError(
                f"byte-length mismatch in {base / entry.file}: "
                f"{raw.size * 4} bytes is not divisible into {n_ch} channels"
            )
        data = raw.reshape(n_ch, raw.size // n_ch)
        if shape_seen is None:
            shape_seen = data.shape
        elif data.shape != shape_seen:
            raise DataError(
                f"trial shape {data.shape} in {entry.file} differs from "
                f"first trial shape {shape_seen}"
            )
        trials.append(
            EegTrial(
                data=data,
                label=class_index[entry.label],
                subject=entry.subject,
                sampling_rate=manifest.sampling_rate_hz,
                onset_sample=entry.onset_sample,
                cue_sample=entry.cue_sample,
            )
        )
    return TrialSet(
        trials=trials,
        channel_names=manifest.channels,
        class_names=manifest.classes,
        dataset_id=manifest.dataset_id,
    )


def save_dataset(ds: TrialSet, out_dir) -> Path:
    """Write a TrialSet as manifest + per-trial .f32 payloads.

    Payloads are cast to float32, so a load/save/load round-trip is
    bit-exact. Returns the manifest path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, trial in enumerate(ds.trials):
        name = f"trial_{i:04d}.f32"
        write_f32(out / name, trial.data)
        record: dict = {"file": name, "label": ds.class_names[trial.label]}
        if trial.subject:
            record["subject"] = trial.subject
        if trial.onset_sample is not None:
            record["onset_sample"] = int(trial.onset_sample)
        if trial.cue_sample is not None:
            record["cue_sample"] = int(trial.cue_sample)
        entries.append(record)
    doc = {
        "version": MANIFEST_VERSION,
        "dataset_id": ds.dataset_id,
        "sampling_rate_hz": ds.sampling_rate,
        "channels": ds.channel_names,
        "classes": ds.class_names,
        "trials": entries,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def znormalize(trial: EegTrial) -> EegTrial:
    """Scale every channel to mean 0 and population standard deviation 1."""
    data = trial.data
    mean = data.mean(axis=1, keepdims=True)
    std = data.std(axis=1, keepdims=True)
    flat = np.flatnonzero(std[:, 0] == 0.0)
    if flat.size:
        raise DataError(f"zero-variance channel at index {flat[0]}")
    return replace(trial, data=(data - mean) / std)


def extract_window(
    trial: EegTrial, center_sample: int, pre_seconds: float, post_seconds: float
) -> EegTrial:
    """Crop a trial to [center - pre, center + post) in seconds.

    Sample counts are rounded per side, so the window length is
    round(pre*fs) + round(post*fs) regardless of the center position.
    """
    fs = trial.sampling_rate
    pre = int(round(pre_seconds * fs))
    post = int(round(post_seconds * fs))
    start = center_sample - pre
    stop = center_sample + post
    if start < 0 or stop > trial.n_samples or stop <= start:
        raise DataError(
            f"window [{start}, {stop}) outside recording of {trial.n_samples} samples"
        )
    return replace(
        trial,
        data=trial.data[:, start:stop].copy(),
        onset_sample=center_sample - start,
        cue_sample=None,
    )

"""Low-frequency band-pass filter bank with zero-phase application.

Ten band-pass designs share a fixed 0.5 Hz low edge while the high edge
steps from 1 Hz to 10 Hz. Each band is a 4th-order Butterworth applied
forward-backward (zero phase, effective 8th order) with odd-symmetric edge
extension of three times the filter order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .errors import ConfigError, DataError
from .dataio import EegTrial

LOW_EDGE_HZ = 0.5
HIGH_EDGES_HZ = tuple(float(h) for h in range(1, 11))
FILTER_ORDER = 4  # band-pass transfer-function order
PAD_LENGTH = 3 * FILTER_ORDER
WIDEST_HIGH_HZ = 10.0


@dataclass(frozen=True)
class BandSpec:
    """One band of the filter bank, with its designed second-order sections."""

    low_hz: float
    high_hz: float
    index: int
    sos: np.ndarray | None = None

    def describe(self) -> str:
        return f"band{self.index:02d}({self.low_hz}-{self.high_hz}Hz)"


@dataclass(frozen=True)
class FilterBankSet:
    bands: tuple[BandSpec, ...]
    sampling_rate: float

    def __len__(self) -> int:
        return len(self.bands)


def _design(low: float, high: float, index: int, fs: float) -> BandSpec:
    # butter() with N=2 yields a band-pass of transfer-function order 4.
    sos = butter(FILTER_ORDER // 2, [low, high], btype="bandpass",
                 fs=fs, output="sos")
    return BandSpec(low_hz=low, high_hz=high, index=index, sos=sos)


def make_filter_banks(fs: float) -> FilterBankSet:
    """Design the ten (0.5, h) Hz bands for h = 1..10 at sampling rate ``fs``."""
    if fs <= 20.0:
        raise ConfigError(
            f"sampling rate {fs} Hz leaves no margin below Nyquist for the "
            f"{HIGH_EDGES_HZ[-1]} Hz band edge"
        )
    bands = tuple(
        _design(LOW_EDGE_HZ, high, i, fs)
        for i, high in enumerate(HIGH_EDGES_HZ, start=1)
    )
    return FilterBankSet(bands=bands, sampling_rate=fs)


def widest_band(fs: float) -> BandSpec:
    """The single (0.5, 10) Hz band used when the filter bank is disabled."""
    if fs <= 20.0:
        raise ConfigError(f"sampling rate {fs} Hz too low for the 10 Hz band edge")
    return _design(LOW_EDGE_HZ, WIDEST_HIGH_HZ, len(HIGH_EDGES_HZ), fs)


def apply_zero_phase(trial: EegTrial, band: BandSpec) -> EegTrial:
    """Forward-backward filter every channel of a trial through one band."""
    if band.sos is None:
        raise ConfigError(f"band {band.index} carries no designed coefficients")
    if trial.n_samples <= 3 * PAD_LENGTH:
        raise DataError(
            f"trial of {trial.n_samples} samples too short for zero-phase "
            f"filtering (needs > {3 * PAD_LENGTH})"
        )
    filtered = sosfiltfilt(band.sos, trial.data, axis=1,
                           padtype="odd", padlen=PAD_LENGTH)
    return replace(trial, data=filtered)

"""Movement-onset localization from hand trajectories, with trial rejection.

Each trajectory is reduced to a smoothed, normalized velocity profile; the
onset rule then depends on the motion kind. Elbow flexion/extension use a
0.05 threshold crossing, resting uses a fixed fake onset 0.5 s after the cue
plus a variance floor of 0.02, and the remaining motions fit a Gaussian bell
and read the onset off the fitted curve at amplitude 0.1. Bell fits are
rejected when amplitude < 0.05, width > 100 samples, or offset > 10.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter

from .errors import ConvergenceError, DataError

SMOOTH_WINDOW = 31
SMOOTH_ORDER = 1
THRESHOLD = 0.05
REST_FAKE_ONSET_SECONDS = 0.5
REST_VARIANCE_FLOOR = 0.02
BELL_MIN_AMPLITUDE = 0.05
BELL_MAX_WIDTH = 100.0
BELL_MAX_OFFSET = 10.0
BELL_ONSET_AMPLITUDE = 0.1
EPOCH_PRE_SECONDS = 2.0
EPOCH_POST_SECONDS = 1.0

# Onset rule per motion kind.
RULE_THRESHOLD = "threshold"
RULE_REST = "rest"
RULE_BELL = "bell"

_THRESHOLD_MOTIONS = {"elbow_flexion", "elbow_extension"}
_REST_MOTIONS = {"rest", "resting"}


@dataclass
class TrajectoryRecord:
    """Hand-position series aligned with its trial's EEG payload."""

    samples: np.ndarray
    sampling_rate: float
    motion_class: str
    cue_sample: int = 0


@dataclass
class OnsetDecision:
    status: str  # "accepted" | "rejected"
    onset_sample: int | None = None
    fit_params: tuple[float, float, float, float] | None = None
    reason: str | None = None

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


def motion_rule(motion_class: str) -> str:
    name = motion_class.strip().lower().replace(" ", "_").replace("-", "_")
    if name in _THRESHOLD_MOTIONS:
        return RULE_THRESHOLD
    if name in _REST_MOTIONS:
        return RULE_REST
    return RULE_BELL


def smooth_velocity(traj: TrajectoryRecord) -> np.ndarray:
    """First-order difference followed by order-1 Savitzky-Golay smoothing."""
    samples = np.asarray(traj.samples, dtype=float)
    velocity = np.diff(samples)
    if velocity.size < SMOOTH_WINDOW:
        raise DataError(
            f"trajectory too short: velocity of {velocity.size} samples "
            f"cannot carry a {SMOOTH_WINDOW}-sample smoothing window"
        )
    return savgol_filter(velocity, SMOOTH_WINDOW, SMOOTH_ORDER, mode="interp")


def normalize_abs(series: np.ndarray) -> np.ndarray:
    """Divide by the maximal absolute value so max |x| becomes 1."""
    series = np.asarray(series, dtype=float)
    peak = np.abs(series).max() if series.size else 0.0
    if peak == 0.0:
        raise DataError("all-zero series cannot be normalized")
    return series / peak


def locate_threshold_onset(series: np.ndarray, threshold: float = THRESHOLD) -> int:
    """First crossing of ``threshold``, linearly interpolated, floored.

    Raises DataError when the series never reaches the threshold; callers
    turn that into a trial rejection.
    """
    series = np.asarray(series, dtype=float)
    above = np.flatnonzero(series >= threshold)
    if above.size == 0:
        raise DataError("series never crosses the onset threshold")
    i = int(above[0])
    if i == 0:
        return 0
    crossing = (i - 1) + (threshold - series[i - 1]) / (series[i] - series[i - 1])
    return int(np.floor(crossing))


def _bell(x, a, b, c, d):
    return a * np.exp(-(((x - b) / c) ** 2)) + d


def _bell_jacobian(x, a, b, c):
    u = (x - b) / c
    e = np.exp(-(u**2))
    return np.column_stack([e, a * e * 2 * u / c, a * e * 2 * u**2 / c,
                            np.ones_like(x)])


def fit_gaussian_bell(series: np.ndarray, max_iter: int = 200):
    """Least-squares fit of a * exp(-((x-b)/c)^2) + d over sample indices.

    A coarse 4-D parameter grid seeds a damped (step-halved) Gauss-Newton
    refinement. Returns ``((a, b, c, d), rms_residual)``; raises
    ConvergenceError if the iteration cap is hit while the fit is still
    moving.
    """
    y = np.asarray(series, dtype=float)
    n = y.size
    if n < 8:
        raise DataError(f"series too short for a bell fit: {n} < 8 samples")
    x = np.arange(n, dtype=float)

    lo, hi = y.min(), y.max()
    spread = hi - lo if hi > lo else 1.0
    a_grid = spread * np.array([1.0, 0.5, -0.5, -1.0])
    b_grid = np.quantile(x, [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875])
    b_grid = np.append(b_grid, [float(np.argmax(y)), float(np.argmin(y))])
    c_grid = n * np.array([1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2])
    d_grid = np.array([lo, np.median(y), hi])

    best = None
    best_sse = np.inf
    for a0 in a_grid:
        for b0 in b_grid:
            for c0 in c_grid:
                model = a0 * np.exp(-(((x[None, :] - b0) / c0) ** 2))
                for d0 in d_grid:
                    sse = float(np.sum((model[0] + d0 - y) ** 2))
                    if sse < best_sse:
                        best_sse = sse
                        best = np.array([a0, b0, c0, d0])

    params = best
    sse = best_sse
    converged = False
    for _ in range(max_iter):
        a, b, c, d = params
        resid = _bell(x, a, b, c, d) - y
        jac = _bell_jacobian(x, a, b, c)
        step, *_ = np.linalg.lstsq(jac, -resid, rcond=None)
        # Step-halving keeps Gauss-Newton monotone on bad local models.
        improved = False
        for _ in range(20):
            trial = params + step
            trial[2] = abs(trial[2]) if trial[2] != 0.0 else c
            new_sse = float(np.sum((_bell(x, *trial) - y) ** 2))
            if new_sse <= sse:
                improved = new_sse < sse - 1e-14 * (1.0 + sse)
                params, sse = trial, new_sse
                break
            step *= 0.5
        if not improved:
            converged = True
            break
    if not converged:
        raise ConvergenceError("bell fit did not converge within iteration cap")
    a, b, c, d = (float(v) for v in params)
    return (a, b, abs(c), d), float(np.sqrt(sse / n))


def _bell_onset(a: float, b: float, c: float, d: float) -> int | None:
    """First sample where the fitted curve reaches BELL_ONSET_AMPLITUDE.

    Solved analytically on the rising flank; None when the curve never
    reaches the amplitude. A baseline already above the amplitude yields 0.
    """
    target = BELL_ONSET_AMPLITUDE
    if d >= target:
        return 0
    if a <= 0.0 or a + d < target:
        return None
    crossing = b - c * np.sqrt(np.log(a / (target - d)))
    return max(int(np.floor(crossing)), 0)


def decide_trial(traj: TrajectoryRecord, rule: str | None = None) -> OnsetDecision:
    """Apply the per-motion onset rule and the rejection conditions.

    Accepted onsets must leave room for the -2 s / +1 s epoch window inside
    the recording, otherwise the trial is rejected with reason
    ``window-out-of-bounds``.
    """
    rule = rule or motion_rule(traj.motion_class)
    fs = traj.sampling_rate
    n = np.asarray(traj.samples).size

    try:
        velocity = smooth_velocity(traj)
    except DataError:
        return OnsetDecision(status="rejected", reason="not-locatable")
    try:
        profile = normalize_abs(velocity)
    except DataError:
        # A perfectly still rest trajectory is a variance rejection, not noise.
        reason = "rest-variance" if rule == RULE_REST else "not-locatable"
        return OnsetDecision(status="rejected", reason=reason)

    fit_params = None
    if rule == RULE_REST:
        if float(np.var(profile)) < REST_VARIANCE_FLOOR:
            return OnsetDecision(status="rejected", reason="rest-variance")
        onset = traj.cue_sample + int(round(REST_FAKE_ONSET_SECONDS * fs))
    elif rule == RULE_THRESHOLD:
        try:
            onset = locate_threshold_onset(profile)
        except DataError:
            return OnsetDecision(status="rejected", reason="not-locatable")
    else:
        try:
            (a, b, c, d), _ = fit_gaussian_bell(profile)
        except ConvergenceError:
            return OnsetDecision(status="rejected", reason="fit-failed")
        fit_params = (a, b, c, d)
        if a < BELL_MIN_AMPLITUDE:
            return OnsetDecision(status="rejected", fit_params=fit_params,
                                 reason="bell-amplitude")
        if c > BELL_MAX_WIDTH:
            return OnsetDecision(status="rejected", fit_params=fit_params,
                                 reason="bell-width")
        if d > BELL_MAX_OFFSET:
            return OnsetDecision(status="rejected", fit_params=fit_params,
                                 reason="bell-offset")
        located = _bell_onset(a, b, c, d)
        if located is None:
            return OnsetDecision(status="rejected", fit_params=fit_params,
                                 reason="not-locatable")
        onset = located

    pre = int(round(EPOCH_PRE_SECONDS * fs))
    post = int(round(EPOCH_POST_SECONDS * fs))
    if onset - pre < 0 or onset + post > n:
        return OnsetDecision(status="rejected", fit_params=fit_params,
                             reason="window-out-of-bounds")
    return OnsetDecision(status="accepted", onset_sample=int(onset),
                         fit_params=fit_params)

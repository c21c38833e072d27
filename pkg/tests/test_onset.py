import numpy as np
import pytest
from scipy.optimize import curve_fit

from mrcp_decode.errors import DataError
from mrcp_decode.onset import (
    OnsetDecision,
    TrajectoryRecord,
    decide_trial,
    fit_gaussian_bell,
    locate_threshold_onset,
    motion_rule,
    normalize_abs,
    smooth_velocity,
)

FS = 256.0


def record(samples, motion="supination", cue=0):
    return TrajectoryRecord(samples=np.asarray(samples, float),
                            sampling_rate=FS, motion_class=motion,
                            cue_sample=cue)


def bell(x, a, b, c, d):
    return a * np.exp(-(((x - b) / c) ** 2)) + d


class TestSmoothVelocity:
    def test_linear_ramp_gives_constant_slope(self):
        slope = 0.37
        traj = record(slope * np.arange(400))
        vel = smooth_velocity(traj)
        assert np.allclose(vel[40:-40], slope, atol=1e-9)

    def test_constant_trajectory_gives_zeros(self):
        vel = smooth_velocity(record(np.full(200, 3.5)))
        assert np.allclose(vel, 0.0, atol=1e-12)

    def test_matches_least_squares_oracle_in_interior(self):
        # Order-1 Savitzky-Golay evaluated at the window center equals the
        # local least-squares line value there; recompute it directly.
        rng = np.random.default_rng(0)
        traj = record(rng.standard_normal(300).cumsum())
        vel = smooth_velocity(traj)
        raw = np.diff(np.asarray(traj.samples, float))
        half = 15
        x = np.arange(-half, half + 1, dtype=float)
        design = np.column_stack([np.ones_like(x), x])
        for i in range(50, 250, 13):
            window = raw[i - half:i + half + 1]
            coef, *_ = np.linalg.lstsq(design, window, rcond=None)
            assert vel[i] == pytest.approx(coef[0], abs=1e-10)

    def test_noisy_ramp_slope_recovered(self):
        rng = np.random.default_rng(1)
        slope = 2.0
        noise = rng.uniform(-0.01 * slope, 0.01 * slope, size=600)
        traj = record(slope * np.arange(600) + np.cumsum(noise))
        vel = smooth_velocity(traj)
        assert np.all(np.abs(vel[50:-50] - slope) < 0.02 * slope)

    def test_too_short(self):
        with pytest.raises(DataError, match="too short"):
            smooth_velocity(record(np.arange(20)))


class TestNormalizeAbs:
    def test_hand_example(self):
        assert np.allclose(normalize_abs([0.0, 2.0, -4.0]), [0.0, 0.5, -1.0])

    def test_already_normalized_unchanged(self):
        series = np.array([0.2, -1.0, 0.7])
        assert np.allclose(normalize_abs(series), series)

    def test_single_negative_sample(self):
        assert np.allclose(normalize_abs([-3.0]), [-1.0])

    def test_all_zero_raises(self):
        with pytest.raises(DataError, match="all-zero"):
            normalize_abs(np.zeros(10))


class TestThresholdOnset:
    def test_analytic_crossing(self):
        series = np.arange(100) / 100.0
        assert locate_threshold_onset(series, 0.05) == 5

    def test_interpolated_crossing_floors(self):
        series = np.array([0.0, 0.04, 0.08])  # crosses 0.05 at x = 1.25
        assert locate_threshold_onset(series, 0.05) == 1

    def test_all_zero_not_locatable(self):
        with pytest.raises(DataError, match="never crosses"):
            locate_threshold_onset(np.zeros(50))

    def test_starts_above_threshold(self):
        assert locate_threshold_onset(np.full(10, 0.5)) == 0


class TestBellFit:
    def test_exact_bell_recovered(self):
        x = np.arange(101, dtype=float)
        series = bell(x, 1.0, 50.0, 10.0, 0.0)
        (a, b, c, d), rms = fit_gaussian_bell(series)
        assert abs(a - 1.0) < 1e-3
        assert abs(b - 50.0) < 1e-3
        assert abs(c - 10.0) < 1e-3
        assert abs(d) < 1e-3
        assert rms < 1e-6

    def test_flat_series_fits_near_zero_amplitude(self):
        (a, _, _, d), _ = fit_gaussian_bell(np.full(120, 0.4))
        assert abs(a) < 0.05
        assert d == pytest.approx(0.4, abs=0.05)

    def test_noisy_bell_center_within_one_sample(self):
        rng = np.random.default_rng(2)
        x = np.arange(200, dtype=float)
        hits = 0
        for _ in range(10):
            series = bell(x, 0.9, 80.0, 25.0, 0.05)
            series += rng.normal(0.0, 0.01, size=x.size)
            (_, b, _, _), _ = fit_gaussian_bell(series)
            hits += abs(b - 80.0) <= 1.0
        assert hits == 10


class TestDecideTrial:
    def test_motion_rules(self):
        assert motion_rule("elbow_flexion") == "threshold"
        assert motion_rule("Elbow Extension") == "threshold"
        assert motion_rule("resting") == "rest"
        assert motion_rule("supination") == "bell"

    def test_rest_low_variance_rejected(self):
        # One sharp step dominates max-abs normalization, so the normalized
        # profile variance collapses below the 0.02 floor.
        samples = np.zeros(2048)
        samples[1500:] = 5.0
        decision = decide_trial(record(samples, motion="resting", cue=768))
        assert decision.status == "rejected"
        assert decision.reason == "rest-variance"

    def test_rest_accepted_with_fake_onset(self):
        rng = np.random.default_rng(3)
        samples = np.cumsum(rng.normal(0.0, 1.0, size=2048))
        decision = decide_trial(record(samples, motion="resting", cue=768))
        assert decision.accepted
        assert decision.onset_sample == 768 + 128

    def test_clean_bell_accepted_at_analytic_crossing(self):
        # Velocity bell with a brief stronger negative spike pinning the
        # max-abs normalization; oracle refits with scipy and solves the
        # 0.1-amplitude crossing analytically.
        x = np.arange(2047, dtype=float)
        velocity = bell(x, 0.8, 1000.0, 30.0, 0.0)
        velocity[1800:1803] = -1.0
        samples = np.concatenate([[0.0], np.cumsum(velocity)])
        decision = decide_trial(record(samples, motion="supination"))
        assert decision.accepted

        smoothed = smooth_velocity(record(samples))
        profile = smoothed / np.abs(smoothed).max()
        popt, _ = curve_fit(bell, np.arange(profile.size, dtype=float),
                            profile, p0=[0.8, 1000.0, 30.0, 0.0])
        a, b, c, d = popt
        oracle = np.floor(b - c * np.sqrt(np.log(a / (0.1 - d))))
        assert abs(decision.onset_sample - oracle) <= 1

    def test_bell_amplitude_rejection(self):
        # Sustained drift velocity: the baseline absorbs everything and the
        # fitted bell amplitude collapses below 0.05.
        rng = np.random.default_rng(4)
        velocity = 1.0 + rng.normal(0.0, 0.005, size=2047)
        samples = np.concatenate([[0.0], np.cumsum(velocity)])
        decision = decide_trial(record(samples, motion="hand_open"))
        assert decision.status == "rejected"
        assert decision.reason == "bell-amplitude"

    def test_bell_width_rejection(self):
        # A hump far wider than 100 samples trips the width rule.
        x = np.arange(2047, dtype=float)
        velocity = bell(x, 1.0, 1024.0, 400.0, 0.0)
        samples = np.concatenate([[0.0], np.cumsum(velocity)])
        decision = decide_trial(record(samples, motion="pronation"))
        assert decision.status == "rejected"
        assert decision.reason == "bell-width"

    def test_threshold_motion_never_crossing_rejected(self):
        samples = -1.0 * np.arange(1024, dtype=float)  # velocity all negative
        decision = decide_trial(record(samples, motion="elbow_flexion"))
        assert decision.status == "rejected"
        assert decision.reason == "not-locatable"

    def test_window_out_of_bounds(self):
        x = np.arange(1023, dtype=float)
        velocity = bell(x, 1.0, 100.0, 20.0, 0.0)  # onset well before 2 s
        samples = np.concatenate([[0.0], np.cumsum(velocity)])
        decision = decide_trial(record(samples, motion="pronation"))
        assert decision.status == "rejected"
        assert decision.reason == "window-out-of-bounds"

    def test_deterministic(self):
        x = np.arange(2047, dtype=float)
        velocity = bell(x, 0.9, 900.0, 40.0, 0.0)
        samples = np.concatenate([[0.0], np.cumsum(velocity)])
        first = decide_trial(record(samples, motion="hand_close"))
        second = decide_trial(record(samples, motion="hand_close"))
        assert first == second

    def test_shift_moves_onset_by_shift(self):
        x = np.arange(2047, dtype=float)
        base_vel = bell(x, 0.9, 900.0, 40.0, 0.0)
        shifted_vel = bell(x, 0.9, 900.0 + 37, 40.0, 0.0)
        base = decide_trial(record(np.concatenate([[0.0], np.cumsum(base_vel)]),
                                   motion="supination"))
        moved = decide_trial(record(np.concatenate([[0.0], np.cumsum(shifted_vel)]),
                                    motion="supination"))
        assert base.accepted and moved.accepted
        assert moved.onset_sample - base.onset_sample == 37

    def test_accepted_decision_invariants(self):
        x = np.arange(2047, dtype=float)
        velocity = bell(x, 0.9, 900.0, 40.0, 0.0)
        samples = np.concatenate([[0.0], np.cumsum(velocity)])
        decision = decide_trial(record(samples, motion="supination"))
        assert isinstance(decision, OnsetDecision)
        assert decision.accepted and decision.onset_sample is not None
        assert decision.onset_sample - 512 >= 0
        assert decision.onset_sample + 256 <= samples.size

"""Shared synthetic-data helpers for the test suite."""

import numpy as np


def planted_component_trials(rng, n_trials, c, t, snr_db=10.0):
    """Trials sharing one planted component under colored noise.

    Returns ``(trials, mixing_vector)``. The matched direction recoverable
    by reproducibility-based spatial filtering is Q^-1 @ mixing_vector.
    """
    source = np.sin(2 * np.pi * 2.0 * np.arange(t) / t) * np.hanning(t)
    mixing = rng.standard_normal(c)
    noise_mix = rng.standard_normal((c, c)) * (0.5 + rng.uniform(0, 1, (c, 1)))
    trials = []
    for _ in range(n_trials):
        signal = np.outer(mixing, source)
        noise = noise_mix @ rng.standard_normal((c, t))
        scale = np.sqrt(
            np.mean(signal**2) / (np.mean(noise**2) * 10 ** (snr_db / 10))
        )
        trials.append(signal + scale * noise)
    return trials, mixing


def planted_direction_correlation(w, q, mixing):
    """|cosine| between a fitted filter column and the Q-weighted mixing."""
    oracle = np.linalg.solve(q, mixing)
    return abs(
        np.dot(w, oracle) / (np.linalg.norm(w) * np.linalg.norm(oracle))
    )

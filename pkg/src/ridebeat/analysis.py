"""Measurement of rendered audio: onset times, onset-rate tempo, level.

This is the measuring side of the stimulus tooling: the manifest written by
the stimuli command re-measures every clip so the answer key can be checked
against the audio itself rather than trusted.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import maximum_filter1d

from .stimulus import SAMPLE_RATE


def detect_onsets(
    pcm: np.ndarray,
    sample_rate: int = SAMPLE_RATE,
    threshold: float = 0.3,
    min_separation_s: float = 0.1,
) -> list[float]:
    """Onset times (s) via an envelope threshold on the rectified signal.

    The envelope is a short moving maximum of |x|; a rising crossing of
    threshold * max(envelope) marks an onset, with a refractory gap to
    ignore ringing inside a single burst.
    """
    x = np.abs(pcm.astype(np.float64))
    if x.size == 0 or np.max(x) == 0.0:
        return []
    win = max(1, int(0.005 * sample_rate))
    env = maximum_filter1d(x, size=win, mode="nearest", origin=-(win // 2))
    level = threshold * np.max(env)
    above = env >= level
    rising = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    if above[0]:
        rising = np.concatenate(([0], rising))
    onsets: list[float] = []
    gap = min_separation_s * sample_rate
    last = -gap
    for i in rising:
        if i - last >= gap:
            onsets.append(i / sample_rate)
            last = i
    return onsets


def estimate_bpm(
    pcm: np.ndarray,
    sample_rate: int = SAMPLE_RATE,
    onsets_per_beat: int = 1,
) -> float:
    """Tempo from the median inter-onset interval."""
    onsets = detect_onsets(pcm, sample_rate)
    if len(onsets) < 2:
        raise ValueError(f"need >= 2 onsets to estimate bpm, found {len(onsets)}")
    intervals = np.diff(onsets)
    return 60.0 / (float(np.median(intervals)) * onsets_per_beat)


def rms_level(pcm: np.ndarray) -> float:
    """RMS of the clip on a full-scale-1.0 basis."""
    x = pcm.astype(np.float64) / 32767.0
    return float(np.sqrt(np.mean(x * x)))


def peak_level(pcm: np.ndarray) -> float:
    """Peak |sample| on a full-scale-1.0 basis."""
    if pcm.size == 0:
        return 0.0
    return float(np.max(np.abs(pcm.astype(np.float64))) / 32767.0)

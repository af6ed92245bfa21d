"""Offline rendering of beat patterns to 16-bit mono PCM.

Used to generate the perception-test stimulus pairs: two clips differing in
exactly one parameter (tempo or volume).  Percussion is synthesized, not
sampled: decaying sine and noise bursts whose acoustics are analytically
checkable, with noise drawn from the portable seeded RNG so every render of
the same arguments is byte-identical.
"""

from __future__ import annotations

import math
import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import Rng
from .sequencer import DrumPattern, click_pattern

SAMPLE_RATE = 44100
BPM_RANGE = (30.0, 300.0)
DURATION_RANGE = (1.0, 60.0)
# contrast definitions: easy is a 2:1 tempo ratio or a 4x (~12 dB) gain
# ratio; hard is 1.25:1 or 4 dB
TEMPO_RATIO = {"easy": 2.0, "hard": 1.25}
GAIN_RATIO = {"easy": 4.0, "hard": 10.0 ** (4.0 / 20.0)}
_NOISE_SEED = 0xD1CE  # fixed: renders are a pure function of their arguments

# peak-normalization headroom; keeps gain 1.0 clear of int16 clipping
_PEAK_TARGET = 0.9


def _burst(
    n: int, freq_hz: float, decay_s: float, noise_mix: float, rng: Rng
) -> np.ndarray:
    """Exponentially decaying sine/noise mix, n samples long."""
    t = np.arange(n) / SAMPLE_RATE
    env = np.exp(-t / decay_s)
    tone = np.sin(2.0 * math.pi * freq_hz * t)
    if noise_mix > 0.0:
        noise = np.array([rng.uniform() * 2.0 - 1.0 for _ in range(n)])
        sig = (1.0 - noise_mix) * tone + noise_mix * noise
    else:
        sig = tone
    return env * sig


def _voice_burst(voice: str, rng: Rng) -> np.ndarray:
    if voice == "kick":
        return _burst(int(0.20 * SAMPLE_RATE), 55.0, 0.060, 0.0, rng)
    if voice == "snare":
        return 0.8 * _burst(int(0.15 * SAMPLE_RATE), 180.0, 0.040, 0.7, rng)
    if voice == "hat":
        return 0.5 * _burst(int(0.08 * SAMPLE_RATE), 4000.0, 0.015, 0.9, rng)
    raise ValueError(f"unknown voice {voice!r}")


def render_stimulus(
    bpm: float,
    gain: float,
    duration_s: float,
    pattern: DrumPattern | None = None,
    sample_rate: int = SAMPLE_RATE,
) -> np.ndarray:
    """Render the pattern at fixed bpm and gain; returns int16 mono PCM.

    The onset count equals the step-crossing count for the duration,
    floor(duration * bpm/60 * steps_per_beat); onsets start at t=0 so every
    burst is fully audible.  Peak amplitude scales linearly with gain.
    """
    if not BPM_RANGE[0] <= bpm <= BPM_RANGE[1]:
        raise ValueError(f"bpm must be in {BPM_RANGE}, got {bpm}")
    if not 0.0 < gain <= 1.0:
        raise ValueError(f"gain must be in (0,1], got {gain}")
    if not DURATION_RANGE[0] <= duration_s <= DURATION_RANGE[1]:
        raise ValueError(f"duration_s must be in {DURATION_RANGE}, got {duration_s}")
    if sample_rate != SAMPLE_RATE:
        raise ValueError(f"only {SAMPLE_RATE} Hz supported, got {sample_rate}")
    if pattern is None:
        pattern = click_pattern()

    rng = Rng(_NOISE_SEED)
    # pre-render one burst per voice so noise content is identical per onset
    bursts = {
        voice.name: None for step in pattern.steps for voice in step
    }
    for name in sorted(bursts):
        bursts[name] = _voice_burst(name, rng)

    n_total = int(round(duration_s * sample_rate))
    buf = np.zeros(n_total, dtype=np.float64)
    step_period_s = 60.0 / (bpm * pattern.steps_per_beat)
    n_onsets = math.floor(duration_s * bpm / 60.0 * pattern.steps_per_beat + 1e-9)
    for k in range(n_onsets):
        start = int(round(k * step_period_s * sample_rate))
        for voice in pattern.steps[k % len(pattern)]:
            burst = bursts[voice.name]
            end = min(start + len(burst), n_total)
            if end > start:
                buf[start:end] += voice.gain * burst[: end - start]

    peak = np.max(np.abs(buf))
    if peak > 0.0:
        buf *= _PEAK_TARGET / peak
    return np.round(buf * gain * 32767.0).astype(np.int16)


@dataclass(frozen=True)
class StimulusPair:
    """Two clips differing only in tempo or only in gain, plus the key."""

    parameter: str           # "tempo" or "volume"
    contrast: str            # "easy" or "hard"
    clip_a: np.ndarray
    clip_b: np.ndarray
    answer: str              # "a" or "b": the faster (tempo) / louder (volume) clip
    bpm_a: float
    bpm_b: float
    gain_a: float
    gain_b: float


def make_stimulus_pair(
    parameter: str,
    contrast: str,
    seed: int,
    base_bpm: float = 80.0,
    base_gain: float = 0.8,
    duration_s: float = 5.0,
    pattern: DrumPattern | None = None,
) -> StimulusPair:
    """Build one pretest pair; presentation order is randomized by the seed."""
    if parameter not in ("tempo", "volume"):
        raise ValueError(f"parameter must be 'tempo' or 'volume', got {parameter!r}")
    if contrast not in ("easy", "hard"):
        raise ValueError(f"contrast must be 'easy' or 'hard', got {contrast!r}")

    if parameter == "tempo":
        lo = (base_bpm, base_gain)
        hi = (base_bpm * TEMPO_RATIO[contrast], base_gain)
    else:
        hi = (base_bpm, 1.0)
        lo = (base_bpm, 1.0 / GAIN_RATIO[contrast])

    rng = Rng(seed)
    if rng.choice2() == 0:
        a, b, answer = hi, lo, "a"
    else:
        a, b, answer = lo, hi, "b"

    return StimulusPair(
        parameter=parameter,
        contrast=contrast,
        clip_a=render_stimulus(a[0], a[1], duration_s, pattern),
        clip_b=render_stimulus(b[0], b[1], duration_s, pattern),
        answer=answer,
        bpm_a=a[0],
        bpm_b=b[0],
        gain_a=a[1],
        gain_b=b[1],
    )


def write_wav(path: str | Path, pcm: np.ndarray, sample_rate: int = SAMPLE_RATE) -> None:
    """Write int16 mono PCM as a RIFF WAV file."""
    if pcm.dtype != np.int16:
        raise ValueError(f"expected int16 PCM, got {pcm.dtype}")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a 16-bit mono WAV back into (pcm, sample_rate)."""
    with wave.open(str(path), "rb") as wf:
        if wf.getnchannels() != 1 or wf.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit mono WAV")
        rate = wf.getframerate()
        raw = wf.readframes(wf.getnframes())
    pcm = np.array(struct.unpack(f"<{len(raw) // 2}h", raw), dtype=np.int16)
    return pcm, rate

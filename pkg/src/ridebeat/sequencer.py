"""Beat scheduling via a phase accumulator.

Phase is counted in fractional beats; pattern steps sit at multiples of
1/steps_per_beat.  Advancing by dt crosses every boundary in
(phase, phase + bpm/60*dt], which makes the emitted step count over any
duration exact (no drift) and independent of how the interval is chopped
into ticks.  Tempo changes apply continuously, not at beat boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

VOICES = ("kick", "snare", "hat")


@dataclass(frozen=True)
class Voice:
    name: str
    gain: float = 1.0

    def __post_init__(self):
        if self.name not in VOICES:
            raise ValueError(f"unknown voice {self.name!r}, expected one of {VOICES}")
        if not 0.0 < self.gain <= 1.0:
            raise ValueError(f"voice gain must be in (0,1], got {self.gain}")


@dataclass(frozen=True)
class DrumPattern:
    steps_per_beat: int
    steps: tuple[tuple[Voice, ...], ...]

    def __post_init__(self):
        if self.steps_per_beat < 1:
            raise ValueError(f"steps_per_beat must be >= 1, got {self.steps_per_beat}")
        if len(self.steps) < 1:
            raise ValueError("pattern needs at least one step")
        if not any(self.steps):
            raise ValueError("pattern needs at least one non-empty step")

    def __len__(self) -> int:
        return len(self.steps)


def default_pattern() -> DrumPattern:
    """8 steps at 2 per beat: kick on 0 and 4, snare on 4, hat throughout."""
    kick, snare, hat = Voice("kick"), Voice("snare"), Voice("hat")
    return DrumPattern(
        steps_per_beat=2,
        steps=(
            (kick, hat),
            (hat,),
            (hat,),
            (hat,),
            (kick, snare, hat),
            (hat,),
            (hat,),
            (hat,),
        ),
    )


def click_pattern() -> DrumPattern:
    """Single click per beat; used for perception-test stimuli."""
    return DrumPattern(steps_per_beat=1, steps=((Voice("kick"),),))


def load_pattern(path: str | Path) -> DrumPattern:
    """Pattern file: {"steps_per_beat": n, "steps": [[{"voice","gain"},...],...]}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    steps = tuple(
        tuple(Voice(v["voice"], float(v.get("gain", 1.0))) for v in step)
        for step in data["steps"]
    )
    return DrumPattern(steps_per_beat=int(data["steps_per_beat"]), steps=steps)


@dataclass(frozen=True)
class BeatEvent:
    t_ms: float
    step_index: int
    voice: str
    bpm_at_event: float
    vol_at_event: float


def advance_phase(
    phase: float, bpm: float, dt_s: float, steps_per_beat: int
) -> tuple[float, list[int]]:
    """Advance the accumulator and return global step indices crossed.

    Crossings are the k with phase < k/steps_per_beat <= new_phase.
    """
    if bpm < 0:
        raise ValueError(f"bpm must be >= 0, got {bpm}")
    if dt_s <= 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    new_phase = phase + bpm / 60.0 * dt_s
    first = math.floor(phase * steps_per_beat) + 1
    last = math.floor(new_phase * steps_per_beat)
    return new_phase, list(range(first, last + 1))


def emit_beats(
    crossed_steps: Sequence[int],
    event_times_ms: Sequence[float],
    pattern: DrumPattern,
    bpm: float,
    vol: float,
    riding: bool,
) -> list[BeatEvent]:
    """One event per (crossed step, voice), indexed modulo the pattern.

    Emits nothing while stopped, regardless of crossings.
    """
    if not riding:
        return []
    events: list[BeatEvent] = []
    for step, t_ms in zip(crossed_steps, event_times_ms):
        for voice in pattern.steps[step % len(pattern)]:
            events.append(
                BeatEvent(
                    t_ms=t_ms,
                    step_index=step % len(pattern),
                    voice=voice.name,
                    bpm_at_event=bpm,
                    vol_at_event=vol * voice.gain,
                )
            )
    return events


class Sequencer:
    """Owns the beat phase; freezes it while stopped so no events leak."""

    def __init__(self, pattern: DrumPattern | None = None):
        self.pattern = pattern if pattern is not None else default_pattern()
        self.phase = 0.0

    def tick(
        self, t_ms: int, dt_s: float, bpm: float, vol: float, riding: bool
    ) -> list[BeatEvent]:
        """Advance by one engine tick ending at t_ms; return due events.

        Event timestamps are interpolated inside the tick assuming constant
        bpm across it, so they track a fine-grained integration closely.
        """
        if not riding:
            return []
        old_phase = self.phase
        new_phase, crossed = advance_phase(
            old_phase, bpm, dt_s, self.pattern.steps_per_beat
        )
        self.phase = new_phase
        if not crossed:
            return []
        dphase = new_phase - old_phase
        t0_ms = t_ms - dt_s * 1000.0
        times = [
            t0_ms + dt_s * 1000.0 * ((k / self.pattern.steps_per_beat - old_phase) / dphase)
            for k in crossed
        ]
        return emit_beats(crossed, times, self.pattern, bpm, vol, riding)

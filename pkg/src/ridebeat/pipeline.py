"""The full engine: sensing -> mapping -> sequencer over a sample stream.

Offline replay and the live service both drive this exact class, so for the
same samples, button edges, and configs they produce the same state and
beat sequences; transport never changes semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .config import EngineConfig
from .mapping import EngineState, press_mode_button, update_engine
from .sensing import RideState, SensingOutput, SensingPipeline, SensorSample
from .sequencer import BeatEvent, DrumPattern, Sequencer


@dataclass(frozen=True)
class TickResult:
    state: EngineState
    sensing: SensingOutput
    events: list[BeatEvent]


class Engine:
    """Single-owner stateful composition; not safe for shared mutation."""

    def __init__(
        self,
        config: EngineConfig,
        rate_hz: int,
        pattern: Optional[DrumPattern] = None,
    ):
        config.validate()
        self.config = config
        self.rate_hz = rate_hz
        self.nominal_dt_s = 1.0 / rate_hz
        self.sensing = SensingPipeline(config.profile)
        self.sequencer = Sequencer(pattern)
        self.state = EngineState.initial(config.mapping)
        self._started = False

    def process_sample(self, sample: SensorSample, button_presses: int = 0) -> TickResult:
        """Apply queued button edges in order, then run one engine step."""
        for _ in range(button_presses):
            self.state = replace(self.state, mode=press_mode_button(self.state.mode))
        if self._started:
            dt_s = (sample.t_ms - self.state.t_ms) / 1000.0
        else:
            # first sample: no previous timestamp, assume one nominal period
            dt_s = self.nominal_dt_s
            self.state = replace(self.state, t_ms=sample.t_ms - round(dt_s * 1000.0))
            self._started = True
        sout = self.sensing.update(sample)
        self.state = update_engine(self.state, sout, self.config.mapping, dt_s)
        riding = sout.ride_state is RideState.RIDING
        events = self.sequencer.tick(
            sample.t_ms, dt_s, self.state.bpm, self.state.vol, riding
        )
        self.state = replace(self.state, beat_phase=self.sequencer.phase)
        return TickResult(state=self.state, sensing=sout, events=events)

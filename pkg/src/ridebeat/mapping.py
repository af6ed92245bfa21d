"""Speed proxy and posture to tempo and volume, under the interaction modes.

Mode 1 varies volume only, mode 2 tempo only, mode 3 both; a button press
cycles 1 -> 2 -> 3 -> 1.  Both maps are linear with clamping, and the
outputs are slew-limited so parameter changes are never jarring.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .config import MappingConfig
from .sensing import RideState, SensingOutput


class Mode(Enum):
    VOLUME_ONLY = "volume_only"
    TEMPO_ONLY = "tempo_only"
    BOTH = "both"


_MODE_CYCLE = {
    Mode.VOLUME_ONLY: Mode.TEMPO_ONLY,
    Mode.TEMPO_ONLY: Mode.BOTH,
    Mode.BOTH: Mode.VOLUME_ONLY,
}


@dataclass(frozen=True)
class EngineState:
    """Live derived quantities; replaced (not mutated) on every update."""

    mode: Mode
    bpm: float
    vol: float
    ride_state: RideState
    beat_phase: float
    t_ms: int

    @classmethod
    def initial(cls, config: MappingConfig, t_ms: int = 0) -> "EngineState":
        return cls(
            mode=Mode.VOLUME_ONLY,
            bpm=config.default_bpm,
            vol=config.default_vol,
            ride_state=RideState.STOPPED,
            beat_phase=0.0,
            t_ms=t_ms,
        )


def map_tempo(speed_proxy: float, config: MappingConfig, mode: Mode) -> float:
    """Target bpm for a speed proxy; gated to default_bpm in volume-only mode."""
    if mode is Mode.VOLUME_ONLY:
        return config.default_bpm
    span = config.proxy_hi - config.proxy_lo
    frac = (speed_proxy - config.proxy_lo) / span
    frac = min(1.0, max(0.0, frac))
    return config.bpm_min + frac * (config.bpm_max - config.bpm_min)


def map_volume(posture: float, config: MappingConfig, mode: Mode) -> float:
    """Target gain for a posture; gated to default_vol in tempo-only mode.

    Upright (posture 1) is loudest, fully forward (posture 0) quietest.
    """
    if mode is Mode.TEMPO_ONLY:
        return config.default_vol
    frac = min(1.0, max(0.0, posture))
    return config.vol_min + frac * (config.vol_max - config.vol_min)


def slew_limit(current: float, target: float, max_rate_per_s: float, dt_s: float) -> float:
    """Move current toward target by at most max_rate_per_s * dt_s."""
    if dt_s <= 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    step = max_rate_per_s * dt_s
    delta = target - current
    if abs(delta) <= step:
        return target
    return current + step if delta > 0 else current - step


def press_mode_button(mode: Mode) -> Mode:
    """Cycle volume-only -> tempo-only -> both -> volume-only."""
    return _MODE_CYCLE[mode]


def update_engine(
    state: EngineState,
    sensing: SensingOutput,
    config: MappingConfig,
    dt_s: float,
) -> EngineState:
    """One engine step: map targets, slew, carry ride state through.

    The state keeps updating while Stopped; only the sequencer downstream is
    gated.  Equal inputs give equal outputs.
    """
    if dt_s <= 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    if sensing.t_ms < state.t_ms:
        raise ValueError(
            f"non-monotonic update: sensing t_ms {sensing.t_ms} < state t_ms {state.t_ms}"
        )
    bpm_target = map_tempo(sensing.speed_proxy, config, state.mode)
    vol_target = map_volume(sensing.posture, config, state.mode)
    return replace(
        state,
        bpm=slew_limit(state.bpm, bpm_target, config.bpm_slew, dt_s),
        vol=slew_limit(state.vol, vol_target, config.vol_slew, dt_s),
        ride_state=sensing.ride_state,
        t_ms=sensing.t_ms,
    )

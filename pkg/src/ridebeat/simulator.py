"""Deterministic virtual bike and rider producing synthetic sensor samples.

The physics is intentionally minimal: linear drag gives a closed-form
terminal speed and coast-down for testing, and ordinal correctness (more
effort -> more speed -> higher tempo) is all the engine needs.  Every trace
is a pure function of (seed, script, configs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .config import BikeParams, CalibrationProfile, NoiseConfig
from .rng import Rng
from .sensing import SensorSample

ULTRA_MAX_MM = 5000


@dataclass(frozen=True)
class RiderCommand:
    """Pedal effort and commanded lean in [0,1]; button is a press edge."""

    effort: float = 0.0
    lean: float = 0.0
    button: bool = False

    def __post_init__(self):
        if not 0.0 <= self.effort <= 1.0:
            raise ValueError(f"effort must be in [0,1], got {self.effort}")
        if not 0.0 <= self.lean <= 1.0:
            raise ValueError(f"lean must be in [0,1], got {self.lean}")


@dataclass(frozen=True)
class BikeState:
    v: float = 0.0              # m/s
    cadence_hz: float = 0.0
    lean_actual: float = 0.0    # 0 upright .. 1 fully forward
    t_ms: int = 0


def step_bike(
    state: BikeState, cmd: RiderCommand, dt_s: float, params: BikeParams
) -> BikeState:
    """Explicit-Euler step: dv/dt = k_e*effort - c_d*v, v clamped >= 0."""
    if not 0.0 < dt_s <= 0.1:
        raise ValueError(f"dt_s must be in (0, 0.1], got {dt_s}")
    v = state.v + (params.k_e * cmd.effort - params.c_d * state.v) * dt_s
    v = max(0.0, v)
    lean = state.lean_actual + (cmd.lean - state.lean_actual) * min(
        1.0, dt_s / params.tau_lean_s
    )
    return BikeState(
        v=v,
        cadence_hz=v / (params.wheel_circumference_m * params.gear_ratio),
        lean_actual=lean,
        t_ms=state.t_ms + round(dt_s * 1000.0),
    )


class SensorSynth:
    """Accelerometer + ultrasonic model over a bike state stream.

    The forward (x) axis carries a pedaling oscillation of amplitude
    pedal_accel_amp * effort at the cadence frequency; z carries gravity.
    Per sample the RNG is consumed in a fixed order (3 accel gaussians, 1
    ultrasonic gaussian, 1 dropout uniform) regardless of the sigmas, so a
    seed always denotes the same noise stream.
    """

    def __init__(
        self,
        params: BikeParams,
        profile: CalibrationProfile,
        noise: NoiseConfig,
        rng: Optional[Rng] = None,
    ):
        self.params = params
        self.profile = profile
        self.noise = noise
        self.rng = rng if rng is not None else Rng(noise.rng_seed)
        self._pedal_phase = 0.0

    def sample(self, state: BikeState, effort: float, dt_s: float) -> SensorSample:
        self._pedal_phase += state.cadence_hz * dt_s
        osc = (
            self.params.pedal_accel_amp
            * effort
            * math.sin(2.0 * math.pi * self._pedal_phase)
        )
        nx = self.noise.accel_sigma * self.rng.gauss()
        ny = self.noise.accel_sigma * self.rng.gauss()
        nz = self.noise.accel_sigma * self.rng.gauss()
        accel = (osc + nx, ny, self.params.gravity + nz)

        span = self.profile.d_upright_mm - self.profile.d_forward_mm
        d = self.profile.d_upright_mm - state.lean_actual * span
        d += self.noise.ultra_sigma * self.rng.gauss()
        dropped = self.rng.uniform() < self.noise.dropout_prob
        ultra = None if dropped else min(ULTRA_MAX_MM, max(0, round(d)))
        return SensorSample(t_ms=state.t_ms, accel=accel, ultra_mm=ultra)


@dataclass(frozen=True)
class ScriptEntry:
    t_ms: int
    command: RiderCommand


class Scenario:
    """Timed rider commands; each entry holds from its t_ms until the next."""

    def __init__(self, entries: list[ScriptEntry]):
        times = [e.t_ms for e in entries]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("script times must be nondecreasing")
        if len(set(times)) != len(times):
            dup = [t for t in times if times.count(t) > 1][0]
            raise ValueError(f"overlapping script entries at t_ms={dup}")
        self.entries = entries

    @classmethod
    def from_obj(cls, data: list[dict]) -> "Scenario":
        """Parse [{"t_ms", "effort", "lean", "button"}]; omitted effort/lean
        carry the previous entry's value."""
        entries: list[ScriptEntry] = []
        effort, lean = 0.0, 0.0
        for item in data:
            effort = float(item.get("effort", effort))
            lean = float(item.get("lean", lean))
            entries.append(
                ScriptEntry(
                    t_ms=int(item["t_ms"]),
                    command=RiderCommand(
                        effort=effort, lean=lean, button=bool(item.get("button", False))
                    ),
                )
            )
        return cls(entries)


class ScenarioPlayer:
    """Steps through a scenario, yielding the active command per tick and
    firing each button edge exactly once, at the first tick at/after its
    scheduled time."""

    def __init__(self, scenario: Scenario):
        self._entries = scenario.entries
        self._next = 0
        self._current = RiderCommand()

    def advance(self, t_ms: int) -> tuple[RiderCommand, bool]:
        button = False
        while self._next < len(self._entries) and self._entries[self._next].t_ms <= t_ms:
            self._current = self._entries[self._next].command
            button = button or self._current.button
            self._next += 1
        return self._current, button


class VirtualBike:
    """Bike + sensors integrated at a fixed rate; the desk-scale prototype."""

    def __init__(
        self,
        params: BikeParams,
        profile: CalibrationProfile,
        noise: NoiseConfig,
        rate_hz: int = 100,
        seed: Optional[int] = None,
    ):
        params.validate()
        noise.validate()
        self.params = params
        self.rate_hz = rate_hz
        self.dt_s = 1.0 / rate_hz
        self.state = BikeState()
        self.synth = SensorSynth(
            params, profile, noise, Rng(seed if seed is not None else noise.rng_seed)
        )
        self._tick_count = 0

    def tick(self, cmd: RiderCommand) -> SensorSample:
        """Advance one sample period and synthesize the sensors."""
        self._tick_count += 1
        # timestamps come from the tick grid, not accumulated rounding
        t_ms = round(self._tick_count * 1000.0 / self.rate_hz)
        self.state = replace(
            step_bike(self.state, cmd, self.dt_s, self.params), t_ms=t_ms
        )
        return self.synth.sample(self.state, cmd.effort, self.dt_s)


def run_scenario(
    scenario: Scenario,
    duration_s: float,
    params: BikeParams,
    profile: CalibrationProfile,
    noise: NoiseConfig,
    rate_hz: int = 100,
    seed: Optional[int] = None,
) -> list[tuple[SensorSample, bool]]:
    """Integrate the scenario; returns (sample, button_edge) per tick.

    Identical (seed, script, configs) give identical output, sample for
    sample; the trace writer preserves that byte for byte.
    """
    bike = VirtualBike(params, profile, noise, rate_hz=rate_hz, seed=seed)
    player = ScenarioPlayer(scenario)
    out: list[tuple[SensorSample, bool]] = []
    n = round(duration_s * rate_hz)
    for k in range(1, n + 1):
        t_ms = round(k * 1000.0 / rate_hz)
        cmd, button = player.advance(t_ms)
        sample = bike.tick(cmd)
        out.append((sample, button))
    return out

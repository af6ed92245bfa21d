"""Configuration: tunable constants and the flat key/value config file.

All defaults live here, on the dataclasses, and nowhere else.  A config file
is plain ``key = value`` lines (``#`` comments, blank lines allowed); keys
match the dataclass field names below and override the defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    """Invalid config file or invalid constant combination."""


@dataclass
class CalibrationProfile:
    """Sensing-stage constants, including the per-session posture calibration."""

    gravity_alpha: float = 0.02       # gravity low-pass coefficient per sample
    rms_window_ms: float = 500.0      # trailing window for activity RMS
    proxy_alpha: float = 0.05         # exponential smoothing of the RMS output
    median_taps: int = 5              # ultrasonic median filter, odd
    d_forward_mm: float = 300.0       # rider fully forward (close to sensor)
    d_upright_mm: float = 600.0       # rider sitting upright
    v_stop: float = 0.05              # speed proxy below this may trigger Stopped
    resume_threshold: float = 0.08    # speed proxy at/above this resumes Riding
    stop_hold_ms: float = 1500.0      # time below v_stop before Stopped

    def validate(self) -> "CalibrationProfile":
        if not 0.0 < self.gravity_alpha < 1.0:
            raise ConfigError(f"gravity_alpha must be in (0,1), got {self.gravity_alpha}")
        if not 0.0 < self.proxy_alpha <= 1.0:
            raise ConfigError(f"proxy_alpha must be in (0,1], got {self.proxy_alpha}")
        if self.median_taps < 3 or self.median_taps % 2 == 0:
            raise ConfigError(f"median_taps must be odd and >= 3, got {self.median_taps}")
        if not self.d_forward_mm < self.d_upright_mm:
            raise ConfigError(
                f"d_forward_mm ({self.d_forward_mm}) must be < d_upright_mm ({self.d_upright_mm})"
            )
        if self.rms_window_ms <= 0:
            raise ConfigError(f"rms_window_ms must be > 0, got {self.rms_window_ms}")
        if self.resume_threshold < self.v_stop:
            raise ConfigError(
                f"resume_threshold ({self.resume_threshold}) must be >= v_stop ({self.v_stop})"
            )
        if self.stop_hold_ms < 0:
            raise ConfigError(f"stop_hold_ms must be >= 0, got {self.stop_hold_ms}")
        return self


@dataclass
class MappingConfig:
    """Constants of the speed->tempo and posture->volume maps."""

    bpm_min: float = 60.0
    bpm_max: float = 180.0
    proxy_lo: float = 0.1             # speed proxy mapped to bpm_min
    proxy_hi: float = 1.0             # speed proxy mapped to bpm_max
    vol_min: float = 0.2
    vol_max: float = 1.0
    default_bpm: float = 110.0        # tempo while tempo is mode-gated
    default_vol: float = 0.6          # volume while volume is mode-gated
    bpm_slew: float = 30.0            # max bpm change per second
    vol_slew: float = 1.0             # max gain change per second

    def validate(self) -> "MappingConfig":
        if not self.bpm_min < self.bpm_max:
            raise ConfigError(f"bpm_min ({self.bpm_min}) must be < bpm_max ({self.bpm_max})")
        if not self.proxy_lo < self.proxy_hi:
            raise ConfigError(f"proxy_lo ({self.proxy_lo}) must be < proxy_hi ({self.proxy_hi})")
        if not 0.0 <= self.vol_min < self.vol_max <= 1.0:
            raise ConfigError(
                f"need 0 <= vol_min < vol_max <= 1, got [{self.vol_min}, {self.vol_max}]"
            )
        if self.bpm_slew <= 0 or self.vol_slew <= 0:
            raise ConfigError("slew rates must be > 0")
        if not self.bpm_min <= self.default_bpm <= self.bpm_max:
            raise ConfigError(f"default_bpm {self.default_bpm} outside bpm range")
        if not self.vol_min <= self.default_vol <= self.vol_max:
            raise ConfigError(f"default_vol {self.default_vol} outside vol range")
        return self


@dataclass
class BikeParams:
    """Virtual bike dynamics and sensor geometry."""

    k_e: float = 3.0                  # pedal effort gain (m/s^2 per unit effort)
    c_d: float = 0.6                  # linear drag (1/s); terminal v = k_e*effort/c_d
    wheel_circumference_m: float = 1.2
    gear_ratio: float = 1.0           # cadence_hz = v / (circumference * gear_ratio)
    tau_lean_s: float = 0.3           # first-order lag of actual lean behind command
    pedal_accel_amp: float = math.sqrt(2.0)  # forward-axis oscillation amplitude at
                                             # full effort; sqrt(2) makes the steady
                                             # activity RMS equal the effort value
    gravity: float = 9.81

    def validate(self) -> "BikeParams":
        if self.k_e <= 0 or self.c_d <= 0:
            raise ConfigError("k_e and c_d must be > 0")
        if self.wheel_circumference_m <= 0 or self.gear_ratio <= 0:
            raise ConfigError("wheel_circumference_m and gear_ratio must be > 0")
        if self.tau_lean_s <= 0:
            raise ConfigError("tau_lean_s must be > 0")
        return self


@dataclass
class NoiseConfig:
    """Sensor noise model of the simulator."""

    accel_sigma: float = 0.01         # m/s^2 per axis
    ultra_sigma: float = 4.0          # mm
    dropout_prob: float = 0.01        # per-reading chance of no ultrasonic echo
    rng_seed: int = 0

    def validate(self) -> "NoiseConfig":
        if self.accel_sigma < 0 or self.ultra_sigma < 0:
            raise ConfigError("noise sigmas must be >= 0")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ConfigError(f"dropout_prob must be in [0,1), got {self.dropout_prob}")
        return self


@dataclass
class EngineConfig:
    """Everything the pipeline needs, merged from defaults plus a config file."""

    profile: CalibrationProfile
    mapping: MappingConfig
    bike: BikeParams
    noise: NoiseConfig

    @classmethod
    def default(cls) -> "EngineConfig":
        return cls(CalibrationProfile(), MappingConfig(), BikeParams(), NoiseConfig())

    def validate(self) -> "EngineConfig":
        self.profile.validate()
        self.mapping.validate()
        self.bike.validate()
        self.noise.validate()
        return self


def parse_kv_file(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key = value`` file into a string dict."""
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _apply(obj, values: dict[str, str], consumed: set[str]) -> None:
    for f in fields(obj):
        if f.name not in values:
            continue
        raw = values[f.name]
        try:
            if f.type in ("int", int):
                parsed = int(raw)
            else:
                parsed = float(raw)
        except ValueError as exc:
            raise ConfigError(f"key {f.name!r}: cannot parse {raw!r}") from exc
        setattr(obj, f.name, parsed)
        consumed.add(f.name)


def load_config(path: str | Path | None) -> EngineConfig:
    """Build an EngineConfig from defaults, overridden by an optional file."""
    cfg = EngineConfig.default()
    if path is None:
        return cfg.validate()
    values = parse_kv_file(path)
    consumed: set[str] = set()
    for section in (cfg.profile, cfg.mapping, cfg.bike, cfg.noise):
        _apply(section, values, consumed)
    unknown = set(values) - consumed
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {sorted(unknown)}")
    return cfg.validate()


def write_profile(path: str | Path, profile: CalibrationProfile) -> None:
    """Write a profile as a flat key/value file (the calibrate output)."""
    lines = [f"{f.name} = {getattr(profile, f.name)}" for f in fields(profile)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

"""Sensor conditioning: raw samples to speed proxy, posture, and ride state.

The speed proxy is deliberately not a velocity estimate.  Double-integrating
a consumer accelerometer drifts without bound, so we use the RMS of the
dynamic (gravity-removed) acceleration as a drift-free activity measure:
pedaling vibration grows with speed, and only the ordinal slow/fast
relation matters downstream.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence

from .config import CalibrationProfile

Vec3 = tuple[float, float, float]


class RideState(Enum):
    RIDING = "riding"
    STOPPED = "stopped"


@dataclass(frozen=True)
class SensorSample:
    """One timestamped reading pair; ultra_mm is None on an echo dropout."""

    t_ms: int
    accel: Vec3
    ultra_mm: Optional[int]


@dataclass(frozen=True)
class SensingOutput:
    t_ms: int
    speed_proxy: float
    posture: float
    ride_state: RideState


def median_filter(window: Sequence[float], taps: int) -> float:
    """Middle element of the sorted window; rejects ultrasonic spikes.

    The caller excludes invalid (dropout) samples before calling.
    """
    if taps % 2 == 0 or taps < 1:
        raise ValueError(f"taps must be odd and >= 1, got {taps}")
    if len(window) != taps:
        raise ValueError(f"window length {len(window)} != taps {taps}")
    return sorted(window)[(taps - 1) // 2]


class GravityFilter:
    """Per-axis exponential low-pass gravity estimate, subtracted per sample.

    The estimate initializes to the first sample, which makes the transform
    exactly shift-equivariant: offsetting every input by a constant leaves
    the dynamic output unchanged.
    """

    def __init__(self, alpha: float):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {alpha}")
        self.alpha = alpha
        self._g: Optional[list[float]] = None

    def update(self, accel: Vec3) -> Vec3:
        if self._g is None:
            self._g = list(accel)
        else:
            a = self.alpha
            for i in range(3):
                self._g[i] += a * (accel[i] - self._g[i])
        g = self._g
        return (accel[0] - g[0], accel[1] - g[1], accel[2] - g[2])


def remove_gravity(samples: Iterable[Vec3], gravity_alpha: float) -> Iterator[Vec3]:
    """Stream transform: dynamic acceleration for each input triple."""
    filt = GravityFilter(gravity_alpha)
    for accel in samples:
        yield filt.update(accel)


class SpeedProxyEstimator:
    """Trailing-window RMS of dynamic-acceleration magnitude, then smoothed.

    Output is zero for a still sensor and nonnegative always.
    """

    def __init__(self, rms_window_ms: float, proxy_alpha: float):
        self.window_ms = rms_window_ms
        self.alpha = proxy_alpha
        self._window: deque[tuple[int, float]] = deque()  # (t_ms, magnitude^2)
        self._sum_sq = 0.0
        self._smoothed: Optional[float] = None

    def update(self, t_ms: int, dynamic: Vec3) -> float:
        mag_sq = dynamic[0] ** 2 + dynamic[1] ** 2 + dynamic[2] ** 2
        self._window.append((t_ms, mag_sq))
        self._sum_sq += mag_sq
        cutoff = t_ms - self.window_ms
        while self._window and self._window[0][0] <= cutoff:
            _, old = self._window.popleft()
            self._sum_sq -= old
        rms = math.sqrt(max(self._sum_sq, 0.0) / len(self._window))
        if self._smoothed is None:
            self._smoothed = rms
        else:
            self._smoothed += self.alpha * (rms - self._smoothed)
        return self._smoothed


def estimate_speed_proxy(
    dynamic: Iterable[tuple[int, Vec3]], rms_window_ms: float, proxy_alpha: float = 0.05
) -> Iterator[float]:
    """Stream transform over (t_ms, dynamic accel) pairs."""
    est = SpeedProxyEstimator(rms_window_ms, proxy_alpha)
    for t_ms, vec in dynamic:
        yield est.update(t_ms, vec)


def posture_from_distance(d_mm: float, profile: CalibrationProfile) -> float:
    """Normalized rider position: 0 fully forward, 1 fully upright, clamped."""
    span = profile.d_upright_mm - profile.d_forward_mm
    posture = (d_mm - profile.d_forward_mm) / span
    return min(1.0, max(0.0, posture))


class PostureEstimator:
    """Median-filtered distance to posture; holds the last value on dropout.

    Posture starts at 1.0 (sitting upright, the at-rest pose) so a leading
    dropout does not invent a lean.
    """

    def __init__(self, profile: CalibrationProfile):
        self.profile = profile
        self._window: deque[float] = deque(maxlen=profile.median_taps)
        self._posture = 1.0

    def update(self, ultra_mm: Optional[int]) -> float:
        if ultra_mm is None:
            return self._posture
        self._window.append(float(ultra_mm))
        n = len(self._window)
        # during warm-up the window is short; use its sort-middle anyway
        filtered = sorted(self._window)[(n - 1) // 2]
        self._posture = posture_from_distance(filtered, self.profile)
        return self._posture


class RideStateDetector:
    """Riding/Stopped hysteresis.

    Stopped is entered only after the proxy stays below v_stop for
    stop_hold_ms; Riding resumes immediately at resume_threshold.  Initial
    state is Stopped.
    """

    def __init__(self, profile: CalibrationProfile):
        self.profile = profile
        self.state = RideState.STOPPED
        self._below_since_ms: Optional[int] = None

    def update(self, t_ms: int, speed_proxy: float) -> RideState:
        p = self.profile
        if speed_proxy < p.v_stop:
            if self._below_since_ms is None:
                self._below_since_ms = t_ms
            if (
                self.state is RideState.RIDING
                and t_ms - self._below_since_ms >= p.stop_hold_ms
            ):
                self.state = RideState.STOPPED
        else:
            self._below_since_ms = None
            if speed_proxy >= p.resume_threshold:
                self.state = RideState.RIDING
        return self.state


def detect_ride_state(
    proxies: Iterable[tuple[int, float]], profile: CalibrationProfile
) -> Iterator[RideState]:
    """Stream transform over (t_ms, speed_proxy) pairs."""
    det = RideStateDetector(profile)
    for t_ms, proxy in proxies:
        yield det.update(t_ms, proxy)


class SensingPipeline:
    """Full conditioning chain for a sample stream (single-owner, stateful)."""

    def __init__(self, profile: CalibrationProfile):
        profile.validate()
        self.profile = profile
        self._gravity = GravityFilter(profile.gravity_alpha)
        self._proxy = SpeedProxyEstimator(profile.rms_window_ms, profile.proxy_alpha)
        self._posture = PostureEstimator(profile)
        self._ride = RideStateDetector(profile)
        self._last_t: Optional[int] = None

    def update(self, sample: SensorSample) -> SensingOutput:
        if self._last_t is not None and sample.t_ms <= self._last_t:
            raise ValueError(
                f"non-monotonic sample timestamp: {sample.t_ms} after {self._last_t}"
            )
        self._last_t = sample.t_ms
        dynamic = self._gravity.update(sample.accel)
        proxy = self._proxy.update(sample.t_ms, dynamic)
        posture = self._posture.update(sample.ultra_mm)
        state = self._ride.update(sample.t_ms, proxy)
        return SensingOutput(sample.t_ms, proxy, posture, state)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import simulate_lines, zero_noise_config
from ridebeat.config import BikeParams, CalibrationProfile, NoiseConfig
from ridebeat.rng import Rng
from ridebeat.simulator import (
    BikeState,
    RiderCommand,
    Scenario,
    ScenarioPlayer,
    SensorSynth,
    run_scenario,
    step_bike,
)
from ridebeat.traces import write_trace

PARAMS = BikeParams(k_e=3.0, c_d=0.6)
PROFILE = CalibrationProfile()
QUIET = NoiseConfig(accel_sigma=0.0, ultra_sigma=0.0, dropout_prob=0.0, rng_seed=0)


# --- bike dynamics ---------------------------------------------------------

def test_no_effort_from_rest_stays_still():
    state = BikeState()
    for _ in range(200):
        state = step_bike(state, RiderCommand(effort=0.0), 0.01, PARAMS)
    assert state.v == 0.0
    assert state.cadence_hz == 0.0


def test_terminal_speed_is_ke_effort_over_cd():
    state = BikeState()
    for _ in range(1500):  # 15 s at 100 Hz; time constant 1/c_d ~ 1.7 s
        state = step_bike(state, RiderCommand(effort=0.6), 0.01, PARAMS)
    assert state.v == pytest.approx(3.0, rel=0.01)


def test_coast_down_tracks_closed_form():
    v0 = 3.0
    state = BikeState(v=v0)
    dt = 0.001
    for k in range(1, 5001):  # 5 s
        state = step_bike(state, RiderCommand(effort=0.0), dt, PARAMS)
        expected = v0 * math.exp(-PARAMS.c_d * k * dt)
        assert state.v == pytest.approx(expected, rel=0.005)


def test_step_bike_rejects_bad_dt():
    with pytest.raises(ValueError):
        step_bike(BikeState(), RiderCommand(), 0.0, PARAMS)
    with pytest.raises(ValueError):
        step_bike(BikeState(), RiderCommand(), 0.2, PARAMS)


def test_lean_follows_command_with_lag():
    state = BikeState()
    state = step_bike(state, RiderCommand(lean=1.0), 0.01, PARAMS)
    first = state.lean_actual
    assert 0.0 < first < 0.1  # one step of a tau=0.3 s follower
    for _ in range(500):
        state = step_bike(state, RiderCommand(lean=1.0), 0.01, PARAMS)
    assert state.lean_actual == pytest.approx(1.0, abs=1e-6)


@given(
    st.lists(st.floats(min_value=0, max_value=1), min_size=1, max_size=300)
)
def test_speed_stays_bounded(efforts):
    state = BikeState()
    bound = PARAMS.k_e / PARAMS.c_d
    for e in efforts:
        state = step_bike(state, RiderCommand(effort=e), 0.01, PARAMS)
        assert 0.0 <= state.v <= bound + 1e-9


def test_rider_command_validation():
    with pytest.raises(ValueError):
        RiderCommand(effort=1.5)
    with pytest.raises(ValueError):
        RiderCommand(lean=-0.1)


# --- sensor synthesis ------------------------------------------------------

def test_rest_sensors_read_gravity_and_upright_distance():
    synth = SensorSynth(PARAMS, PROFILE, QUIET)
    sample = synth.sample(BikeState(t_ms=10), effort=0.0, dt_s=0.01)
    assert sample.accel == (0.0, 0.0, 9.81)
    assert sample.ultra_mm == 600


def test_full_lean_reads_forward_distance():
    synth = SensorSynth(PARAMS, PROFILE, QUIET)
    sample = synth.sample(BikeState(lean_actual=1.0, t_ms=10), effort=0.0, dt_s=0.01)
    assert sample.ultra_mm == 300


def test_forward_axis_spectrum_peaks_at_cadence():
    # cadence 2 Hz needs v = 2.4 m/s = k_e*e/c_d -> effort 0.48
    lines = simulate_lines([{"t_ms": 0, "effort": 0.48}], duration_s=60, seed=3)
    ax = np.array([s.accel[0] for s, _ in lines])
    tail = ax[1200:]  # skip the 12 s spin-up
    spectrum = np.abs(np.fft.rfft(tail))
    freqs = np.fft.rfftfreq(len(tail), d=0.01)
    peak_hz = freqs[1:][np.argmax(spectrum[1:])]  # exclude DC
    bin_width = freqs[1] - freqs[0]
    assert abs(peak_hz - 2.0) <= bin_width


def test_dropout_marks_sample_invalid():
    noisy = NoiseConfig(accel_sigma=0.0, ultra_sigma=0.0, dropout_prob=0.5, rng_seed=9)
    synth = SensorSynth(PARAMS, PROFILE, noisy)
    readings = [
        synth.sample(BikeState(t_ms=(k + 1) * 10), effort=0.0, dt_s=0.01).ultra_mm
        for k in range(200)
    ]
    n_dropped = sum(1 for r in readings if r is None)
    assert 60 <= n_dropped <= 140  # ~Binomial(200, 0.5)
    assert all(r == 600 for r in readings if r is not None)


def test_noise_stream_is_seed_deterministic():
    noisy = NoiseConfig(accel_sigma=0.05, ultra_sigma=5.0, dropout_prob=0.1, rng_seed=7)

    def collect():
        synth = SensorSynth(PARAMS, PROFILE, noisy, rng=Rng(7))
        return [
            synth.sample(BikeState(t_ms=(k + 1) * 10), effort=0.3, dt_s=0.01)
            for k in range(100)
        ]

    assert collect() == collect()


# --- scenarios -------------------------------------------------------------

def test_empty_scenario_yields_rest_samples():
    lines = run_scenario(
        Scenario.from_obj([]), 5.0, PARAMS, PROFILE, QUIET, rate_hz=100, seed=0
    )
    assert len(lines) == 500
    for sample, button in lines:
        assert sample.accel == (0.0, 0.0, 9.81)
        assert sample.ultra_mm == 600
        assert not button
    assert [s.t_ms for s, _ in lines] == [(k + 1) * 10 for k in range(500)]


def test_same_seed_gives_byte_identical_traces(tmp_path):
    cfg = zero_noise_config()
    entries = [{"t_ms": 0, "effort": 0.7}, {"t_ms": 3000, "lean": 0.8, "button": True}]

    def write(path):
        lines = run_scenario(
            Scenario.from_obj(entries), 8.0, cfg.bike, cfg.profile,
            NoiseConfig(rng_seed=5), rate_hz=100, seed=5,
        )
        write_trace(path, 100, 5, lines)
        return path.read_bytes()

    assert write(tmp_path / "a.jsonl") == write(tmp_path / "b.jsonl")


def test_scenario_rejects_decreasing_times():
    with pytest.raises(ValueError):
        Scenario.from_obj([{"t_ms": 100}, {"t_ms": 50}])


def test_scenario_rejects_overlapping_entries():
    with pytest.raises(ValueError, match="overlapping"):
        Scenario.from_obj([{"t_ms": 100, "effort": 0.1}, {"t_ms": 100, "effort": 0.2}])


def test_scenario_entries_carry_previous_values():
    scenario = Scenario.from_obj(
        [{"t_ms": 0, "effort": 0.5, "lean": 0.2}, {"t_ms": 1000, "lean": 0.9}]
    )
    player = ScenarioPlayer(scenario)
    cmd, _ = player.advance(10)
    assert (cmd.effort, cmd.lean) == (0.5, 0.2)
    cmd, _ = player.advance(1000)
    assert (cmd.effort, cmd.lean) == (0.5, 0.9)


def test_button_edge_fires_exactly_once():
    scenario = Scenario.from_obj([{"t_ms": 500, "button": True}])
    player = ScenarioPlayer(scenario)
    edges = [player.advance((k + 1) * 10)[1] for k in range(100)]
    assert edges.count(True) == 1
    assert edges[49]  # the tick ending at t=500 ms

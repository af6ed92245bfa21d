import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ridebeat.sequencer import (
    BeatEvent,
    DrumPattern,
    Sequencer,
    Voice,
    advance_phase,
    click_pattern,
    default_pattern,
    emit_beats,
)


# --- advance_phase ---------------------------------------------------------

def test_advance_crosses_half_beat_steps():
    # 120 bpm = 2 beats/s; 0.5 s at 2 steps/beat crosses the boundaries at
    # 0.5 and 1.0 beats
    new_phase, crossed = advance_phase(0.0, 120.0, 0.5, steps_per_beat=2)
    assert new_phase == 1.0
    assert crossed == [1, 2]
    assert [k / 2 for k in crossed] == [0.5, 1.0]


def test_advance_zero_bpm_freezes():
    new_phase, crossed = advance_phase(1.25, 0.0, 0.5, steps_per_beat=4)
    assert new_phase == 1.25
    assert crossed == []


def test_advance_rejects_bad_arguments():
    with pytest.raises(ValueError):
        advance_phase(0.0, -1.0, 0.1, 2)
    with pytest.raises(ValueError):
        advance_phase(0.0, 100.0, 0.0, 2)


def fine_integration_oracle(bpm_of_t, total_s, spb, fine_dt=1e-4):
    """Step at fine_dt, recording the time each step boundary is crossed."""
    phase = 0.0
    times = {}
    t = 0.0
    next_k = 1
    steps = int(round(total_s / fine_dt))
    for i in range(steps):
        t = (i + 1) * fine_dt
        phase += bpm_of_t(i * fine_dt) / 60.0 * fine_dt
        while next_k / spb <= phase:
            times[next_k] = t
            next_k += 1
    return times


def test_ramp_event_times_match_fine_integration_oracle():
    # linear ramp 60 -> 180 bpm over 10 s, engine at dt = 10 ms; the default
    # pattern has exactly one hat per step, so the n-th hat is the n-th
    # global step boundary
    def bpm_of_t(t):
        return 60.0 + 12.0 * t

    spb = 2
    seq = Sequencer(default_pattern())
    dt = 0.01
    hat_times = []
    for i in range(1000):
        events = seq.tick((i + 1) * 10, dt, bpm_of_t(i * dt), 1.0, riding=True)
        hat_times.extend(e.t_ms / 1000.0 for e in events if e.voice == "hat")

    oracle = fine_integration_oracle(bpm_of_t, 10.0, spb)
    # integral of bpm/60 over 10 s is 20 beats -> ~40 step boundaries
    assert len(hat_times) >= 38
    for n, t in enumerate(hat_times, start=1):
        assert n in oracle
        assert t == pytest.approx(oracle[n], abs=0.010)


def test_constant_bpm_event_times_are_exact():
    seq = Sequencer(click_pattern())
    events = []
    for i in range(200):
        events += seq.tick((i + 1) * 10, 0.01, 120.0, 1.0, riding=True)
    for n, e in enumerate(events, start=1):
        assert e.t_ms == pytest.approx(n * 500.0, abs=1e-6)


# --- emit_beats ------------------------------------------------------------

def test_emit_empty_crossings_gives_no_events():
    assert emit_beats([], [], default_pattern(), 120, 0.5, riding=True) == []


def test_emit_nothing_while_stopped():
    assert emit_beats([1, 2, 3], [10.0, 20.0, 30.0], default_pattern(), 120, 0.5,
                      riding=False) == []


def test_emit_wraps_pattern_modulo():
    pattern = default_pattern()
    crossed = list(range(16))
    times = [float(k) for k in crossed]
    events = emit_beats(crossed, times, pattern, 120, 1.0, riding=True)
    step_sequence = []
    for e in events:
        if not step_sequence or step_sequence[-1] != e.step_index:
            step_sequence.append(e.step_index)
    assert step_sequence == list(range(8)) + list(range(8))


def test_emit_applies_voice_gain_multiplier():
    pattern = DrumPattern(steps_per_beat=1, steps=((Voice("hat", 0.5),),))
    [event] = emit_beats([0], [100.0], pattern, 100, 0.8, riding=True)
    assert event.vol_at_event == pytest.approx(0.4)
    assert event.bpm_at_event == 100


# --- exactness properties --------------------------------------------------

def count_steps(bpm, total_s, spb, dt=0.01):
    phase = 0.0
    count = 0
    n_full = int(total_s / dt)
    for _ in range(n_full):
        phase, crossed = advance_phase(phase, bpm, dt, spb)
        count += len(crossed)
    rem = total_s - n_full * dt
    if rem > 1e-12:
        phase, crossed = advance_phase(phase, bpm, rem, spb)
        count += len(crossed)
    return count


def test_step_count_matches_floor_formula_for_random_pairs():
    rng = random.Random(4242)
    for _ in range(200):
        bpm = rng.uniform(30.0, 300.0)
        total_s = rng.uniform(1.0, 20.0)
        spb = rng.choice([1, 2, 4])
        expected = math.floor(total_s * bpm / 60.0 * spb)
        assert count_steps(bpm, total_s, spb) == expected, (bpm, total_s, spb)


@given(
    st.floats(min_value=30, max_value=300),
    st.integers(min_value=1, max_value=200),
    st.sampled_from([1, 2, 4]),
)
def test_phase_invariant_under_dt_subdivision(bpm, n_pairs, spb):
    whole = 0.0
    halves = 0.0
    for _ in range(n_pairs):
        whole, _ = advance_phase(whole, bpm, 0.02, spb)
        halves, _ = advance_phase(halves, bpm, 0.01, spb)
        halves, _ = advance_phase(halves, bpm, 0.01, spb)
    assert abs(whole - halves) <= 1e-9


def test_piecewise_constant_bpm_subdivision_within_tolerance():
    segments = [(72.5, 0.8), (141.0, 1.3), (60.0, 0.55), (180.0, 2.0)]
    one_shot = 0.0
    chopped = 0.0
    for bpm, dur in segments:
        one_shot, _ = advance_phase(one_shot, bpm, dur, 2)
        n = 37
        for _ in range(n):
            chopped, _ = advance_phase(chopped, bpm, dur / n, 2)
    assert abs(one_shot - chopped) <= 1e-9


def test_sequencer_phase_frozen_while_stopped():
    seq = Sequencer(default_pattern())
    seq.tick(10, 0.01, 150.0, 1.0, riding=True)
    phase = seq.phase
    for i in range(100):
        assert seq.tick(20 + i * 10, 0.01, 150.0, 1.0, riding=False) == []
    assert seq.phase == phase


def test_pattern_validation():
    with pytest.raises(ValueError):
        DrumPattern(steps_per_beat=0, steps=((Voice("kick"),),))
    with pytest.raises(ValueError):
        DrumPattern(steps_per_beat=2, steps=())
    with pytest.raises(ValueError):
        DrumPattern(steps_per_beat=2, steps=((), ()))
    with pytest.raises(ValueError):
        Voice("cowbell")
    with pytest.raises(ValueError):
        Voice("kick", 0.0)

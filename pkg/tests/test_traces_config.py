import pytest

from ridebeat.config import (
    CalibrationProfile,
    ConfigError,
    EngineConfig,
    MappingConfig,
    load_config,
    parse_kv_file,
    write_profile,
)
from ridebeat.sensing import SensorSample
from ridebeat.traces import TraceError, read_trace, write_trace


def make_samples(n=5):
    return [
        (SensorSample((k + 1) * 10, (0.1 * k, -0.25, 9.81), 600 - k), k == 2)
        for k in range(n)
    ]


# --- traces ----------------------------------------------------------------

def test_trace_roundtrip_preserves_everything(tmp_path):
    path = tmp_path / "t.jsonl"
    lines = make_samples()
    write_trace(path, 100, 42, lines, markers={3: "upright"})
    trace = read_trace(path)
    assert trace.rate_hz == 100
    assert trace.seed == 42
    samples = [ln for ln in trace.lines if ln.sample is not None]
    assert [(ln.sample, ln.button) for ln in samples] == lines
    markers = [ln.marker for ln in trace.lines if ln.marker is not None]
    assert markers == ["upright"]


def test_trace_roundtrip_preserves_dropouts(tmp_path):
    path = tmp_path / "t.jsonl"
    write_trace(path, 100, None, [(SensorSample(10, (0.0, 0.0, 9.81), None), False)])
    trace = read_trace(path)
    assert trace.samples[0].ultra_mm is None


def test_trace_roundtrip_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    lines = make_samples(50)
    write_trace(a, 100, 1, lines)
    write_trace(b, 100, 1, [(ln.sample, ln.button) for ln in read_trace(a).lines])
    assert a.read_bytes() == b.read_bytes()


def test_truncated_last_line_names_the_line(tmp_path):
    path = tmp_path / "t.jsonl"
    write_trace(path, 100, 0, make_samples())
    text = path.read_text()
    path.write_text(text[:-20])  # chop into the final sample line
    with pytest.raises(TraceError, match=r":6:"):
        read_trace(path)


def test_missing_header_is_rejected(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text('{"t_ms":10,"ax":0,"ay":0,"az":9.81,"ultra_mm":600}\n')
    with pytest.raises(TraceError, match="schema"):
        read_trace(path)


def test_unsupported_schema_version(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text('{"schema":"rnr-trace/9","rate_hz":100}\n')
    with pytest.raises(TraceError, match="rnr-trace/9"):
        read_trace(path)


def test_non_monotonic_timestamps_rejected(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text(
        '{"schema":"rnr-trace/1","rate_hz":100,"seed":0}\n'
        '{"t_ms":20,"ax":0,"ay":0,"az":9.81,"ultra_mm":600}\n'
        '{"t_ms":20,"ax":0,"ay":0,"az":9.81,"ultra_mm":600}\n'
    )
    with pytest.raises(TraceError, match=r":3:.*not increasing"):
        read_trace(path)


def test_out_of_range_ultra_rejected(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text(
        '{"schema":"rnr-trace/1","rate_hz":100,"seed":0}\n'
        '{"t_ms":10,"ax":0,"ay":0,"az":9.81,"ultra_mm":6000}\n'
    )
    with pytest.raises(TraceError, match=r"\[0, 5000\]"):
        read_trace(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text("")
    with pytest.raises(TraceError, match="empty"):
        read_trace(path)


# --- config ----------------------------------------------------------------

def test_defaults_validate():
    EngineConfig.default().validate()


def test_parse_kv_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(
        "# posture calibration\n"
        "d_forward_mm = 280\n"
        "d_upright_mm = 640   # per session\n"
        "\n"
        "bpm_max = 160\n"
    )
    values = parse_kv_file(p)
    assert values == {"d_forward_mm": "280", "d_upright_mm": "640", "bpm_max": "160"}


def test_load_config_overrides_defaults(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("bpm_max = 160\nmedian_taps = 7\naccel_sigma = 0\n")
    cfg = load_config(p)
    assert cfg.mapping.bpm_max == 160
    assert cfg.profile.median_taps == 7
    assert cfg.noise.accel_sigma == 0
    assert cfg.mapping.bpm_min == 60  # untouched default


def test_load_config_rejects_unknown_keys(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("warp_factor = 9\n")
    with pytest.raises(ConfigError, match="warp_factor"):
        load_config(p)


def test_load_config_rejects_duplicate_keys(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("bpm_max = 160\nbpm_max = 170\n")
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(p)


def test_invalid_combinations_rejected(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("d_forward_mm = 700\n")  # above d_upright default of 600
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        MappingConfig(bpm_min=100, bpm_max=90).validate()
    with pytest.raises(ConfigError):
        MappingConfig(default_bpm=500).validate()
    with pytest.raises(ConfigError):
        CalibrationProfile(median_taps=4).validate()
    with pytest.raises(ConfigError):
        CalibrationProfile(v_stop=0.1, resume_threshold=0.05).validate()


def test_profile_write_read_roundtrip(tmp_path):
    profile = CalibrationProfile(d_forward_mm=312.0, d_upright_mm=587.0)
    path = tmp_path / "profile.cfg"
    write_profile(path, profile)
    loaded = load_config(path).profile
    assert loaded == profile

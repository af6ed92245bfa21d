import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from ridebeat.config import EngineConfig
from ridebeat.pipeline import Engine
from ridebeat.simulator import Scenario, run_scenario

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

REPO_ROOT = Path(__file__).resolve().parent.parent
GOLDEN_DIR = Path(__file__).resolve().parent / "goldens"


def zero_noise_config() -> EngineConfig:
    cfg = EngineConfig.default()
    cfg.noise.accel_sigma = 0.0
    cfg.noise.ultra_sigma = 0.0
    cfg.noise.dropout_prob = 0.0
    return cfg


def simulate_lines(entries, duration_s, config=None, seed=0, rate_hz=100):
    """Run a scenario; returns the (sample, button_edge) tick list."""
    cfg = config if config is not None else zero_noise_config()
    return run_scenario(
        Scenario.from_obj(entries),
        duration_s,
        cfg.bike,
        cfg.profile,
        cfg.noise,
        rate_hz=rate_hz,
        seed=seed,
    )


def replay_lines(lines, config=None, rate_hz=100, pattern=None):
    """Drive the engine over simulator output; returns (states, events)."""
    cfg = config if config is not None else zero_noise_config()
    engine = Engine(cfg, rate_hz=rate_hz, pattern=pattern)
    states, events = [], []
    for sample, button in lines:
        result = engine.process_sample(sample, button_presses=int(button))
        states.append(result)
        events.extend(result.events)
    return states, events


def write_scenario(path: Path, entries, duration_s=None):
    if duration_s is None:
        path.write_text(json.dumps(entries))
    else:
        path.write_text(json.dumps({"duration_s": duration_s, "commands": entries}))
    return path


@pytest.fixture
def zero_noise_cfg_file(tmp_path):
    p = tmp_path / "zero_noise.cfg"
    p.write_text("accel_sigma = 0\nultra_sigma = 0\ndropout_prob = 0\n")
    return p

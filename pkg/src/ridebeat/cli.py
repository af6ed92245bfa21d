"""Command-line harness: replay, simulate, stimuli, calibrate, serve.

Exit codes: 0 ok, 1 domain error (calibration separation too small, failed
invariant checks), 2 usage error (bad flags, unreadable or mis-schema'd
inputs).  Identical inputs always produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import analysis, report
from .config import CalibrationProfile, ConfigError, load_config, write_profile
from .pipeline import Engine
from .sequencer import load_pattern
from .simulator import Scenario, run_scenario
from .stimulus import make_stimulus_pair, read_wav, write_wav
from .traces import (
    Trace,
    TraceError,
    event_row,
    read_scenario,
    read_trace,
    state_row,
    write_jsonl,
    write_trace,
)

MIN_CALIBRATION_SEPARATION_MM = 50.0


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=0, help="simulator RNG seed")
    p.add_argument("--pretty", action="store_true", help="print a human-readable report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridebeat",
        description="Bike-sensor driven beat engine: replay traces, simulate rides, "
        "generate perception-test stimuli, calibrate posture, serve live sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay", help="run the engine offline over a recorded trace")
    p.add_argument("trace", help="trace JSONL file")
    p.add_argument("--pattern", default=None, help="drum pattern JSON file")
    p.add_argument("--window-s", type=float, default=report.DEFAULT_WINDOW_S)
    _add_common(p)

    p = sub.add_parser("simulate", help="run a scripted virtual ride, then replay it")
    p.add_argument("scenario", help="scenario script JSON file")
    p.add_argument("--rate-hz", type=int, default=100)
    p.add_argument("--duration-s", type=float, default=None)
    p.add_argument("--pattern", default=None)
    p.add_argument("--window-s", type=float, default=report.DEFAULT_WINDOW_S)
    _add_common(p)

    p = sub.add_parser("stimuli", help="render perception-test stimulus pairs")
    p.add_argument("spec", help="JSON list of pair specs {parameter, contrast, seed}")
    p.add_argument("--jobs", type=int, default=1, help="render pairs in parallel")
    _add_common(p)

    p = sub.add_parser("calibrate", help="derive posture distances from a marked trace")
    p.add_argument("trace", help="trace with 'upright' and 'forward' marker lines")
    _add_common(p)

    p = sub.add_parser("serve", help="run the live session server")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scenario", default=None, help="start with this scripted session")
    p.add_argument("--ui", default=None, help="serve this directory as the console UI")
    p.add_argument("--pattern", default=None)
    _add_common(p)

    return parser


def _load_pattern_arg(path: Optional[str]):
    if path is None:
        return None
    try:
        return load_pattern(path)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"bad pattern file {path}: {exc}") from exc


def _replay_lines(trace: Trace, config, pattern) -> tuple[list[dict], list]:
    engine = Engine(config, rate_hz=trace.rate_hz, pattern=pattern)
    states: list[dict] = []
    events: list = []
    for line in trace.lines:
        if line.sample is None:
            continue
        result = engine.process_sample(line.sample, button_presses=int(line.button))
        states.append(
            state_row(
                t_ms=result.state.t_ms,
                mode=result.state.mode.value,
                bpm=result.state.bpm,
                vol=result.state.vol,
                speed_proxy=result.sensing.speed_proxy,
                posture=result.sensing.posture,
                ride_state=result.sensing.ride_state.value,
            )
        )
        events.extend(result.events)
    return states, events


def _write_run_outputs(out_dir: Path, trace_id: str, states, events, config, window_s,
                       pretty: bool) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_dir / "state.jsonl", states)
    write_jsonl(
        out_dir / "events.jsonl",
        (event_row(e.t_ms, e.step_index, e.voice, e.bpm_at_event, e.vol_at_event)
         for e in events),
    )
    run_report = report.build_report(trace_id, states, events, config, window_s)
    (out_dir / "report.json").write_text(report.dumps_report(run_report), encoding="utf-8")
    if pretty:
        print(report.render_pretty(run_report))
    return run_report


def cmd_replay(args) -> int:
    config = load_config(args.config)
    pattern = _load_pattern_arg(args.pattern)
    trace = read_trace(args.trace)
    states, events = _replay_lines(trace, config, pattern)
    run_report = _write_run_outputs(
        Path(args.out), Path(args.trace).name, states, events, config,
        args.window_s, args.pretty,
    )
    if not report.checks_pass(run_report):
        failed = [k for k, ok in run_report["checks"].items() if not ok]
        raise DomainError(f"invariant checks failed: {failed}")
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    pattern = _load_pattern_arg(args.pattern)
    try:
        data = read_scenario(args.scenario)
        if isinstance(data, dict):
            commands = data.get("commands", [])
            file_duration = data.get("duration_s")
        else:
            commands, file_duration = data, None
        scenario = Scenario.from_obj(commands)
    except (TraceError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad scenario {args.scenario}: {exc}") from exc
    duration_s = args.duration_s
    if duration_s is None:
        duration_s = float(file_duration) if file_duration is not None else 30.0

    lines = run_scenario(
        scenario,
        duration_s,
        config.bike,
        config.profile,
        config.noise,
        rate_hz=args.rate_hz,
        seed=args.seed,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "trace.jsonl"
    write_trace(trace_path, args.rate_hz, args.seed, lines)

    # replay the trace from disk: simulate is exactly run + replay
    trace = read_trace(trace_path)
    states, events = _replay_lines(trace, config, pattern)
    run_report = _write_run_outputs(
        out_dir, trace_path.name, states, events, config, args.window_s, args.pretty
    )
    if not report.checks_pass(run_report):
        failed = [k for k, ok in run_report["checks"].items() if not ok]
        raise DomainError(f"invariant checks failed: {failed}")
    return 0


def _render_pair(out_dir: Path, index: int, spec: dict):
    try:
        parameter = spec["parameter"]
        contrast = spec["contrast"]
        seed = int(spec["seed"])
        pair = make_stimulus_pair(
            parameter,
            contrast,
            seed,
            base_bpm=float(spec.get("base_bpm", 80.0)),
            base_gain=float(spec.get("base_gain", 0.8)),
            duration_s=float(spec.get("duration_s", 5.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad stimulus pair spec #{index}: {exc}") from exc
    name_a = f"pair{index:03d}_a.wav"
    name_b = f"pair{index:03d}_b.wav"
    write_wav(out_dir / name_a, pair.clip_a)
    write_wav(out_dir / name_b, pair.clip_b)

    measured: dict = {}
    if parameter == "tempo":
        measured["bpm_a"] = analysis.estimate_bpm(pair.clip_a)
        measured["bpm_b"] = analysis.estimate_bpm(pair.clip_b)
    else:
        measured["rms_a"] = analysis.rms_level(pair.clip_a)
        measured["rms_b"] = analysis.rms_level(pair.clip_b)
        measured["peak_a"] = analysis.peak_level(pair.clip_a)
        measured["peak_b"] = analysis.peak_level(pair.clip_b)
    return {
        "parameter": parameter,
        "contrast": contrast,
        "seed": seed,
        "clip_a": name_a,
        "clip_b": name_b,
        "answer": pair.answer,
        "nominal": {
            "bpm_a": pair.bpm_a,
            "bpm_b": pair.bpm_b,
            "gain_a": pair.gain_a,
            "gain_b": pair.gain_b,
        },
        "measured": measured,
    }


def cmd_stimuli(args) -> int:
    try:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad stimuli spec {args.spec}: {exc}") from exc
    if isinstance(spec, dict):
        spec = spec.get("pairs", [])
    if not isinstance(spec, list):
        raise UsageError(f"{args.spec}: expected a list of pair specs")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1 and len(spec) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(
                lambda pair: _render_pair(out_dir, pair[0], pair[1]), enumerate(spec)
            ))
    else:
        entries = [_render_pair(out_dir, i, s) for i, s in enumerate(spec)]
    (out_dir / "manifest.json").write_text(
        json.dumps(entries, indent=2) + "\n", encoding="utf-8"
    )
    if args.pretty:
        for e in entries:
            print(f"{e['clip_a']} vs {e['clip_b']}: {e['parameter']}/{e['contrast']}"
                  f" answer={e['answer']}")
    return 0


def cmd_calibrate(args) -> int:
    trace = read_trace(args.trace)
    segments: dict[str, list[float]] = {}
    current: Optional[str] = None
    for line in trace.lines:
        if line.marker is not None:
            current = line.marker
            segments.setdefault(current, [])
        elif current is not None and line.sample is not None:
            if line.sample.ultra_mm is not None:
                segments[current].append(float(line.sample.ultra_mm))
    missing = [name for name in ("upright", "forward") if not segments.get(name)]
    if missing:
        raise UsageError(
            f"{args.trace}: missing or empty calibration segment(s): {missing}; "
            "expected {\"marker\":\"upright\"} then {\"marker\":\"forward\"} lines"
        )
    d_upright = statistics.median(segments["upright"])
    d_forward = statistics.median(segments["forward"])
    if d_upright - d_forward < MIN_CALIBRATION_SEPARATION_MM:
        raise DomainError(
            f"calibration failed: upright median {d_upright:.0f} mm and forward "
            f"median {d_forward:.0f} mm differ by less than "
            f"{MIN_CALIBRATION_SEPARATION_MM:.0f} mm"
        )
    base = load_config(args.config).profile
    profile = CalibrationProfile(
        **{**base.__dict__, "d_upright_mm": d_upright, "d_forward_mm": d_forward}
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "profile.cfg"
    write_profile(out_path, profile)
    print(f"d_upright_mm={d_upright:.1f} d_forward_mm={d_forward:.1f} -> {out_path}")
    return 0


def cmd_serve(args) -> int:  # pragma: no cover - needs a real socket
    from .service import create_app, serve

    config = load_config(args.config)
    app = create_app(
        config=config,
        seed=args.seed,
        scenario_path=args.scenario,
        ui_dir=args.ui,
        pattern=_load_pattern_arg(args.pattern),
    )
    serve(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "replay": cmd_replay,
    "simulate": cmd_simulate,
    "stimuli": cmd_stimuli,
    "calibrate": cmd_calibrate,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, TraceError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Trace, scenario, and log file formats.

A trace is JSONL: one header line {"schema":"rnr-trace/1","rate_hz":...,
"seed":...}, then one sensor sample per line {"t_ms","ax","ay","az",
"ultra_mm"} with ultra_mm null on dropouts.  Two optional line extensions:
a sample may carry "button": true (a mode-button edge at that instant), and
a bare {"marker": name} line labels the samples that follow (used by the
calibration flow).  Readers that only know the base schema can skip both.

All writers use compact separators and Python's shortest-repr floats, so
equal values always serialize to equal bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .sensing import SensorSample

TRACE_SCHEMA = "rnr-trace/1"


class TraceError(ValueError):
    """Unreadable or mis-schema'd trace; message names the first bad line."""


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


@dataclass(frozen=True)
class TraceLine:
    """One parsed body line: a sample (with optional button edge) or a marker."""

    sample: Optional[SensorSample] = None
    button: bool = False
    marker: Optional[str] = None


@dataclass
class Trace:
    rate_hz: int
    seed: Optional[int]
    lines: list[TraceLine]

    @property
    def samples(self) -> list[SensorSample]:
        return [ln.sample for ln in self.lines if ln.sample is not None]


def write_trace(
    path: str | Path,
    rate_hz: int,
    seed: Optional[int],
    lines: Iterable[tuple[SensorSample, bool]],
    markers: Optional[dict[int, str]] = None,
) -> None:
    """Write a trace; markers maps a line index (0-based over samples) to a
    marker name emitted just before that sample."""
    header = {"schema": TRACE_SCHEMA, "rate_hz": rate_hz, "seed": seed}
    out = [_dumps(header)]
    for i, (sample, button) in enumerate(lines):
        if markers and i in markers:
            out.append(_dumps({"marker": markers[i]}))
        row = {
            "t_ms": sample.t_ms,
            "ax": sample.accel[0],
            "ay": sample.accel[1],
            "az": sample.accel[2],
            "ultra_mm": sample.ultra_mm,
        }
        if button:
            row["button"] = True
        out.append(_dumps(row))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def read_trace(path: str | Path) -> Trace:
    text = Path(path).read_text(encoding="utf-8")
    raw_lines = text.splitlines()
    if not raw_lines:
        raise TraceError(f"{path}: empty file, expected a header line")
    try:
        header = json.loads(raw_lines[0])
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path}:1: bad header: {exc}") from exc
    if not isinstance(header, dict) or header.get("schema") != TRACE_SCHEMA:
        raise TraceError(
            f"{path}:1: unsupported schema {header.get('schema')!r}, "
            f"expected {TRACE_SCHEMA!r}"
        )
    try:
        rate_hz = int(header["rate_hz"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceError(f"{path}:1: header missing valid rate_hz") from exc
    seed = header.get("seed")

    lines: list[TraceLine] = []
    last_t: Optional[int] = None
    for lineno, raw in enumerate(raw_lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceError(f"{path}:{lineno}: bad JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise TraceError(f"{path}:{lineno}: expected an object")
        if "marker" in obj:
            lines.append(TraceLine(marker=str(obj["marker"])))
            continue
        try:
            t_ms = int(obj["t_ms"])
            accel = (float(obj["ax"]), float(obj["ay"]), float(obj["az"]))
            ultra = obj["ultra_mm"]
        except (KeyError, TypeError, ValueError) as exc:
            raise TraceError(f"{path}:{lineno}: bad sample: {exc}") from exc
        if ultra is not None:
            ultra = int(ultra)
            if not 0 <= ultra <= 5000:
                raise TraceError(f"{path}:{lineno}: ultra_mm {ultra} outside [0, 5000]")
        if not all(abs(a) < float("inf") and a == a for a in accel):
            raise TraceError(f"{path}:{lineno}: non-finite acceleration")
        if last_t is not None and t_ms <= last_t:
            raise TraceError(
                f"{path}:{lineno}: t_ms {t_ms} not increasing (previous {last_t})"
            )
        last_t = t_ms
        lines.append(TraceLine(sample=SensorSample(t_ms, accel, ultra), button=bool(obj.get("button", False))))
    return Trace(rate_hz=rate_hz, seed=seed, lines=lines)


def read_scenario(path: str | Path) -> list[dict] | dict:
    """Scenario script: a JSON array of {"t_ms","effort","lean","button"}, or
    an object {"duration_s": ..., "commands": [...]}."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path}: bad JSON: {exc}") from exc
    if isinstance(data, dict):
        if not isinstance(data.get("commands", []), list):
            raise TraceError(f"{path}: 'commands' must be an array")
        return data
    if not isinstance(data, list):
        raise TraceError(f"{path}: expected a JSON array of script entries")
    return data


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(_dumps(row) + "\n")


def state_row(t_ms: int, mode: str, bpm: float, vol: float, speed_proxy: float,
              posture: float, ride_state: str) -> dict:
    return {
        "t_ms": t_ms,
        "mode": mode,
        "bpm": bpm,
        "vol": vol,
        "speed_proxy": speed_proxy,
        "posture": posture,
        "ride_state": ride_state,
    }


def event_row(t_ms: float, step: int, voice: str, bpm: float, vol: float) -> dict:
    return {"t_ms": t_ms, "step": step, "voice": voice, "bpm": bpm, "vol": vol}

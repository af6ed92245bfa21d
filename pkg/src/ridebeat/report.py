"""Machine-readable run reports for replay/simulate.

Reports are JSON first; --pretty renders a human table.  Windows tile the
trace duration without overlap (the final window may be shorter).  No
plotting here by design: reports are data for external tools.
"""

from __future__ import annotations

import json
from typing import Sequence

from .config import EngineConfig
from .sequencer import BeatEvent

DEFAULT_WINDOW_S = 10.0


def _mean(xs: Sequence[float]) -> float | None:
    return sum(xs) / len(xs) if xs else None


def build_report(
    trace_id: str,
    state_rows: Sequence[dict],
    events: Sequence[BeatEvent],
    config: EngineConfig,
    window_s: float = DEFAULT_WINDOW_S,
) -> dict:
    if not state_rows:
        return {
            "trace": trace_id,
            "windows": [],
            "event_count": 0,
            "mode_timeline": [],
            "checks": {},
        }

    t0 = state_rows[0]["t_ms"]
    t_end = state_rows[-1]["t_ms"]
    win_ms = window_s * 1000.0

    windows = []
    lo = t0
    while lo <= t_end:
        hi = lo + win_ms
        rows = [r for r in state_rows if lo <= r["t_ms"] < hi]
        evs = [e for e in events if lo <= e.t_ms < hi]
        windows.append(
            {
                "t0_ms": lo,
                "t1_ms": min(hi, t_end + 1),
                "mean_bpm": _mean([r["bpm"] for r in rows]),
                "mean_vol": _mean([r["vol"] for r in rows]),
                "mean_event_vol": _mean([e.vol_at_event for e in evs]),
                "event_count": len(evs),
            }
        )
        lo = hi

    mode_timeline = []
    for r in state_rows:
        if not mode_timeline or mode_timeline[-1]["mode"] != r["mode"]:
            mode_timeline.append({"t_ms": r["t_ms"], "mode": r["mode"]})

    m = config.mapping
    dt_budget = 1e-9
    bpm_ok = all(m.bpm_min <= r["bpm"] <= m.bpm_max for r in state_rows)
    vol_ok = all(m.vol_min <= r["vol"] <= m.vol_max for r in state_rows)
    slew_ok = True
    for a, b in zip(state_rows, state_rows[1:]):
        dt = (b["t_ms"] - a["t_ms"]) / 1000.0
        if abs(b["bpm"] - a["bpm"]) > m.bpm_slew * dt + dt_budget or (
            abs(b["vol"] - a["vol"]) > m.vol_slew * dt + dt_budget
        ):
            slew_ok = False
            break
    stopped_spans = [
        (a["t_ms"], b["t_ms"])
        for a, b in zip(state_rows, state_rows[1:])
        if a["ride_state"] == "stopped"
    ]
    gated_ok = all(
        not any(lo < e.t_ms <= hi for lo, hi in stopped_spans) for e in events
    )
    time_ok = all(a["t_ms"] < b["t_ms"] for a, b in zip(state_rows, state_rows[1:]))

    return {
        "trace": trace_id,
        "windows": windows,
        "event_count": len(events),
        "mode_timeline": mode_timeline,
        "checks": {
            "bpm_in_range": bpm_ok,
            "vol_in_range": vol_ok,
            "slew_respected": slew_ok,
            "no_events_while_stopped": gated_ok,
            "monotonic_time": time_ok,
        },
    }


def checks_pass(report: dict) -> bool:
    return all(report["checks"].values())


def render_pretty(report: dict) -> str:
    lines = [f"trace: {report['trace']}", f"events: {report['event_count']}"]
    lines.append(f"{'window':>20} {'mean bpm':>10} {'mean vol':>10} {'events':>8}")
    for w in report["windows"]:
        span = f"{w['t0_ms'] / 1000:.0f}-{w['t1_ms'] / 1000:.0f}s"
        bpm = "-" if w["mean_bpm"] is None else f"{w['mean_bpm']:.1f}"
        vol = "-" if w["mean_vol"] is None else f"{w['mean_vol']:.3f}"
        lines.append(f"{span:>20} {bpm:>10} {vol:>10} {w['event_count']:>8}")
    modes = ", ".join(f"{m['t_ms']}ms:{m['mode']}" for m in report["mode_timeline"])
    lines.append(f"modes: {modes}")
    checks = " ".join(
        f"{name}={'ok' if ok else 'FAIL'}" for name, ok in report["checks"].items()
    )
    lines.append(f"checks: {checks}")
    return "\n".join(lines)


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"

"""Wire protocol of the live session: one JSON document per text frame.

Client frames: control, button, set_mode, load_scenario, ping.
Server frames: state, beat, error, pong.
Unknown fields are ignored on decode (forward compatibility); an unknown
type or malformed payload decodes to None and the caller replies with an
error frame, keeping the connection open.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass
from typing import Optional, Union

from .mapping import Mode
from .sequencer import BeatEvent


@dataclass(frozen=True)
class Control:
    effort: float
    lean: float


@dataclass(frozen=True)
class Button:
    pass


@dataclass(frozen=True)
class SetMode:
    mode: Mode


@dataclass(frozen=True)
class LoadScenario:
    path: str


@dataclass(frozen=True)
class Ping:
    pass


ClientMessage = Union[Control, Button, SetMode, LoadScenario, Ping]


def encode_client(msg: ClientMessage) -> str:
    if isinstance(msg, Control):
        return json.dumps({"type": "control", "effort": msg.effort, "lean": msg.lean})
    if isinstance(msg, Button):
        return json.dumps({"type": "button"})
    if isinstance(msg, SetMode):
        return json.dumps({"type": "set_mode", "mode": msg.mode.value})
    if isinstance(msg, LoadScenario):
        return json.dumps({"type": "load_scenario", "path": msg.path})
    if isinstance(msg, Ping):
        return json.dumps({"type": "ping"})
    raise TypeError(f"not a client message: {msg!r}")


def decode_client(raw: str | bytes) -> Optional[ClientMessage]:
    """Decode a client frame; None means malformed (reply with bad_msg)."""
    try:
        obj = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return None
    if not isinstance(obj, dict):
        return None
    kind = obj.get("type")
    try:
        if kind == "control":
            effort = float(obj["effort"])
            lean = float(obj["lean"])
            if not (0.0 <= effort <= 1.0 and 0.0 <= lean <= 1.0):
                return None
            return Control(effort=effort, lean=lean)
        if kind == "button":
            return Button()
        if kind == "set_mode":
            return SetMode(mode=Mode(obj["mode"]))
        if kind == "load_scenario":
            return LoadScenario(path=str(obj["path"]))
        if kind == "ping":
            return Ping()
    except (KeyError, TypeError, ValueError):
        return None
    return None


def state_frame(
    t_ms: int,
    mode: Mode,
    bpm: float,
    vol: float,
    speed_proxy: float,
    posture: float,
    ride_state: str,
    v: float,
    lean: float,
) -> dict:
    return {
        "type": "state",
        "t_ms": t_ms,
        "mode": mode.value,
        "bpm": bpm,
        "vol": vol,
        "speed_proxy": speed_proxy,
        "posture": posture,
        "ride_state": ride_state,
        "v": v,
        "lean": lean,
    }


def beat_frame(event: BeatEvent) -> dict:
    return {
        "type": "beat",
        "t_ms": event.t_ms,
        "step": event.step_index,
        "voice": event.voice,
        "bpm": event.bpm_at_event,
        "vol": event.vol_at_event,
    }


def error_frame(code: str, detail: str = "") -> dict:
    return {"type": "error", "code": code, "detail": detail}


def pong_frame() -> dict:
    return {"type": "pong"}


class Outbox:
    """Bounded per-client outbound queue.

    A slow client must never stall the engine tick: on overflow, state
    frames are dropped oldest-first; beat frames are never dropped until
    the hard cap, at which point the client is past saving and must be
    disconnected (push() returns False).
    """

    def __init__(self, soft_limit: int = 256, hard_cap: int = 4096):
        if not 0 < soft_limit <= hard_cap:
            raise ValueError("need 0 < soft_limit <= hard_cap")
        self.soft_limit = soft_limit
        self.hard_cap = hard_cap
        self._q: deque[dict] = deque()

    def __len__(self) -> int:
        return len(self._q)

    def push(self, frame: dict) -> bool:
        """Queue a frame; False means the hard cap was hit (disconnect)."""
        self._q.append(frame)
        if len(self._q) > self.soft_limit:
            # shed state frames, oldest first
            for i, queued in enumerate(self._q):
                if queued["type"] == "state":
                    del self._q[i]
                    break
        if len(self._q) > self.hard_cap:
            return False
        return True

    def pop(self) -> Optional[dict]:
        return self._q.popleft() if self._q else None

    def drain(self) -> list[dict]:
        out = list(self._q)
        self._q.clear()
        return out

"""Live session server: WebSocket /session plus plain-HTTP /healthz.

One engine tick loop owns all session state; client I/O tasks communicate
with it only through latest-wins control slots, an ordered button queue,
and per-client outboxes.  All engine computation uses model time, so a
scripted live session emits exactly the BeatEvents the offline replay of
the same script and seed produces; the wall clock only paces delivery.

Loading a scenario resets the session to a fresh run (model time restarts
at zero): a scripted session is a new timeline, not a continuation.
"""

from __future__ import annotations

import asyncio
import contextlib
from dataclasses import replace
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse

from . import protocol
from .config import EngineConfig
from .pipeline import Engine
from .sequencer import DrumPattern
from .simulator import RiderCommand, Scenario, ScenarioPlayer, VirtualBike
from .traces import read_scenario

DEFAULT_PORT = 8787
TICK_HZ = 100
STATE_HZ = 20


def scenario_from_file(path: str | Path) -> tuple[Scenario, float]:
    """Load a scenario file; object form {"duration_s", "commands"} or a bare
    command array (duration defaults to last command time + 5 s)."""
    data = read_scenario(path)
    if isinstance(data, dict):
        commands = data.get("commands", [])
        duration_s = float(data["duration_s"])
    else:
        commands = data
        duration_s = (max((c.get("t_ms", 0) for c in commands), default=0)) / 1000.0 + 5.0
    return Scenario.from_obj(commands), duration_s


class LiveSession:
    """Engine + virtual bike stepped at the tick rate; single owner."""

    def __init__(
        self,
        config: EngineConfig,
        seed: int = 0,
        tick_hz: int = TICK_HZ,
        state_hz: int = STATE_HZ,
        pattern: Optional[DrumPattern] = None,
    ):
        self.config = config
        self.seed = seed
        self.tick_hz = tick_hz
        self.state_every = max(1, tick_hz // state_hz)
        self.pattern = pattern
        self.latest_control: Optional[protocol.Control] = None
        self.pending_buttons = 0
        self.reset(scenario=None, duration_s=0.0)

    def reset(self, scenario: Optional[Scenario], duration_s: float) -> None:
        """Start a fresh deterministic timeline (used at boot and on load)."""
        self.bike = VirtualBike(
            self.config.bike,
            self.config.profile,
            self.config.noise,
            rate_hz=self.tick_hz,
            seed=self.seed,
        )
        self.engine = Engine(self.config, rate_hz=self.tick_hz, pattern=self.pattern)
        self.player = ScenarioPlayer(scenario) if scenario is not None else None
        self.scenario_end_ms = round(duration_s * 1000.0)
        self.tick_count = 0
        self.latest_control = None
        self.pending_buttons = 0

    @property
    def scenario_active(self) -> bool:
        return self.player is not None

    def tick(self) -> tuple[Optional[dict], list[dict]]:
        """One engine step; returns (state frame or None, beat frames)."""
        self.tick_count += 1
        t_ms = round(self.tick_count * 1000.0 / self.tick_hz)

        if self.player is not None:
            cmd, edge = self.player.advance(t_ms)
            presses = int(edge)
            if t_ms >= self.scenario_end_ms:
                self.player = None  # scenario over; continue idle-interactive
        else:
            if self.latest_control is not None:
                cmd = RiderCommand(
                    effort=self.latest_control.effort, lean=self.latest_control.lean
                )
            else:
                cmd = RiderCommand()
            presses = self.pending_buttons
            self.pending_buttons = 0

        sample = self.bike.tick(cmd)
        result = self.engine.process_sample(sample, button_presses=presses)

        beats = [protocol.beat_frame(e) for e in result.events]
        state = None
        if self.tick_count % self.state_every == 0:
            state = protocol.state_frame(
                t_ms=sample.t_ms,
                mode=result.state.mode,
                bpm=result.state.bpm,
                vol=result.state.vol,
                speed_proxy=result.sensing.speed_proxy,
                posture=result.sensing.posture,
                ride_state=result.sensing.ride_state.value,
                v=self.bike.state.v,
                lean=self.bike.state.lean_actual,
            )
        return state, beats


class _Client:
    def __init__(self, ws: WebSocket):
        self.ws = ws
        self.outbox = protocol.Outbox()
        self.wakeup = asyncio.Event()
        self.lagging = False
        self.is_driver = False


def create_app(
    config: Optional[EngineConfig] = None,
    seed: int = 0,
    scenario_path: Optional[str] = None,
    ui_dir: Optional[str] = None,
    pattern: Optional[DrumPattern] = None,
) -> FastAPI:
    cfg = config if config is not None else EngineConfig.default()
    session = LiveSession(cfg, seed=seed, pattern=pattern)
    if scenario_path is not None:
        scenario, duration_s = scenario_from_file(scenario_path)
        session.reset(scenario, duration_s)

    clients: set[_Client] = set()
    driver: list[Optional[_Client]] = [None]
    pending_load: list[Optional[str]] = [None]

    def broadcast(frame: dict) -> None:
        for client in clients:
            if client.lagging:
                continue
            if not client.outbox.push(frame):
                client.lagging = True
            client.wakeup.set()

    async def tick_loop() -> None:
        period = 1.0 / session.tick_hz
        loop = asyncio.get_running_loop()
        next_at = loop.time() + period
        while True:
            delay = next_at - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                await asyncio.sleep(0)  # behind schedule: still yield
            next_at += period
            if pending_load[0] is not None:
                path = pending_load[0]
                pending_load[0] = None
                try:
                    scenario, duration_s = scenario_from_file(path)
                except (OSError, ValueError, KeyError) as exc:
                    broadcast(protocol.error_frame("bad_scenario", str(exc)))
                else:
                    session.reset(scenario, duration_s)
            state, beats = session.tick()
            for frame in beats:
                broadcast(frame)
            if state is not None:
                broadcast(state)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(tick_loop())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(lifespan=lifespan)

    @app.get("/healthz", response_class=PlainTextResponse)
    async def healthz() -> str:
        return "ok"

    async def sender(client: _Client) -> None:
        while True:
            await client.wakeup.wait()
            client.wakeup.clear()
            for frame in client.outbox.drain():
                await client.ws.send_json(frame)
            if client.lagging:
                await client.ws.send_json(
                    protocol.error_frame("lagging", "outbound queue overflow")
                )
                await client.ws.close()
                return

    def handle(client: _Client, msg: protocol.ClientMessage) -> Optional[dict]:
        """Returns an immediate reply frame, or None."""
        if isinstance(msg, protocol.Ping):
            return protocol.pong_frame()
        if isinstance(msg, protocol.LoadScenario):
            pending_load[0] = msg.path
            return None
        if session.scenario_active:
            return protocol.error_frame(
                "scenario_active", "interactive input ignored during a scripted session"
            )
        if isinstance(msg, protocol.Control):
            if driver[0] is None:
                driver[0] = client
                client.is_driver = True
            if driver[0] is not client:
                return protocol.error_frame("not_driver", "another client is driving")
            session.latest_control = msg
            return None
        if isinstance(msg, protocol.Button):
            session.pending_buttons += 1
            return None
        if isinstance(msg, protocol.SetMode):
            session.engine.state = replace(session.engine.state, mode=msg.mode)
            return None
        return protocol.error_frame("bad_msg", "unsupported message")

    @app.websocket("/session")
    async def session_ws(ws: WebSocket) -> None:
        await ws.accept()
        client = _Client(ws)
        clients.add(client)
        send_task = asyncio.create_task(sender(client))
        try:
            while True:
                raw = await ws.receive_text()
                msg = protocol.decode_client(raw)
                if msg is None:
                    await ws.send_json(
                        protocol.error_frame("bad_msg", "malformed client message")
                    )
                    continue
                reply = handle(client, msg)
                if reply is not None:
                    await ws.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            clients.discard(client)
            if driver[0] is client:
                driver[0] = None
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(
    app: FastAPI, host: str = "127.0.0.1", port: int = DEFAULT_PORT
) -> None:  # pragma: no cover - exercised manually via the CLI
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")

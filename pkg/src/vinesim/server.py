"""Websocket teleoperation service.

One server process hosts one session on one course. The simulation loop is
a single asyncio task owning all mutable state; websocket handlers only
latch inputs and receive immutable snapshots, so no locking is needed.

The first client to join with mode "operate" becomes the operator; everyone
else is read-only. If the operator's socket drops, the session e-stops on
the next tick (fail closed, like the solenoid on power loss) until an
explicit estop_clear.

Wire protocol (text frames, JSON):
  client -> server: {"type":"join","mode":"operate"|"observe"}
                    {"type":"input", "q"|"bend":..., "r_p":..., "r_m":...,
                     "d":-1|1, "estop":bool}
                    {"type":"estop_clear"}
  server -> client: {"type":"joined", ...}, {"type":"state", <snapshot>},
                    {"type":"event", ...}, {"type":"score", ...},
                    {"type":"error","reason":...}
State frames go out at a tick-decimated rate (default 25 Hz).
"""

from __future__ import annotations

import asyncio
import contextlib
import json
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from vinesim.errors import VinesimError
from vinesim.scenario import (
    Course,
    builtin_course_names,
    score_run,
    serialize_course,
)
from vinesim.session import Session

DEFAULT_SNAPSHOT_HZ = 25.0


class SessionHub:
    """Owns the session, its clock, and the connected clients."""

    def __init__(
        self,
        course: Course,
        tick_hz: float,
        snapshot_hz: float = DEFAULT_SNAPSHOT_HZ,
        realtime: bool = True,
    ):
        self.session = Session(course, tick_hz)
        self.decimation = max(1, round(tick_hz / snapshot_hz))
        self.realtime = realtime
        self.operator: WebSocket | None = None
        self.clients: set[WebSocket] = set()
        self.running = False
        self._task: asyncio.Task | None = None

    # ------------------------------------------------------------- lifecycle

    async def start(self) -> None:
        self.running = True
        self._task = asyncio.create_task(self._sim_loop())

    async def stop(self) -> None:
        self.running = False
        if self._task is not None:
            self._task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._task

    async def _sim_loop(self) -> None:
        loop = asyncio.get_running_loop()
        dt = self.session.dt
        next_deadline = loop.time() + dt
        while self.running:
            self.session.tick()
            await self._publish()
            if self.realtime:
                delay = next_deadline - loop.time()
                next_deadline += dt
                await asyncio.sleep(max(0.0, delay))
            else:
                await asyncio.sleep(0)

    async def _publish(self) -> None:
        session = self.session
        messages = []
        scoring_events = False
        for e in session.last_events:
            messages.append(
                {
                    "type": "event",
                    "kind": e.kind,
                    "tick": e.tick,
                    "position": list(e.position),
                    "id": e.ident,
                }
            )
            if e.kind in ("GoalReached", "CylinderToppled"):
                scoring_events = True
        if session.tick_no % self.decimation == 0:
            messages.append({"type": "state", **session.snapshot().to_dict()})
        if scoring_events:
            try:
                breakdown = score_run(session.record, session.course)
                messages.append({"type": "score", **breakdown})
            except VinesimError:
                pass
        if not messages or not self.clients:
            return
        payloads = [json.dumps(m) for m in messages]
        dead = []
        for ws in list(self.clients):
            try:
                for p in payloads:
                    await ws.send_text(p)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self._drop(ws)

    # --------------------------------------------------------------- clients

    def _drop(self, ws: WebSocket) -> None:
        self.clients.discard(ws)
        if ws is self.operator:
            self.operator = None
            self.session.notify_disconnect()

    async def handle(self, ws: WebSocket) -> None:
        await ws.accept()
        self.clients.add(ws)
        mode = "observe"
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(
                        json.dumps({"type": "error", "reason": "frame is not JSON"})
                    )
                    continue
                kind = msg.get("type")
                if kind == "join":
                    want = msg.get("mode", "observe")
                    if want == "operate" and self.operator is None:
                        self.operator = ws
                        mode = "operate"
                    else:
                        mode = "observe"
                    await ws.send_text(
                        json.dumps(
                            {
                                "type": "joined",
                                "mode": mode,
                                "course": self.session.course.name,
                                "tick_hz": self.session.tick_hz,
                            }
                        )
                    )
                elif kind == "input":
                    if ws is not self.operator:
                        await ws.send_text(
                            json.dumps({"type": "error", "reason": "read-only client"})
                        )
                        continue
                    try:
                        self.session.apply_input(msg)
                    except VinesimError as exc:
                        await ws.send_text(
                            json.dumps({"type": "error", "reason": str(exc)})
                        )
                elif kind == "estop_clear":
                    if ws is self.operator:
                        self.session.estop_clear()
                    else:
                        await ws.send_text(
                            json.dumps({"type": "error", "reason": "read-only client"})
                        )
                else:
                    await ws.send_text(
                        json.dumps({"type": "error", "reason": f"unknown type {kind!r}"})
                    )
        except WebSocketDisconnect:
            pass
        finally:
            self._drop(ws)


def create_app(
    course: Course,
    tick_hz: float = 50.0,
    snapshot_hz: float = DEFAULT_SNAPSHOT_HZ,
    ui_dir: str | None = None,
    realtime: bool = True,
) -> FastAPI:
    hub = SessionHub(course, tick_hz, snapshot_hz, realtime=realtime)

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        await hub.start()
        try:
            yield
        finally:
            await hub.stop()

    app = FastAPI(title="vinesim teleop service", lifespan=lifespan)
    app.state.hub = hub

    @app.get("/courses")
    def courses() -> dict:
        return {"builtin": list(builtin_course_names())}

    @app.get("/course")
    def course_doc() -> dict:
        return serialize_course(hub.session.course)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await hub.handle(ws)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app

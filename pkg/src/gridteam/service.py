"""Network boundary for live episodes.

One WebSocket connection hosts one episode. The client opens with HELLO
(problem id + mode), then commands rooms and, in train mode, answers one
LABEL_REQUEST per robot move. The server owns all state: it streams a
STATE message after every applied action, paces robot moves with the
configured delay, and persists the finished trace.

Plain HTTP on the same port: GET /problems lists hosted problems,
GET /health answers 200.
"""
from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass
from http import HTTPStatus
from typing import Optional

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .datakit import ProblemSet, TraceStore, state_to_doc, action_to_doc
from .episode import EpisodeEngine, Outcome, TraceSource
from .errors import IllegalAction, MalformedMessage
from .gridworld import Problem

MESSAGE_TYPES = {
    "HELLO",
    "STATE",
    "COMMAND",
    "LABEL_REQUEST",
    "LABEL_RESPONSE",
    "EPISODE_END",
    "ERROR",
}

DEFAULT_DELAY_MS = 1000
DEFAULT_TIMEOUT_S = 120.0


@dataclass(frozen=True)
class SessionMessage:
    type: str
    payload: dict
    seq: int


def validate_message(raw) -> SessionMessage:
    """Parse and schema-check one wire frame. Raises MalformedMessage."""
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedMessage(f"parse: not UTF-8 ({exc})") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"parse: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedMessage("message must be a JSON object")
    mtype = doc.get("type")
    if mtype not in MESSAGE_TYPES:
        raise MalformedMessage(f"unknown type {mtype!r}")
    if "seq" not in doc:
        raise MalformedMessage("seq required")
    seq = doc["seq"]
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 1:
        raise MalformedMessage("seq must be a positive integer")
    payload = doc.get("payload", {})
    if not isinstance(payload, dict):
        raise MalformedMessage("payload must be an object")
    return SessionMessage(type=mtype, payload=payload, seq=seq)


def _human_grid_doc(problem: Problem) -> dict:
    """Map payload for clients: the human view only, hidden cells withheld."""
    m = problem.map
    return {
        "width": m.width,
        "height": m.height,
        "visible": sorted([list(c) for c in m.visible_obstacles]),
        "rooms": [{"id": rid, "cell": list(cell)} for rid, cell in m.rooms],
        "robot_start": list(m.robot_start),
        "goal": sorted(problem.goal),
    }


class _Session:
    def __init__(self, service: "SessionService", connection):
        self.service = service
        self.conn = connection
        self.out_seq = 0
        self.in_seq = 0
        self.engine: Optional[EpisodeEngine] = None
        self.mode = "play"
        self.problem_id = None
        self.awaiting_label_event = None
        self.next_event_id = 0
        self.wake = asyncio.Event()
        self.finished = False
        self.persisted_id: Optional[str] = None

    async def send(self, mtype: str, payload: dict):
        self.out_seq += 1
        await self.conn.send(
            json.dumps({"type": mtype, "payload": payload, "seq": self.out_seq}, sort_keys=True)
        )

    async def send_state(self, state):
        doc = state_to_doc(state)
        doc["grid_delta"] = {}  # static maps: reserved for future use
        await self.send("STATE", doc)

    async def error(self, reason: str, fatal: bool):
        try:
            await self.send("ERROR", {"reason": reason, "fatal": fatal})
        except ConnectionClosed:
            pass

    def _next_inbound(self, raw) -> SessionMessage:
        msg = validate_message(raw)
        if msg.seq != self.in_seq + 1:
            raise MalformedMessage(f"seq gap: expected {self.in_seq + 1}, got {msg.seq}")
        self.in_seq = msg.seq
        return msg

    async def run(self):
        try:
            raw = await asyncio.wait_for(self.conn.recv(), self.service.timeout_s)
            hello = self._next_inbound(raw)
            if hello.type != "HELLO":
                raise MalformedMessage(f"expected HELLO first, got {hello.type}")
            self.problem_id = hello.payload.get("problem_id")
            self.mode = hello.payload.get("mode", "play")
            if self.mode not in ("train", "play"):
                raise MalformedMessage(f"unknown mode {self.mode!r}")
            problem = self.service.problems.get(self.problem_id)
            self.engine = EpisodeEngine(
                problem,
                problem_ref=self.problem_id,
                collect_labels=(self.mode == "train"),
            )
            await self.send(
                "HELLO",
                {
                    "problem_id": self.problem_id,
                    "mode": self.mode,
                    "grid": _human_grid_doc(problem),
                    "state": state_to_doc(self.engine.state),
                    "delay_ms": self.service.delay_ms,
                },
            )
            robot = asyncio.create_task(self._robot_loop())
            try:
                await self._recv_loop()
            finally:
                robot.cancel()
                try:
                    await robot
                except (asyncio.CancelledError, ConnectionClosed):
                    pass
        except KeyError:
            await self.error(f"unknown problem {self.problem_id!r}", fatal=True)
            await self._finish(Outcome.ABORTED, announce=False)
        except MalformedMessage as exc:
            await self.error(str(exc), fatal=True)
            await self._finish(Outcome.ABORTED, announce=False)
        except asyncio.TimeoutError:
            await self._finish(Outcome.ABORTED, announce=True)
        except ConnectionClosed:
            await self._finish(Outcome.ABORTED, announce=False)
        finally:
            try:
                await self.conn.close()
            except ConnectionClosed:
                pass

    async def _recv_loop(self):
        while not self.finished:
            raw = await asyncio.wait_for(self.conn.recv(), self.service.timeout_s)
            msg = self._next_inbound(raw)
            if msg.type == "COMMAND":
                await self._on_command(msg)
            elif msg.type == "LABEL_RESPONSE":
                await self._on_label(msg)
            elif msg.type == "HELLO":
                raise MalformedMessage("HELLO after handshake")
            else:
                raise MalformedMessage(f"client cannot send {msg.type}")

    async def _on_command(self, msg: SessionMessage):
        room = msg.payload.get("room")
        if not isinstance(room, int):
            raise MalformedMessage("COMMAND payload needs an integer 'room'")
        try:
            event = self.engine.offer_command(room)
        except IllegalAction as exc:
            await self.error(str(exc), fatal=False)
            return
        await self.send_state(event.state_after)
        self.wake.set()

    async def _on_label(self, msg: SessionMessage):
        event_id = msg.payload.get("event_id")
        explicable = msg.payload.get("explicable")
        if self.awaiting_label_event is None:
            raise MalformedMessage("no LABEL_REQUEST pending")
        pending_id, event = self.awaiting_label_event
        if event_id != pending_id:
            raise MalformedMessage(f"LABEL_RESPONSE for {event_id!r}, expected {pending_id}")
        if not isinstance(explicable, bool):
            raise MalformedMessage("LABEL_RESPONSE needs a boolean 'explicable'")
        self.engine.set_label(event, explicable)
        self.awaiting_label_event = None
        self.wake.set()

    async def _robot_loop(self):
        engine = self.engine
        while True:
            if self.awaiting_label_event is not None:
                # a pending judgment blocks everything, including completion
                self.wake.clear()
                await self.wake.wait()
                continue
            if engine.done:
                await self._finish(Outcome.COMPLETED, announce=True)
                return
            if engine.over_budget:
                await self._finish(Outcome.ABORTED, announce=True)
                return
            if engine.state.current_command is None:
                self.wake.clear()
                await self.wake.wait()
                continue
            event = engine.robot_step()
            if event is None:
                continue
            await self.send_state(event.state_after)
            if self.mode == "train":
                event_id = self.next_event_id
                self.next_event_id += 1
                self.awaiting_label_event = (event_id, event)
                await self.send("LABEL_REQUEST", {"event_id": event_id, "action": action_to_doc(event.action)})
            if self.service.delay_ms:
                await asyncio.sleep(self.service.delay_ms / 1000.0)

    async def _finish(self, outcome: Outcome, announce: bool):
        if self.finished:
            return
        self.finished = True
        trace_id = None
        if self.engine is not None:
            trace = self.engine.build_trace(outcome, TraceSource.HUMAN_LIVE)
            trace_id = self.service.trace_store.save(trace)
            self.persisted_id = trace_id
        if announce:
            try:
                await self.send("EPISODE_END", {"outcome": outcome.value, "trace_id": trace_id})
            except ConnectionClosed:
                pass
        self.service._session_finished(self)
        try:
            await self.conn.close()
        except ConnectionClosed:
            pass


class SessionService:
    """Hosts episodes over WebSocket plus two plain-HTTP endpoints."""

    def __init__(
        self,
        problems: ProblemSet,
        trace_store: TraceStore,
        delay_ms: int = DEFAULT_DELAY_MS,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        single_session: bool = False,
    ):
        self.problems = problems
        self.trace_store = trace_store
        self.delay_ms = delay_ms
        self.timeout_s = timeout_s
        self.single_session = single_session
        self.last_trace_id: Optional[str] = None
        self._stop: Optional[asyncio.Event] = None  # created inside serve()

    def _session_finished(self, session: _Session):
        self.last_trace_id = session.persisted_id or self.last_trace_id
        if self.single_session and session.engine is not None and self._stop is not None:
            self._stop.set()

    def _process_request(self, connection, request):
        if request.path == "/health":
            return connection.respond(HTTPStatus.OK, "ok\n")
        if request.path == "/problems":
            body = json.dumps(
                {
                    "problems": [
                        {"id": pid, "grid": _human_grid_doc(problem)}
                        for pid, problem in self.problems
                    ]
                },
                sort_keys=True,
            )
            response = connection.respond(HTTPStatus.OK, body + "\n")
            response.headers["Content-Type"] = "application/json"
            return response
        if request.headers.get("Upgrade", "").lower() != "websocket":
            return connection.respond(HTTPStatus.NOT_FOUND, "not found\n")
        return None  # continue with the WebSocket handshake

    async def _handler(self, connection):
        await _Session(self, connection).run()

    async def serve(self, host: str = "127.0.0.1", port: int = 8765, ready=None):
        """Run until cancelled (or after one episode in single-session mode)."""
        self._stop = asyncio.Event()
        async with ws_serve(
            self._handler, host, port, process_request=self._process_request
        ) as server:
            bound = server.sockets[0].getsockname()[1]
            if ready is not None:
                ready.set_result(bound)
            await self._stop.wait()


def run_service(
    problems: ProblemSet,
    trace_dir,
    host: str = "127.0.0.1",
    port: int = 8765,
    delay_ms: int = DEFAULT_DELAY_MS,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    single_session: bool = False,
) -> Optional[str]:
    """Blocking entry point used by the CLI. Returns the last trace id."""
    service = SessionService(
        problems,
        TraceStore(trace_dir),
        delay_ms=delay_ms,
        timeout_s=timeout_s,
        single_session=single_session,
    )

    async def main():
        loop = asyncio.get_running_loop()
        ready = loop.create_future()
        task = asyncio.create_task(service.serve(host=host, port=port, ready=ready))
        bound = await ready
        print(f"serving on ws://{host}:{bound} (problems: {', '.join(problems.ids())})", flush=True)
        try:
            await task
        except asyncio.CancelledError:
            pass

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return service.last_trace_id

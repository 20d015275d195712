"""WebSocket bridge: serves the topic bus to any number of viewers at
ws://host:port/bridge, one JSON envelope per text frame.

Sessions never block the publisher: each one owns a bounded drop-oldest
outbox (depth 16) drained by its own writer task; drops are counted and
surfaced on /status. The bus itself is only touched from the event loop,
which is the single-owner contract it needs. Binds localhost by default and
never opens an outbound connection.
"""
from __future__ import annotations

import asyncio
from collections import deque
from typing import Optional

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed
from websockets.http11 import Response
from websockets.datastructures import Headers

from .bus import SchemaMismatch, TopicBus, UnknownTopic
from .protocol import (
    ProtocolError,
    Session,
    canonical_dumps,
    decode_frame,
    error_frame,
    handle,
)

OUTBOX_DEPTH = 16
BRIDGE_PATH = "/bridge"


class Outbox:
    """Bounded drop-oldest frame queue between the bus and one socket."""

    def __init__(self, depth: int = OUTBOX_DEPTH):
        self.depth = depth
        self.dropped = 0
        self._frames: deque = deque()
        self._wakeup = asyncio.Event()

    def put(self, text: str) -> None:
        if len(self._frames) >= self.depth:
            self._frames.popleft()
            self.dropped += 1
        self._frames.append(text)
        self._wakeup.set()

    async def get(self) -> str:
        while not self._frames:
            self._wakeup.clear()
            await self._wakeup.wait()
        return self._frames.popleft()


class BridgeServer:
    def __init__(
        self,
        bus: TopicBus,
        host: str = "127.0.0.1",
        port: int = 8765,
        client_publish_allowed: bool = True,
        static_pages: Optional[dict] = None,
    ):
        self.bus = bus
        self.host = host
        self.port = port
        self.client_publish_allowed = client_publish_allowed
        self.static_pages = static_pages or {}
        self.sessions: set = set()
        self._server = None

    # -------------------------------------------------------------- lifecycle

    async def start(self) -> None:
        self._server = await serve(
            self._session_main,
            self.host,
            self.port,
            process_request=self._process_request,
        )

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    def dropped_total(self) -> int:
        return sum(outbox.dropped for _, outbox in self.sessions)

    def publish_status(self, msg: str = "ok", **extra) -> None:
        self.bus.publish("/status", "Status", {
            "level": "info",
            "msg": msg,
            "clock": self.bus.now(),
            "clients": len(self.sessions),
            "dropped": self.dropped_total(),
            **extra,
        })

    # ---------------------------------------------------------------- serving

    def _process_request(self, connection, request):
        if request.path == BRIDGE_PATH:
            return None  # proceed with the WebSocket handshake
        page = self.static_pages.get(request.path)
        if page is None:
            return Response(404, "Not Found", Headers(),
                            f"no such page {request.path!r}; the bridge lives at "
                            f"{BRIDGE_PATH}\n".encode())
        body, content_type = page
        return Response(200, "OK", Headers([("Content-Type", content_type)]), body)

    async def _session_main(self, websocket) -> None:
        outbox = Outbox()
        session = Session(lambda obj: outbox.put(canonical_dumps(obj)))
        entry = (session, outbox)
        self.sessions.add(entry)
        writer = asyncio.create_task(self._writer(websocket, outbox))
        try:
            async for message in websocket:
                self._handle_text(message, session)
        except ConnectionClosed:
            pass
        finally:
            writer.cancel()
            session.drop_all(self.bus)
            self.sessions.discard(entry)

    async def _writer(self, websocket, outbox: Outbox) -> None:
        try:
            while True:
                await websocket.send(await outbox.get())
        except (ConnectionClosed, asyncio.CancelledError):
            pass

    def _handle_text(self, message, session: Session) -> None:
        """Decode and apply one frame; malformed input always gets a status
        error back, never silence."""
        if isinstance(message, bytes):
            message = message.decode("utf-8", errors="replace")
        try:
            frame = decode_frame(message)
        except ProtocolError as exc:
            session.send(error_frame(exc.code, str(exc), exc.frame_id))
            return
        try:
            handle(frame, session, self.bus, self.client_publish_allowed)
        except UnknownTopic as exc:
            session.send(error_frame("UnknownTopic", str(exc), frame.id))
        except SchemaMismatch as exc:
            session.send(error_frame("SchemaMismatch", str(exc), frame.id))

"""Bidirectional ordered text channels the session engine runs over.

The engine only needs three awaitables: send, recv, close.  Adapters exist
for an in-memory pair (tests), a server-side Starlette/FastAPI WebSocket,
and a client-side ``websockets`` connection.
"""

from __future__ import annotations

import asyncio
from typing import Protocol, runtime_checkable


class TransportClosedError(ConnectionError):
    """The peer hung up or the channel was closed locally."""


@runtime_checkable
class Transport(Protocol):
    async def send(self, text: str) -> None: ...

    async def recv(self) -> str: ...

    async def close(self) -> None: ...


_EOF = object()


class MemoryTransport:
    """One end of an in-process ordered channel; create both via pair()."""

    def __init__(self, inbox: asyncio.Queue, outbox: asyncio.Queue, state: dict):
        self._inbox = inbox
        self._outbox = outbox
        self._state = state
        self._key = id(self)
        state[self._key] = False

    @classmethod
    def pair(cls) -> tuple["MemoryTransport", "MemoryTransport"]:
        a_to_b: asyncio.Queue = asyncio.Queue()
        b_to_a: asyncio.Queue = asyncio.Queue()
        state: dict = {}
        a = cls(b_to_a, a_to_b, state)
        b = cls(a_to_b, b_to_a, state)
        a._peer_key = b._key  # type: ignore[attr-defined]
        b._peer_key = a._key  # type: ignore[attr-defined]
        return a, b

    def _closed(self) -> bool:
        return self._state[self._key] or self._state[self._peer_key]  # type: ignore[attr-defined]

    async def send(self, text: str) -> None:
        if self._closed():
            raise TransportClosedError("memory transport closed")
        self._outbox.put_nowait(text)

    async def recv(self) -> str:
        if self._state[self._key]:
            raise TransportClosedError("memory transport closed")
        item = await self._inbox.get()
        if item is _EOF:
            self._state[self._key] = True
            raise TransportClosedError("peer closed")
        return item

    async def close(self) -> None:
        if not self._state[self._key]:
            self._state[self._key] = True
            self._outbox.put_nowait(_EOF)
            self._inbox.put_nowait(_EOF)


class StarletteWebSocketTransport:
    """Adapter over a FastAPI/Starlette server-side WebSocket."""

    def __init__(self, websocket):
        self._ws = websocket

    async def send(self, text: str) -> None:
        try:
            await self._ws.send_text(text)
        except Exception as exc:
            raise TransportClosedError(str(exc)) from exc

    async def recv(self) -> str:
        from starlette.websockets import WebSocketDisconnect

        try:
            return await self._ws.receive_text()
        except WebSocketDisconnect as exc:
            raise TransportClosedError(f"websocket disconnect: {exc.code}") from exc
        except RuntimeError as exc:
            raise TransportClosedError(str(exc)) from exc

    async def close(self) -> None:
        try:
            await self._ws.close()
        except Exception:
            pass


class WebsocketsClientTransport:
    """Adapter over a ``websockets`` client connection."""

    def __init__(self, connection):
        self._conn = connection

    async def send(self, text: str) -> None:
        import websockets

        try:
            await self._conn.send(text)
        except websockets.exceptions.ConnectionClosed as exc:
            raise TransportClosedError(str(exc)) from exc

    async def recv(self) -> str:
        import websockets

        try:
            frame = await self._conn.recv()
        except websockets.exceptions.ConnectionClosed as exc:
            raise TransportClosedError(str(exc)) from exc
        if isinstance(frame, bytes):
            return frame.decode("utf-8", errors="replace")
        return frame

    async def close(self) -> None:
        try:
            await self._conn.close()
        except Exception:
            pass

"""Server-side session engine.

Owns the handshake, the correlation table, timeouts, and the lifecycle
AwaitingHello -> Ready -> Closed.  One reader task demultiplexes inbound
frames; any number of concurrent callers may have calls in flight, matched
strictly by correlation id.
"""

from __future__ import annotations

import asyncio
import logging
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .protocol import (
    SUPPORTED_VERSIONS,
    Capabilities,
    Envelope,
    ErrorCode,
    MalformedMessageError,
    MessageKind,
    UnsupportedVersionError,
    bye_envelope,
    decode_envelope,
    encode_envelope,
    error_envelope,
    hello_ack_envelope,
    negotiate_version,
    parse_error_code,
    tool_call_envelope,
    validate_capabilities,
)
from .transcript import Transcript
from .transport import Transport, TransportClosedError

logger = logging.getLogger(__name__)

DEFAULT_HANDSHAKE_TIMEOUT_S = 10.0
DEFAULT_TOOL_TIMEOUT_S = 30.0
DEFAULT_READ_TIMEOUT_S = 120.0


class SessionState(Enum):
    AWAITING_HELLO = "AwaitingHello"
    READY = "Ready"
    CLOSED = "Closed"


class SessionClosedError(Exception):
    """Set on pending calls when the session closes under them."""


@dataclass
class SessionConfig:
    handshake_timeout_s: float = DEFAULT_HANDSHAKE_TIMEOUT_S
    default_timeout_s: float = DEFAULT_TOOL_TIMEOUT_S
    read_timeout_s: float = DEFAULT_READ_TIMEOUT_S
    supported_versions: tuple[str, ...] = SUPPORTED_VERSIONS
    log_dir: Path | None = None


@dataclass
class CallOutcome:
    """Result of one tool call: a value, or a coded failure."""

    value: Any = None
    code: ErrorCode | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.code is None

    @classmethod
    def of(cls, value: Any) -> "CallOutcome":
        return cls(value=value)

    @classmethod
    def failure(cls, code: ErrorCode, message: str) -> "CallOutcome":
        return cls(code=code, message=message)


@dataclass
class _Pending:
    tool: str
    future: asyncio.Future = field(repr=False)


class Session:
    """One client connection: handshake result, correlation table, transcript."""

    def __init__(self, transport: Transport, config: SessionConfig | None = None):
        self._transport = transport
        self.config = config or SessionConfig()
        self.session_id = uuid.uuid4().hex[:12]
        self.state = SessionState.AWAITING_HELLO
        self.state_history: list[SessionState] = [SessionState.AWAITING_HELLO]
        self.capabilities: Capabilities | None = None
        self.handshake_error: ErrorCode | None = None
        self.close_reason = ""
        self.transcript = Transcript()
        self.transcript_path: Path | None = None
        self._pending: dict[str, _Pending] = {}
        self._next_id = 1
        self._send_lock = asyncio.Lock()
        self._reader_task: asyncio.Task | None = None
        self._closed = asyncio.Event()

    # --- lifecycle ---

    def _set_state(self, state: SessionState) -> None:
        if state is not self.state:
            self.state = state
            self.state_history.append(state)

    async def _handshake(self) -> None:
        try:
            text = await asyncio.wait_for(
                self._transport.recv(), self.config.handshake_timeout_s
            )
        except asyncio.TimeoutError:
            self.handshake_error = ErrorCode.CONNECTION_CLOSED
            await self.close("handshake timeout", send_bye=False)
            return
        except TransportClosedError:
            self.handshake_error = ErrorCode.CONNECTION_CLOSED
            await self.close("transport closed during handshake", send_bye=False)
            return

        try:
            hello = self._decode_inbound(text)
            if hello is None:
                raise MalformedMessageError("first frame is not a valid envelope")
            if hello.kind is not MessageKind.HELLO:
                raise MalformedMessageError(
                    f"first frame must be hello, got {hello.kind.value}"
                )
            caps = Capabilities.from_payload(hello.payload)
            negotiate_version(
                caps.protocol_version, list(self.config.supported_versions)
            )
            violations = validate_capabilities(caps)
            if violations:
                raise MalformedMessageError(
                    "invalid capabilities: " + "; ".join(violations)
                )
        except UnsupportedVersionError as exc:
            await self._reject_handshake(exc.code, exc.message)
            return
        except MalformedMessageError as exc:
            await self._reject_handshake(exc.code, exc.message)
            return

        self.capabilities = caps
        await self._send(
            hello_ack_envelope(caps.protocol_version, self.session_id)
        )
        self._set_state(SessionState.READY)
        self._reader_task = asyncio.create_task(
            self._read_loop(), name=f"xarp-session-{self.session_id}"
        )

    async def _reject_handshake(self, code: ErrorCode, message: str) -> None:
        self.handshake_error = code
        try:
            await self._send(error_envelope(code, message))
        except TransportClosedError:
            pass
        await self.close(f"handshake rejected: {code.value}", send_bye=False)

    def _decode_inbound(self, text: str) -> Envelope | None:
        """Decode and record one inbound frame; None means malformed."""
        try:
            env = decode_envelope(text)
        except MalformedMessageError:
            self.transcript.record("received", None, raw=_clip(text))
            return None
        self.transcript.record("received", _envelope_obj(env))
        return env

    async def _read_loop(self) -> None:
        try:
            while True:
                text = await self._transport.recv()
                await self._dispatch(text)
                if self.state is SessionState.CLOSED:
                    return
        except TransportClosedError:
            await self.close("transport closed", send_bye=False, from_reader=True)
        except asyncio.CancelledError:
            raise
        except Exception:
            logger.exception("session %s reader failed", self.session_id)
            await self.close("internal reader error", send_bye=False, from_reader=True)

    async def _dispatch(self, text: str) -> None:
        env = self._decode_inbound(text)
        if env is None:
            try:
                await self._send(
                    error_envelope(ErrorCode.MALFORMED_MESSAGE, "undecodable frame")
                )
            except TransportClosedError:
                pass
            return

        if env.kind is MessageKind.TOOL_RESULT:
            pending = self._pending.pop(env.id, None)
            if pending is None:
                # late or unknown results are logged and dropped, never delivered
                self.transcript.note(f"dropped tool_result id={env.id} (no pending call)")
                logger.info(
                    "session %s: dropping late/unknown result id=%s",
                    self.session_id,
                    env.id,
                )
                return
            if not pending.future.done():
                pending.future.set_result(env.payload)
            return

        if env.kind is MessageKind.BYE:
            reason = env.payload.get("reason", "")
            await self.close(
                f"peer bye: {reason}", send_bye=False, from_reader=True
            )
            return

        if env.kind is MessageKind.ERROR:
            self.transcript.note(
                "peer error: "
                f"{env.payload.get('code')}: {env.payload.get('message')}"
            )
            return

        # hello/hello_ack/tool_call are protocol violations on the server side
        try:
            await self._send(
                error_envelope(
                    ErrorCode.MALFORMED_MESSAGE,
                    f"unexpected {env.kind.value} frame",
                )
            )
        except TransportClosedError:
            pass

    async def _send(self, env: Envelope) -> None:
        text = encode_envelope(env)
        async with self._send_lock:
            await self._transport.send(text)
            self.transcript.record("sent", _envelope_obj(env))

    # --- calls ---

    def _resolve_timeout(self, tool: str, timeout: float | None) -> float:
        if timeout is not None:
            return timeout
        if tool == "read":
            return self.config.read_timeout_s
        return self.config.default_timeout_s

    async def call_tool(
        self,
        tool: str,
        args: dict[str, Any] | None = None,
        *,
        timeout: float | None = None,
    ) -> CallOutcome:
        """Invoke one tool on the client and await its correlated result.

        Unsupported tools are rejected locally without emitting a frame.
        Multiple calls may be in flight; results match by id, not order.
        """
        if self.state is not SessionState.READY:
            return CallOutcome.failure(
                ErrorCode.CONNECTION_CLOSED,
                f"session is {self.state.value}, not Ready",
            )
        assert self.capabilities is not None
        if self.capabilities.find(tool) is None:
            return CallOutcome.failure(
                ErrorCode.TOOL_NOT_SUPPORTED,
                f"client did not declare tool {tool!r}",
            )

        call_id = str(self._next_id)
        self._next_id += 1
        future: asyncio.Future = asyncio.get_running_loop().create_future()
        self._pending[call_id] = _Pending(tool, future)

        try:
            await self._send(tool_call_envelope(call_id, tool, args or {}))
        except TransportClosedError:
            self._pending.pop(call_id, None)
            return CallOutcome.failure(
                ErrorCode.CONNECTION_CLOSED, "transport closed while sending"
            )

        effective = self._resolve_timeout(tool, timeout)
        try:
            payload = await asyncio.wait_for(future, effective)
        except asyncio.TimeoutError:
            self._pending.pop(call_id, None)
            self.transcript.note(
                f"call {call_id} ({tool}) timed out after {effective}s; "
                "a late result will be dropped"
            )
            return CallOutcome.failure(
                ErrorCode.TOOL_TIMEOUT,
                f"{tool} call {call_id} timed out after {effective}s",
            )
        except SessionClosedError:
            return CallOutcome.failure(
                ErrorCode.CONNECTION_CLOSED, f"session closed: {self.close_reason}"
            )
        return _outcome_from_payload(payload)

    # --- teardown ---

    async def close(
        self,
        reason: str = "closed",
        *,
        send_bye: bool = True,
        from_reader: bool = False,
    ) -> None:
        """Idempotent teardown: drain pending calls, flush the transcript."""
        if self.state is SessionState.CLOSED:
            return
        self._set_state(SessionState.CLOSED)
        self.close_reason = reason

        if send_bye:
            try:
                await self._send(bye_envelope(reason))
            except TransportClosedError:
                pass

        if self._reader_task is not None and not from_reader:
            self._reader_task.cancel()
            try:
                await self._reader_task
            except (asyncio.CancelledError, Exception):
                pass
            self._reader_task = None

        # every pending call resolves exactly once, with CONNECTION_CLOSED
        pending, self._pending = self._pending, {}
        for record in pending.values():
            if not record.future.done():
                record.future.set_exception(SessionClosedError(reason))

        await self._transport.close()
        self.transcript.note(f"session closed: {reason}")
        if self.config.log_dir is not None:
            self.transcript_path = self.transcript.write(
                Path(self.config.log_dir) / f"{self.session_id}.jsonl"
            )
        self._closed.set()

    async def wait_closed(self) -> None:
        await self._closed.wait()

    @property
    def pending_count(self) -> int:
        return len(self._pending)


def _clip(text: str, limit: int = 512) -> str:
    return text if len(text) <= limit else text[:limit] + "..."


def _envelope_obj(env: Envelope) -> dict[str, Any]:
    obj: dict[str, Any] = {"kind": env.kind.value}
    if env.id:
        obj["id"] = env.id
    obj["payload"] = env.payload
    return obj


def _outcome_from_payload(payload: dict[str, Any]) -> CallOutcome:
    if payload.get("ok"):
        return CallOutcome.of(payload.get("value"))
    err = payload.get("error") or {}
    code, original = parse_error_code(err.get("code", ""))
    message = err.get("message", "")
    if original:
        message = f"[{original}] {message}"
    return CallOutcome.failure(code, message)


async def open_session(
    transport: Transport, config: SessionConfig | None = None
) -> Session:
    """Perform the server side of the handshake on a connected transport.

    Always returns a Session; a failed handshake yields state Closed with
    ``handshake_error`` set (an error frame has already been sent).
    """
    session = Session(transport, config)
    await session._handshake()
    return session


async def close_session(session: Session, reason: str = "closed") -> None:
    await session.close(reason)

"""Headless scripted client for testing servers.

A script declares the capabilities to announce plus an ordered rule list;
the first matching rule answers each incoming tool call.  Rules can inject
faults: stay silent, cancel, report errors, emit malformed frames, or hang
up.  Responses can be delayed and, with a reorder buffer, emitted in a
seeded-shuffled order to exercise correlation handling.
"""

from __future__ import annotations

import asyncio
import base64
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Sequence, TypeVar

from .protocol import (
    Capabilities,
    Envelope,
    MessageKind,
    ErrorCode,
    bye_envelope,
    encode_envelope,
    decode_envelope,
    hello_envelope,
    tool_result_error,
    tool_result_ok,
    validate_capabilities,
    MalformedMessageError,
)
from .transcript import Transcript, now_ms
from .transport import Transport, TransportClosedError, WebsocketsClientTransport

logger = logging.getLogger(__name__)

T = TypeVar("T")

MALFORMED_FRAME = 'this is not a valid frame {'


class Respond(str, Enum):
    VALUE = "value"
    CANCEL = "cancel"
    ERROR = "error"
    SILENCE = "silence"
    MALFORMED = "malformed"
    BYE = "bye"


class ScriptError(Exception):
    pass


class ScriptValidationError(ScriptError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class UnmatchedToolCallError(ScriptError):
    """A tool call arrived that no rule matches: the run fails loudly."""


@dataclass
class ScriptRule:
    match: str  # tool name or "*"
    respond: Respond
    value: Any = None
    delay_ms: int = 0
    times: int | None = None  # None = unbounded
    _used: int = field(default=0, repr=False)

    def matches(self, tool: str) -> bool:
        if self.times is not None and self._used >= self.times:
            return False
        return self.match == "*" or self.match == tool


@dataclass
class ClientScript:
    capabilities: Capabilities
    rules: list[ScriptRule]
    base_dir: Path = field(default_factory=Path)

    def fresh(self) -> "ClientScript":
        """Copy with rule-use counters reset, for reuse across runs."""
        return ClientScript(
            capabilities=self.capabilities,
            rules=[
                ScriptRule(r.match, r.respond, r.value, r.delay_ms, r.times)
                for r in self.rules
            ],
            base_dir=self.base_dir,
        )


def parse_script(obj: Any, base_dir: Path | str = ".") -> ClientScript:
    """Validate a script document, collecting every violation before failing."""
    violations: list[str] = []
    if not isinstance(obj, dict):
        raise ScriptValidationError(["script must be a JSON object"])

    caps_obj = obj.get("capabilities")
    caps = None
    if not isinstance(caps_obj, dict):
        violations.append("capabilities must be an object")
    else:
        caps = Capabilities.from_payload(caps_obj)
        violations.extend(validate_capabilities(caps))

    rules: list[ScriptRule] = []
    rules_obj = obj.get("rules")
    if not isinstance(rules_obj, list):
        violations.append("rules must be a list")
        rules_obj = []
    for i, entry in enumerate(rules_obj):
        where = f"rules[{i}]"
        if not isinstance(entry, dict):
            violations.append(f"{where}: must be an object")
            continue
        match = entry.get("match")
        if not isinstance(match, str) or not match:
            violations.append(f"{where}: match must be a tool name or '*'")
            match = "*"
        respond_raw = entry.get("respond")
        try:
            respond = Respond(respond_raw)
        except ValueError:
            violations.append(f"{where}: unknown respond {respond_raw!r}")
            respond = Respond.SILENCE
        delay_ms = entry.get("delay_ms", 0)
        if not isinstance(delay_ms, int) or isinstance(delay_ms, bool) or delay_ms < 0:
            violations.append(f"{where}: delay_ms must be a non-negative integer")
            delay_ms = 0
        times_raw = entry.get("times", "unbounded")
        times: int | None
        if times_raw == "unbounded":
            times = None
        elif isinstance(times_raw, int) and not isinstance(times_raw, bool) and times_raw > 0:
            times = times_raw
        else:
            violations.append(f"{where}: times must be a positive integer or 'unbounded'")
            times = None
        rules.append(ScriptRule(match, respond, entry.get("value"), delay_ms, times))

    if violations:
        raise ScriptValidationError(violations)
    assert caps is not None
    return ClientScript(capabilities=caps, rules=rules, base_dir=Path(base_dir))


def load_script(path: Path | str) -> ClientScript:
    """Parse a JSON script file; fixture paths resolve relative to it."""
    import json

    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScriptValidationError([f"script is not valid JSON: {exc}"]) from exc
    return parse_script(obj, base_dir=path.parent)


def inject_reorder(responses: Sequence[T], seed: int) -> list[T]:
    """Deterministically permute a response batch: same seed, same schedule."""
    schedule = list(responses)
    random.Random(seed).shuffle(schedule)
    return schedule


def _image_value(path: Path) -> dict[str, Any]:
    """Build a see-result value from an image fixture file."""
    from PIL import Image

    raw = path.read_bytes()
    with Image.open(path) as im:
        width, height = im.size
        fmt = (im.format or "").lower()
    mime = {"png": "image/png", "jpeg": "image/jpeg"}.get(fmt)
    if mime is None:
        raise ScriptError(f"fixture {path} is not PNG or JPEG")
    return {
        "mime": mime,
        "width": width,
        "height": height,
        "data": base64.b64encode(raw).decode("ascii"),
        "captured_at": now_ms(),
    }


class _ArgsMap(dict):
    def __missing__(self, key: str) -> str:
        return "{" + key + "}"


class ScriptedResponder:
    """Transport-agnostic core of the sim client.

    ``run`` performs the hello handshake, answers tool calls per the rules,
    and returns the full transcript.  With ``reorder_batch`` set, outgoing
    response frames are buffered and flushed in seeded-shuffled batches.
    """

    def __init__(
        self,
        script: ClientScript,
        *,
        seed: int | None = None,
        reorder_batch: int | None = None,
    ):
        self.script = script.fresh()
        self.transcript = Transcript()
        self._reorder_batch = reorder_batch
        self._rng = random.Random(seed)
        self._buffer: list[Envelope | str] = []
        self._send_lock = asyncio.Lock()
        self._tasks: set[asyncio.Task] = set()
        self._transport: Transport | None = None
        self._stopping = False

    async def run(self, transport: Transport) -> Transcript:
        self._transport = transport
        await self._send_now(hello_envelope(self.script.capabilities))

        first = await self._recv()
        if first is None:
            self.transcript.note("connection closed before hello_ack")
            return self.transcript
        if first.kind is not MessageKind.HELLO_ACK:
            self.transcript.note(
                f"handshake rejected: got {first.kind.value} instead of hello_ack"
            )
            await transport.close()
            return self.transcript

        try:
            while True:
                env = await self._recv()
                if env is None or self._stopping:
                    break
                if env.kind is MessageKind.TOOL_CALL:
                    self._schedule_response(env)
                elif env.kind is MessageKind.BYE:
                    break
                # error envelopes and anything else are recorded and ignored
        finally:
            await self._shutdown()
        return self.transcript

    async def _shutdown(self) -> None:
        # let in-flight delayed responses finish unless we are hanging up
        pending = [t for t in self._tasks if not t.done()]
        for task in pending:
            task.cancel()
        if pending:
            await asyncio.gather(*pending, return_exceptions=True)
        await self._flush_buffer()
        if self._transport is not None:
            await self._transport.close()
        # surface loud failures (unmatched calls, bad fixtures); transport
        # races during teardown are expected and only logged
        for task in self._tasks:
            if task.done() and not task.cancelled() and task.exception():
                exc = task.exception()
                if isinstance(exc, ScriptError):
                    raise exc
                logger.debug("response task failed during teardown: %r", exc)

    async def _recv(self) -> Envelope | None:
        assert self._transport is not None
        try:
            text = await self._transport.recv()
        except TransportClosedError:
            return None
        try:
            env = decode_envelope(text)
        except MalformedMessageError:
            self.transcript.record("received", None, raw=text[:512])
            return await self._recv()
        self.transcript.record("received", _obj(env))
        return env

    def _schedule_response(self, call: Envelope) -> None:
        tool = call.payload.get("tool", "")
        rule = next((r for r in self.script.rules if r.matches(tool)), None)
        if rule is None:
            raise UnmatchedToolCallError(
                f"no rule matches tool_call {call.id} for tool {tool!r}"
            )
        rule._used += 1
        task = asyncio.create_task(self._respond(rule, call))
        self._tasks.add(task)

    async def _respond(self, rule: ScriptRule, call: Envelope) -> None:
        if rule.delay_ms:
            await asyncio.sleep(rule.delay_ms / 1000.0)
        tool = call.payload.get("tool", "")
        args = call.payload.get("args", {}) or {}

        if rule.respond is Respond.SILENCE:
            return
        if rule.respond is Respond.MALFORMED:
            await self._emit(MALFORMED_FRAME)
            return
        if rule.respond is Respond.BYE:
            self._stopping = True
            await self._flush_buffer()
            await self._send_now(bye_envelope("scripted bye"))
            if self._transport is not None:
                await self._transport.close()
            return
        if rule.respond is Respond.CANCEL:
            await self._emit(
                tool_result_error(call.id, ErrorCode.USER_CANCELLED, "user cancelled")
            )
            return
        if rule.respond is Respond.ERROR:
            message = rule.value if isinstance(rule.value, str) else "scripted client error"
            await self._emit(
                tool_result_error(call.id, ErrorCode.CLIENT_ERROR, message)
            )
            return

        value = self._render_value(rule, tool, args)
        await self._emit(tool_result_ok(call.id, value))

    def _render_value(self, rule: ScriptRule, tool: str, args: dict[str, Any]) -> Any:
        if tool == "see" and isinstance(rule.value, str):
            return _image_value(self.script.base_dir / rule.value)
        if isinstance(rule.value, str):
            # "{prompt}"-style placeholders pull from the call args
            return rule.value.format_map(_ArgsMap(args))
        if rule.value is None and tool == "write":
            return True
        return rule.value

    async def _emit(self, frame: Envelope | str) -> None:
        if self._reorder_batch is None:
            await self._send_now(frame)
            return
        flush: list[Envelope | str] | None = None
        self._buffer.append(frame)
        if len(self._buffer) >= self._reorder_batch:
            flush, self._buffer = self._buffer, []
        if flush is not None:
            self._rng.shuffle(flush)
            await self._send_batch(flush)

    async def _flush_buffer(self) -> None:
        if not self._buffer:
            return
        flush, self._buffer = self._buffer, []
        self._rng.shuffle(flush)
        try:
            await self._send_batch(flush)
        except TransportClosedError:
            pass

    async def _send_now(self, frame: Envelope | str) -> None:
        await self._send_batch([frame])

    async def _send_batch(self, frames: list[Envelope | str]) -> None:
        assert self._transport is not None
        async with self._send_lock:
            for frame in frames:
                if isinstance(frame, Envelope):
                    await self._transport.send(encode_envelope(frame))
                    self.transcript.record("sent", _obj(frame))
                else:
                    await self._transport.send(frame)
                    self.transcript.record("sent", None, raw=frame)


def _obj(env: Envelope) -> dict[str, Any]:
    obj: dict[str, Any] = {"kind": env.kind.value}
    if env.id:
        obj["id"] = env.id
    obj["payload"] = env.payload
    return obj


async def run_scripted_client(
    url: str,
    script: ClientScript,
    *,
    seed: int | None = None,
    reorder_batch: int | None = None,
) -> Transcript:
    """Connect to a server, run the script to completion, return the transcript."""
    import websockets

    responder = ScriptedResponder(script, seed=seed, reorder_batch=reorder_batch)
    async with websockets.connect(url) as conn:
        transport = WebsocketsClientTransport(conn)
        return await responder.run(transport)

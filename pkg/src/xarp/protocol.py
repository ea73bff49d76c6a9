"""XARP wire format: message envelopes, capability payloads, and the codec.

Every frame on the wire is one UTF-8 JSON object with the shape
``{"kind": ..., "id": ..., "payload": {...}}``.  An empty correlation id is
omitted from the serialized object.  Encoding and decoding are pure
functions; anything stateful (correlation, timeouts) lives in the session
engine.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

PROTOCOL_VERSION = "0.1"
SUPPORTED_VERSIONS: tuple[str, ...] = ("0.1",)

TOOL_NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
VERSION_RE = re.compile(r"\d+(\.\d+)*\Z")

PARAM_TYPES = frozenset({"string", "number", "integer", "boolean", "object"})


class MessageKind(str, Enum):
    HELLO = "hello"
    HELLO_ACK = "hello_ack"
    TOOL_CALL = "tool_call"
    TOOL_RESULT = "tool_result"
    ERROR = "error"
    BYE = "bye"


class ErrorCode(str, Enum):
    MALFORMED_MESSAGE = "MALFORMED_MESSAGE"
    UNSUPPORTED_VERSION = "UNSUPPORTED_VERSION"
    TOOL_NOT_SUPPORTED = "TOOL_NOT_SUPPORTED"
    TOOL_TIMEOUT = "TOOL_TIMEOUT"
    USER_CANCELLED = "USER_CANCELLED"
    CLIENT_ERROR = "CLIENT_ERROR"
    CONNECTION_CLOSED = "CONNECTION_CLOSED"


def parse_error_code(raw: str) -> tuple[ErrorCode, str]:
    """Map a wire error code to the closed enum.

    Unknown codes become CLIENT_ERROR; the original string is returned so
    callers can preserve it in the message text.
    """
    try:
        return ErrorCode(raw), ""
    except ValueError:
        return ErrorCode.CLIENT_ERROR, raw


class ProtocolError(Exception):
    """Protocol-level failure carrying a wire error code."""

    code: ErrorCode = ErrorCode.CLIENT_ERROR

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class MalformedMessageError(ProtocolError):
    code = ErrorCode.MALFORMED_MESSAGE


class UnsupportedVersionError(ProtocolError):
    code = ErrorCode.UNSUPPORTED_VERSION


class InvalidMessageError(ValueError):
    """Raised when encoding a message that violates envelope invariants.

    This is a local usage error, not a wire condition, so it is not an
    ErrorCode.
    """


@dataclass
class Envelope:
    """One wire message: kind, correlation id, and a kind-specific payload.

    ``payload`` stays a plain JSON object so unknown fields survive a
    decode/encode round trip untouched.
    """

    kind: MessageKind
    id: str = ""
    payload: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.kind, MessageKind):
            self.kind = MessageKind(self.kind)


@dataclass
class ParamSpec:
    type: str
    description: str = ""
    required: bool = False

    def to_payload(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "description": self.description,
            "required": self.required,
        }

    @classmethod
    def from_payload(cls, obj: dict[str, Any]) -> "ParamSpec":
        return cls(
            type=obj.get("type", ""),
            description=obj.get("description", ""),
            required=bool(obj.get("required", False)),
        )


@dataclass
class ReturnSpec:
    type: str
    description: str = ""

    def to_payload(self) -> dict[str, Any]:
        return {"type": self.type, "description": self.description}

    @classmethod
    def from_payload(cls, obj: dict[str, Any]) -> "ReturnSpec":
        return cls(type=obj.get("type", ""), description=obj.get("description", ""))


@dataclass
class ToolDescriptor:
    """Agent-consumable schema of one tool."""

    name: str
    description: str
    params: dict[str, ParamSpec] = field(default_factory=dict)
    returns: ReturnSpec = field(default_factory=lambda: ReturnSpec(type="object"))

    def to_payload(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "params": {k: v.to_payload() for k, v in self.params.items()},
            "returns": self.returns.to_payload(),
        }

    @classmethod
    def from_payload(cls, obj: dict[str, Any]) -> "ToolDescriptor":
        return cls(
            name=obj.get("name", ""),
            description=obj.get("description", ""),
            params={
                k: ParamSpec.from_payload(v)
                for k, v in obj.get("params", {}).items()
            },
            returns=ReturnSpec.from_payload(obj.get("returns", {})),
        )


@dataclass
class Capabilities:
    """A client's declared identity and supported tool set."""

    protocol_version: str
    client_id: str
    platform: str
    tools: list[ToolDescriptor] = field(default_factory=list)

    def tool_names(self) -> list[str]:
        return [t.name for t in self.tools]

    def find(self, name: str) -> ToolDescriptor | None:
        for tool in self.tools:
            if tool.name == name:
                return tool
        return None

    def to_payload(self) -> dict[str, Any]:
        return {
            "protocol_version": self.protocol_version,
            "client_id": self.client_id,
            "platform": self.platform,
            "tools": [t.to_payload() for t in self.tools],
        }

    @classmethod
    def from_payload(cls, obj: dict[str, Any]) -> "Capabilities":
        return cls(
            protocol_version=obj.get("protocol_version", ""),
            client_id=obj.get("client_id", ""),
            platform=obj.get("platform", ""),
            tools=[ToolDescriptor.from_payload(t) for t in obj.get("tools", [])],
        )


# --- envelope builders (canonical payload key order) ---

def hello_envelope(caps: Capabilities) -> Envelope:
    return Envelope(MessageKind.HELLO, payload=caps.to_payload())


def hello_ack_envelope(protocol_version: str, session_id: str) -> Envelope:
    return Envelope(
        MessageKind.HELLO_ACK,
        payload={"protocol_version": protocol_version, "session_id": session_id},
    )


def tool_call_envelope(call_id: str, tool: str, args: dict[str, Any]) -> Envelope:
    return Envelope(
        MessageKind.TOOL_CALL, id=call_id, payload={"tool": tool, "args": args}
    )


def tool_result_ok(call_id: str, value: Any) -> Envelope:
    return Envelope(
        MessageKind.TOOL_RESULT, id=call_id, payload={"ok": True, "value": value}
    )


def tool_result_error(call_id: str, code: ErrorCode, message: str) -> Envelope:
    return Envelope(
        MessageKind.TOOL_RESULT,
        id=call_id,
        payload={"ok": False, "error": {"code": code.value, "message": message}},
    )


def error_envelope(code: ErrorCode, message: str) -> Envelope:
    return Envelope(
        MessageKind.ERROR, payload={"code": code.value, "message": message}
    )


def bye_envelope(reason: str) -> Envelope:
    return Envelope(MessageKind.BYE, payload={"reason": reason})


# --- structural validation shared by encode and decode ---

def _check(cond: bool, msg: str) -> str | None:
    return None if cond else msg


def _descriptor_violation(entry: Any, where: str) -> str | None:
    if not isinstance(entry, dict):
        return f"{where}: tool entry must be an object"
    if not isinstance(entry.get("name"), str):
        return f"{where}: tool name must be a string"
    if not isinstance(entry.get("description"), str):
        return f"{where}: tool description must be a string"
    params = entry.get("params", {})
    if not isinstance(params, dict):
        return f"{where}: params must be an object"
    for pname, pspec in params.items():
        if not isinstance(pspec, dict):
            return f"{where}: param {pname!r} must be an object"
        if "type" in pspec and not isinstance(pspec["type"], str):
            return f"{where}: param {pname!r} type must be a string"
        if "description" in pspec and not isinstance(pspec["description"], str):
            return f"{where}: param {pname!r} description must be a string"
        if "required" in pspec and not isinstance(pspec["required"], bool):
            return f"{where}: param {pname!r} required must be a boolean"
    returns = entry.get("returns", {})
    if not isinstance(returns, dict):
        return f"{where}: returns must be an object"
    if "type" in returns and not isinstance(returns["type"], str):
        return f"{where}: returns type must be a string"
    return None


def _payload_violation(kind: MessageKind, payload: dict[str, Any]) -> str | None:
    if kind is MessageKind.HELLO:
        if not isinstance(payload.get("protocol_version"), str):
            return "hello: protocol_version must be a string"
        if not isinstance(payload.get("client_id"), str):
            return "hello: client_id must be a string"
        if not isinstance(payload.get("platform"), str):
            return "hello: platform must be a string"
        tools = payload.get("tools")
        if not isinstance(tools, list):
            return "hello: tools must be a list"
        for i, entry in enumerate(tools):
            violation = _descriptor_violation(entry, f"hello tools[{i}]")
            if violation:
                return violation
        return None

    if kind is MessageKind.HELLO_ACK:
        if not isinstance(payload.get("protocol_version"), str):
            return "hello_ack: protocol_version must be a string"
        if not isinstance(payload.get("session_id"), str):
            return "hello_ack: session_id must be a string"
        return None

    if kind is MessageKind.TOOL_CALL:
        tool = payload.get("tool")
        if not isinstance(tool, str):
            return "tool_call: tool must be a string"
        if not TOOL_NAME_RE.match(tool):
            return f"tool_call: invalid tool name {tool!r}"
        if "args" in payload and not isinstance(payload["args"], dict):
            return "tool_call: args must be an object"
        return None

    if kind is MessageKind.TOOL_RESULT:
        ok = payload.get("ok")
        if not isinstance(ok, bool):
            return "tool_result: ok must be a boolean"
        if ok:
            if "value" not in payload:
                return "tool_result: value required when ok"
            if "error" in payload:
                return "tool_result: error must be absent when ok"
        else:
            if "error" not in payload:
                return "tool_result: error required when not ok"
            if "value" in payload:
                return "tool_result: value must be absent when not ok"
            err = payload["error"]
            if not isinstance(err, dict):
                return "tool_result: error must be an object"
            if not isinstance(err.get("code"), str):
                return "tool_result: error code must be a string"
            if not isinstance(err.get("message"), str):
                return "tool_result: error message must be a string"
        return None

    if kind is MessageKind.ERROR:
        if not isinstance(payload.get("code"), str):
            return "error: code must be a string"
        if not isinstance(payload.get("message"), str):
            return "error: message must be a string"
        return None

    # bye: reason optional but must be a string when present
    if "reason" in payload and not isinstance(payload["reason"], str):
        return "bye: reason must be a string"
    return None


_ID_REQUIRED = frozenset({MessageKind.TOOL_CALL, MessageKind.TOOL_RESULT})
_ID_FORBIDDEN = frozenset(
    {MessageKind.HELLO, MessageKind.HELLO_ACK, MessageKind.BYE}
)


def _envelope_violation(kind: MessageKind, msg_id: str, payload: Any) -> str | None:
    if not isinstance(msg_id, str):
        return "id must be a string"
    if kind in _ID_REQUIRED and not msg_id:
        return f"{kind.value}: id must be non-empty"
    if kind in _ID_FORBIDDEN and msg_id:
        return f"{kind.value}: id must be empty"
    if not isinstance(payload, dict):
        return "payload must be an object"
    return _payload_violation(kind, payload)


def encode_envelope(msg: Envelope) -> str:
    """Serialize a validated envelope to one JSON text frame.

    Raises InvalidMessageError if the envelope violates its invariants.
    """
    violation = _envelope_violation(msg.kind, msg.id, msg.payload)
    if violation:
        raise InvalidMessageError(violation)
    obj: dict[str, Any] = {"kind": msg.kind.value}
    if msg.id:
        obj["id"] = msg.id
    obj["payload"] = msg.payload
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def decode_envelope(text: str | bytes) -> Envelope:
    """Parse arbitrary frame text into a validated envelope.

    Never raises anything but MalformedMessageError, whatever the input.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedMessageError(f"frame is not UTF-8: {exc}") from exc
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, RecursionError, ValueError) as exc:
        raise MalformedMessageError(f"frame is not JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedMessageError("frame must be a JSON object")

    raw_kind = obj.get("kind")
    if not isinstance(raw_kind, str):
        raise MalformedMessageError("missing kind")
    try:
        kind = MessageKind(raw_kind)
    except ValueError:
        raise MalformedMessageError(f"unknown kind {raw_kind!r}") from None

    msg_id = obj.get("id", "")
    payload = obj.get("payload")
    if payload is None:
        raise MalformedMessageError("missing payload")

    violation = _envelope_violation(kind, msg_id, payload)
    if violation:
        raise MalformedMessageError(violation)
    return Envelope(kind, msg_id, payload)


def negotiate_version(client_version: str, server_supported: list[str]) -> str:
    """Exact-match version negotiation; the client's version is preferred."""
    if not server_supported:
        raise ValueError("server_supported must be non-empty")
    if client_version in server_supported:
        return client_version
    raise UnsupportedVersionError(
        f"version {client_version!r} not supported; supported: "
        + ", ".join(server_supported)
    )


def validate_capabilities(caps: Capabilities) -> list[str]:
    """Check every Capabilities invariant; returns a list of violations.

    An empty report means the declaration is acceptable.
    """
    report: list[str] = []
    if not caps.protocol_version or not VERSION_RE.match(caps.protocol_version):
        report.append(
            f"protocol_version must be dotted-numeric, got {caps.protocol_version!r}"
        )
    seen: set[str] = set()
    for tool in caps.tools:
        if tool.name in seen:
            report.append(f"duplicate tool name: {tool.name}")
        seen.add(tool.name)
        if not TOOL_NAME_RE.match(tool.name):
            report.append(f"invalid tool name: {tool.name!r}")
        if not tool.description:
            report.append(f"tool {tool.name!r} has an empty description")
        for pname, pspec in tool.params.items():
            if pspec.type not in PARAM_TYPES:
                report.append(
                    f"tool {tool.name!r} param {pname!r} has invalid type "
                    f"{pspec.type!r}"
                )
        if tool.returns.type not in PARAM_TYPES:
            report.append(
                f"tool {tool.name!r} has invalid return type {tool.returns.type!r}"
            )
    return report

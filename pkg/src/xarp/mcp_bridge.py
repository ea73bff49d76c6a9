"""JSON-RPC 2.0 bridge that exposes one live session's tools over MCP.

Implements the request/response subset: initialize, tools/list, and
tools/call.  Text results become text content blocks, captured frames
become image blocks with byte-identical base64 data, and poses serialize
to a canonical JSON text block.
"""

from __future__ import annotations

import json
from typing import Any

from .protocol import ErrorCode, ToolDescriptor
from .session import SessionState
from .toolkit import BoundSession, ToolCallError

# stateless initialize: the advertised revision is configuration, not
# negotiated per connection
MCP_PROTOCOL_REVISION = "2024-11-05"
MCP_SERVER_NAME = "xarp"

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603
SERVER_ERROR = -32000

_JSON_TYPE_MAP = {
    "string": "string",
    "number": "number",
    "integer": "integer",
    "boolean": "boolean",
    "object": "object",
}


def tool_entry(descriptor: ToolDescriptor) -> dict[str, Any]:
    """Derive the MCP tool entry (name, description, inputSchema) 1:1."""
    properties: dict[str, Any] = {}
    required: list[str] = []
    for pname, pspec in descriptor.params.items():
        prop: dict[str, Any] = {"type": _JSON_TYPE_MAP.get(pspec.type, "string")}
        if pspec.description:
            prop["description"] = pspec.description
        properties[pname] = prop
        if pspec.required:
            required.append(pname)
    schema: dict[str, Any] = {"type": "object", "properties": properties}
    if required:
        schema["required"] = required
    return {
        "name": descriptor.name,
        "description": descriptor.description,
        "inputSchema": schema,
    }


def text_block(text: str) -> dict[str, Any]:
    return {"type": "text", "text": text}


def image_block(data: str, mime: str) -> dict[str, Any]:
    return {"type": "image", "data": data, "mimeType": mime}


def _result(request_id: Any, result: dict[str, Any]) -> dict[str, Any]:
    return {"jsonrpc": "2.0", "id": request_id, "result": result}


def _error(request_id: Any, code: int, message: str) -> dict[str, Any]:
    return {"jsonrpc": "2.0", "id": request_id, "error": {"code": code, "message": message}}


class McpBridge:
    """Dispatches JSON-RPC requests against one bound session."""

    def __init__(
        self,
        toolkit: BoundSession,
        *,
        server_version: str = "0.1.0",
        protocol_revision: str = MCP_PROTOCOL_REVISION,
    ):
        self.toolkit = toolkit
        self.server_version = server_version
        self.protocol_revision = protocol_revision

    async def handle_request(self, obj: Any) -> dict[str, Any] | None:
        """Handle one decoded JSON-RPC message.

        Returns the response object, or None for notifications (no id).
        """
        if not isinstance(obj, dict):
            return _error(None, INVALID_REQUEST, "request must be a JSON object")
        request_id = obj.get("id")
        is_notification = "id" not in obj
        if obj.get("jsonrpc") != "2.0":
            return _error(request_id, INVALID_REQUEST, "jsonrpc must be '2.0'")
        method = obj.get("method")
        if not isinstance(method, str):
            return _error(request_id, INVALID_REQUEST, "method must be a string")
        if is_notification:
            # nothing to do for the methods we serve; acknowledged by transport
            return None

        params = obj.get("params") or {}
        if not isinstance(params, dict):
            return _error(request_id, INVALID_PARAMS, "params must be an object")

        if method == "initialize":
            return _result(request_id, self._initialize_result())
        if method == "tools/list":
            return self._list_tools(request_id)
        if method == "tools/call":
            return await self._call_tool(request_id, params)
        return _error(request_id, METHOD_NOT_FOUND, f"method not found: {method}")

    def _initialize_result(self) -> dict[str, Any]:
        return {
            "protocolVersion": self.protocol_revision,
            "capabilities": {"tools": {}},
            "serverInfo": {"name": MCP_SERVER_NAME, "version": self.server_version},
        }

    def _session_open(self) -> bool:
        return self.toolkit.session.state is SessionState.READY

    def _list_tools(self, request_id: Any) -> dict[str, Any]:
        if not self._session_open():
            return _error(
                request_id,
                SERVER_ERROR,
                f"{ErrorCode.CONNECTION_CLOSED.value}: session is closed",
            )
        entries = [tool_entry(d) for d in self.toolkit.as_tool_descriptors()]
        return _result(request_id, {"tools": entries})

    async def _call_tool(self, request_id: Any, params: dict[str, Any]) -> dict[str, Any]:
        name = params.get("name")
        if not isinstance(name, str):
            return _error(request_id, INVALID_PARAMS, "params.name must be a string")
        arguments = params.get("arguments") or {}
        if not isinstance(arguments, dict):
            return _error(request_id, INVALID_PARAMS, "params.arguments must be an object")

        declared = {d.name for d in self.toolkit.as_tool_descriptors()}
        if name not in declared:
            return _error(request_id, INVALID_PARAMS, f"unknown tool: {name}")

        try:
            content = await self._dispatch(name, arguments)
        except ToolCallError as exc:
            return _result(
                request_id,
                {"content": [text_block(f"{exc.code.value}: {exc.message}")], "isError": True},
            )
        except ValueError as exc:
            return _error(request_id, INVALID_PARAMS, str(exc))
        return _result(request_id, {"content": content, "isError": False})

    async def _dispatch(self, name: str, arguments: dict[str, Any]) -> list[dict[str, Any]]:
        if name == "read":
            prompt = arguments.get("prompt")
            if prompt is not None and not isinstance(prompt, str):
                raise ValueError("prompt must be a string")
            value = await self.toolkit.read(prompt)
            return [text_block(value)]
        if name == "write":
            text = arguments.get("text")
            if not isinstance(text, str):
                raise ValueError("text is required and must be a string")
            ack = await self.toolkit.write(text)
            return [text_block(ack if isinstance(ack, str) else json.dumps(ack))]
        if name == "see":
            frame = await self.toolkit.see()
            return [image_block(frame.data, frame.mime)]
        if name == "head_pose":
            pose = await self.toolkit.head_pose()
            return [text_block(json.dumps(pose.to_value(), separators=(",", ":")))]
        # a declared tool outside the stock four has no local wrapper; call raw
        outcome = await self.toolkit.session.call_tool(name, arguments)
        if not outcome.ok:
            assert outcome.code is not None
            raise ToolCallError(outcome.code, outcome.message)
        value = outcome.value
        return [text_block(value if isinstance(value, str) else json.dumps(value))]


def parse_body(body: bytes) -> tuple[Any, dict[str, Any] | None]:
    """Decode an HTTP body; on parse failure returns the -32700 response."""
    try:
        return json.loads(body), None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        return None, _error(None, PARSE_ERROR, f"parse error: {exc}")

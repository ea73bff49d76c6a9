"""XARP: a remote XR tool platform.

A JSON-over-WebSockets protocol with capability discovery connects
server-side application logic to XR clients.  Use it three ways: direct
library calls (open a session, call tools), agent tool descriptors
(``BoundSession.as_tool_descriptors``), or an MCP server bridge.
"""

__version__ = "0.1.0"

from .protocol import (
    PROTOCOL_VERSION,
    SUPPORTED_VERSIONS,
    Capabilities,
    Envelope,
    ErrorCode,
    InvalidMessageError,
    MalformedMessageError,
    MessageKind,
    ParamSpec,
    ProtocolError,
    ReturnSpec,
    ToolDescriptor,
    UnsupportedVersionError,
    decode_envelope,
    encode_envelope,
    negotiate_version,
    validate_capabilities,
)
from .session import (
    CallOutcome,
    Session,
    SessionConfig,
    SessionState,
    close_session,
    open_session,
)
from .toolkit import (
    BoundSession,
    HeadPose,
    ImageFrame,
    ToolCallError,
    canonical_capabilities,
    canonical_descriptors,
)
from .transport import (
    MemoryTransport,
    StarletteWebSocketTransport,
    Transport,
    TransportClosedError,
    WebsocketsClientTransport,
)
from .mcp_bridge import McpBridge
from .sim_client import (
    ClientScript,
    ScriptRule,
    ScriptedResponder,
    inject_reorder,
    load_script,
    run_scripted_client,
)
from .gateway import (
    GatewayConfig,
    GatewayHandle,
    SessionRegistry,
    create_app,
    run_echo_app,
    start_gateway,
)
from .transcript import Transcript, TranscriptEntry

__all__ = [
    "PROTOCOL_VERSION",
    "SUPPORTED_VERSIONS",
    "BoundSession",
    "CallOutcome",
    "Capabilities",
    "ClientScript",
    "Envelope",
    "ErrorCode",
    "GatewayConfig",
    "GatewayHandle",
    "HeadPose",
    "ImageFrame",
    "InvalidMessageError",
    "MalformedMessageError",
    "McpBridge",
    "MemoryTransport",
    "MessageKind",
    "ParamSpec",
    "ProtocolError",
    "ReturnSpec",
    "ScriptRule",
    "ScriptedResponder",
    "Session",
    "SessionConfig",
    "SessionRegistry",
    "SessionState",
    "StarletteWebSocketTransport",
    "ToolCallError",
    "ToolDescriptor",
    "Transcript",
    "TranscriptEntry",
    "Transport",
    "TransportClosedError",
    "UnsupportedVersionError",
    "WebsocketsClientTransport",
    "canonical_capabilities",
    "canonical_descriptors",
    "close_session",
    "create_app",
    "decode_envelope",
    "encode_envelope",
    "inject_reorder",
    "load_script",
    "negotiate_version",
    "open_session",
    "run_echo_app",
    "run_scripted_client",
    "start_gateway",
    "validate_capabilities",
]

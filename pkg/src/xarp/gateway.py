"""The runnable service: WebSocket endpoint, session registry, demo apps,
MCP mounting, health check, and static hosting for the web client.

Per-connection faults never take the service down; every accepted
connection produces exactly one transcript file.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging
import socket
from dataclasses import dataclass, field
from pathlib import Path

import uvicorn
from fastapi import FastAPI, Request, WebSocket
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import __version__
from .mcp_bridge import MCP_PROTOCOL_REVISION, McpBridge, parse_body, _error as rpc_error
from .protocol import ErrorCode
from .session import Session, SessionConfig, SessionState, open_session
from .toolkit import BoundSession, ToolCallError
from .transport import StarletteWebSocketTransport

logger = logging.getLogger(__name__)

MODES = ("echo", "mcp", "idle")

_TERMINAL_READ_FAILURES = frozenset(
    {
        ErrorCode.TOOL_NOT_SUPPORTED,
        ErrorCode.TOOL_TIMEOUT,
        ErrorCode.CONNECTION_CLOSED,
    }
)


@dataclass
class GatewayConfig:
    bind: str = "127.0.0.1:8080"
    mode: str = "echo"
    log_dir: Path = Path("transcripts")
    read_timeout_s: float = 120.0
    default_timeout_s: float = 30.0
    handshake_timeout_s: float = 10.0
    serve_web: bool = True
    web_dir: Path | None = None
    mcp_revision: str = MCP_PROTOCOL_REVISION

    def __post_init__(self) -> None:
        self.log_dir = Path(self.log_dir)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.read_timeout_s <= 0 or self.default_timeout_s <= 0:
            raise ValueError("timeouts must be positive")
        self.host, self.port = parse_bind(self.bind)

    def session_config(self) -> SessionConfig:
        return SessionConfig(
            handshake_timeout_s=self.handshake_timeout_s,
            default_timeout_s=self.default_timeout_s,
            read_timeout_s=self.read_timeout_s,
            log_dir=self.log_dir,
        )


def parse_bind(bind: str) -> tuple[str, int]:
    host, sep, port = bind.rpartition(":")
    if not sep or not host:
        raise ValueError(f"bind must be host:port, got {bind!r}")
    try:
        port_num = int(port)
    except ValueError:
        raise ValueError(f"invalid port in {bind!r}") from None
    if not 0 <= port_num <= 65535:
        raise ValueError(f"port out of range in {bind!r}")
    return host, port_num


class SessionRegistry:
    """Live sessions by id; lookups of unknown ids fail cleanly (None)."""

    def __init__(self) -> None:
        self._sessions: dict[str, Session] = {}

    def add(self, session: Session) -> None:
        self._sessions[session.session_id] = session

    def remove(self, session_id: str) -> None:
        self._sessions.pop(session_id, None)

    def get(self, session_id: str) -> Session | None:
        return self._sessions.get(session_id)

    def open_count(self) -> int:
        return sum(
            1 for s in self._sessions.values() if s.state is SessionState.READY
        )

    def all_sessions(self) -> list[Session]:
        return list(self._sessions.values())


async def run_echo_app(toolkit: BoundSession) -> None:
    """Greet, then echo every input with a question mark appended."""
    transcript = toolkit.session.transcript
    try:
        await toolkit.write("I am listening")
    except ToolCallError as exc:
        transcript.note(f"echo app stopped: write failed: {exc.code.value}: {exc.message}")
        return
    while True:
        try:
            user_input = await toolkit.read()
        except ToolCallError as exc:
            if exc.code in _TERMINAL_READ_FAILURES:
                if toolkit.session.state is SessionState.READY:
                    transcript.note(
                        f"echo app stopped: read failed: {exc.code.value}: {exc.message}"
                    )
                return
            # cancellations and client errors are not terminal; ask again
            continue
        try:
            await toolkit.write(f"{user_input}?")
        except ToolCallError as exc:
            if toolkit.session.state is SessionState.READY:
                transcript.note(
                    f"echo app stopped: write failed: {exc.code.value}: {exc.message}"
                )
            return


def default_web_dir() -> Path | None:
    candidate = Path(__file__).parent / "web" / "static"
    return candidate if (candidate / "index.html").exists() else None


def create_app(
    config: GatewayConfig | None = None, registry: SessionRegistry | None = None
) -> FastAPI:
    config = config or GatewayConfig()
    registry = registry if registry is not None else SessionRegistry()

    @contextlib.asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        # drain on shutdown so interrupted servers still flush transcripts
        for session in registry.all_sessions():
            await session.close("server shutdown")

    app = FastAPI(title="xarp gateway", version=__version__, lifespan=lifespan)
    app.state.config = config
    app.state.registry = registry

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        transport = StarletteWebSocketTransport(websocket)
        session = await open_session(transport, config.session_config())
        if session.state is not SessionState.READY:
            logger.info(
                "session %s rejected: %s", session.session_id, session.close_reason
            )
            return
        registry.add(session)
        logger.info(
            "session %s ready (platform=%s, tools=%s)",
            session.session_id,
            session.capabilities.platform if session.capabilities else "?",
            session.capabilities.tool_names() if session.capabilities else [],
        )
        if config.mode == "mcp":
            logger.info(
                "MCP endpoint for session %s: POST /mcp/%s",
                session.session_id,
                session.session_id,
            )
        toolkit = BoundSession(session)
        try:
            if config.mode == "echo":
                await run_echo_app(toolkit)
            await session.wait_closed()
        except Exception:
            logger.exception("session %s application failed", session.session_id)
        finally:
            registry.remove(session.session_id)
            await session.close("connection handler finished")

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"status": "ok", "sessions": registry.open_count()}

    @app.post("/mcp/{session_id}")
    async def mcp_endpoint(session_id: str, request: Request) -> Response:
        obj, parse_failure = parse_body(await request.body())
        if parse_failure is not None:
            return JSONResponse(parse_failure)
        session = registry.get(session_id)
        if session is None:
            return JSONResponse(
                rpc_error(None, -32001, f"unknown session: {session_id}"),
                status_code=404,
            )
        bridge = McpBridge(
            BoundSession(session),
            server_version=__version__,
            protocol_revision=config.mcp_revision,
        )
        response = await bridge.handle_request(obj)
        if response is None:
            return Response(status_code=202)
        return JSONResponse(response)

    web_dir = config.web_dir or default_web_dir()
    if config.serve_web and web_dir is not None:
        app.mount("/", StaticFiles(directory=web_dir, html=True), name="web")
    elif config.serve_web:
        logger.warning("web client assets not found; GET / disabled")

    return app


@dataclass
class GatewayHandle:
    """A running service: inspect the registry, then stop it."""

    config: GatewayConfig
    registry: SessionRegistry
    app: FastAPI
    _server: uvicorn.Server = field(repr=False)
    _task: asyncio.Task = field(repr=False)
    port: int = 0

    @property
    def base_url(self) -> str:
        return f"http://{self.config.host}:{self.port}"

    @property
    def ws_url(self) -> str:
        return f"ws://{self.config.host}:{self.port}/ws"

    async def stop(self) -> None:
        self._server.should_exit = True
        await self._task


def _uvicorn_server(config: GatewayConfig, app: FastAPI) -> uvicorn.Server:
    uv_config = uvicorn.Config(
        app,
        host=config.host,
        port=config.port,
        log_level="warning",
    )
    return uvicorn.Server(uv_config)


async def start_gateway(config: GatewayConfig | None = None) -> GatewayHandle:
    """Bind and serve in a background task of the current event loop."""
    config = config or GatewayConfig()
    registry = SessionRegistry()
    app = create_app(config, registry)
    server = _uvicorn_server(config, app)
    task = asyncio.create_task(server.serve(), name="xarp-gateway")
    while not server.started:
        if task.done():
            task.result()  # surfaces bind failures
            raise RuntimeError("gateway exited before startup")
        await asyncio.sleep(0.01)
    port = config.port
    for srv in server.servers:
        for sock in srv.sockets:
            if sock.family in (socket.AF_INET, socket.AF_INET6):
                port = sock.getsockname()[1]
    return GatewayHandle(
        config=config, registry=registry, app=app, _server=server, _task=task, port=port
    )


def serve_blocking(config: GatewayConfig | None = None) -> None:
    """Run in the foreground until interrupted (used by the CLI)."""
    config = config or GatewayConfig()
    app = create_app(config)
    _uvicorn_server(config, app).run()

from __future__ import annotations

import asyncio
import base64
import contextlib
from pathlib import Path

import pytest

from xarp import (
    Capabilities,
    ClientScript,
    GatewayConfig,
    MemoryTransport,
    ScriptRule,
    ScriptedResponder,
    Session,
    SessionConfig,
    canonical_capabilities,
    open_session,
    start_gateway,
)
from xarp.sim_client import Respond

FIXTURES = Path(__file__).parent.parent / "fixtures"
PNG_PATH = FIXTURES / "tiny.png"
JPG_PATH = FIXTURES / "tiny.jpg"


@pytest.fixture
def anyio_backend():
    return "asyncio"


@pytest.fixture
def png_b64() -> str:
    return base64.b64encode(PNG_PATH.read_bytes()).decode("ascii")


@pytest.fixture
def jpg_b64() -> str:
    return base64.b64encode(JPG_PATH.read_bytes()).decode("ascii")


def caps(*names: str, client_id: str = "test-client", platform: str = "sim") -> Capabilities:
    if not names:
        names = ("read", "write", "see", "head_pose")
    return canonical_capabilities(client_id, platform, names)


def rule(match: str, respond: str = "value", value=None, delay_ms: int = 0, times=None) -> ScriptRule:
    return ScriptRule(match, Respond(respond), value, delay_ms, times)


def script(capabilities: Capabilities, *rules: ScriptRule) -> ClientScript:
    return ClientScript(capabilities=capabilities, rules=list(rules), base_dir=FIXTURES)


class SessionHarness:
    """A session over a memory transport, driven by a scripted responder."""

    def __init__(self, session: Session, responder: ScriptedResponder, client_task: asyncio.Task):
        self.session = session
        self.responder = responder
        self.client_task = client_task

    async def finish(self) -> None:
        await self.session.close("test finished")
        with contextlib.suppress(Exception):
            await asyncio.wait_for(self.client_task, 2)


@contextlib.asynccontextmanager
async def scripted_session(
    client_script: ClientScript,
    config: SessionConfig | None = None,
    *,
    seed: int | None = None,
    reorder_batch: int | None = None,
):
    server_end, client_end = MemoryTransport.pair()
    responder = ScriptedResponder(client_script, seed=seed, reorder_batch=reorder_batch)
    client_task = asyncio.create_task(responder.run(client_end))
    session = await open_session(server_end, config or SessionConfig())
    harness = SessionHarness(session, responder, client_task)
    try:
        yield harness
    finally:
        await harness.finish()


@contextlib.asynccontextmanager
async def running_gateway(**overrides):
    """A real gateway on an ephemeral port, torn down afterwards."""
    overrides.setdefault("bind", "127.0.0.1:0")
    overrides.setdefault("serve_web", False)
    config = GatewayConfig(**overrides)
    handle = await start_gateway(config)
    try:
        yield handle
    finally:
        await handle.stop()

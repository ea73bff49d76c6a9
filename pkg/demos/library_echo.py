"""Library mode: drive an XR client with plain function calls.

Starts a gateway in idle mode, connects a scripted stand-in client, then
runs the classic echo exchange by hand: write a greeting, read input,
write it back with a question mark.

Run: python demos/library_echo.py
"""

import asyncio
from pathlib import Path

from xarp import (
    BoundSession,
    GatewayConfig,
    run_scripted_client,
    load_script,
    start_gateway,
)

FIXTURES = Path(__file__).parent.parent / "fixtures"


async def main() -> None:
    gateway = await start_gateway(
        GatewayConfig(bind="127.0.0.1:0", mode="idle", log_dir=Path("transcripts"))
    )
    print(f"gateway listening on {gateway.ws_url}")

    # a headset would connect here; the simulator answers "hello" then "bye"
    script = load_script(FIXTURES / "echo.json")
    client = asyncio.create_task(run_scripted_client(gateway.ws_url, script))

    while not gateway.registry.all_sessions():
        await asyncio.sleep(0.05)
    session = gateway.registry.all_sessions()[0]
    print(f"session {session.session_id} declared: {session.capabilities.tool_names()}")

    xr = BoundSession(session)
    await xr.write("I am listening")
    for _ in range(2):
        user_input = await xr.read()
        print(f"user said: {user_input!r}")
        await xr.write(f"{user_input}?")

    await session.close("demo complete")
    await client
    print(f"transcript: {session.transcript_path}")
    await gateway.stop()


if __name__ == "__main__":
    asyncio.run(main())

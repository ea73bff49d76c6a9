"""Agent toolkit mode: export the connected client's tools as schemas.

An agent framework consumes these descriptors to decide which tools exist
and how to call them; the set adapts to whatever the client declared.

Run: python demos/agent_descriptors.py
"""

import asyncio
import json
from pathlib import Path

from xarp import (
    BoundSession,
    ClientScript,
    GatewayConfig,
    canonical_capabilities,
    load_script,
    run_scripted_client,
    start_gateway,
)

FIXTURES = Path(__file__).parent.parent / "fixtures"


async def main() -> None:
    gateway = await start_gateway(GatewayConfig(bind="127.0.0.1:0", mode="idle"))

    # one client declares all four tools, another only write
    full = load_script(FIXTURES / "full.json")
    partial = ClientScript(
        capabilities=canonical_capabilities("sim-partial", "sim", ("write",)),
        rules=list(full.rules),
        base_dir=full.base_dir,
    )

    for script in (full, partial):
        task = asyncio.create_task(run_scripted_client(gateway.ws_url, script))
        while len(gateway.registry.all_sessions()) == 0:
            await asyncio.sleep(0.05)
        session = gateway.registry.all_sessions()[0]
        xr = BoundSession(session)

        print(f"\n=== {script.capabilities.client_id} declares ===")
        for descriptor in xr.as_tool_descriptors():
            print(json.dumps(descriptor.to_payload(), indent=2))

        await session.close("done")
        await task

    await gateway.stop()


if __name__ == "__main__":
    asyncio.run(main())

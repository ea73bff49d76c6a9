"""MCP mode: expose a connected client's tools as a JSON-RPC tool server.

Starts a gateway in mcp mode, connects the full-capability simulator, and
exercises initialize, tools/list, and tools/call over HTTP exactly as an
MCP host would.

Run: python demos/mcp_session.py
"""

import asyncio
import json
from pathlib import Path

import httpx

from xarp import GatewayConfig, load_script, run_scripted_client, start_gateway

FIXTURES = Path(__file__).parent.parent / "fixtures"


async def rpc(client: httpx.AsyncClient, url: str, request_id, method: str, params=None):
    body = {"jsonrpc": "2.0", "id": request_id, "method": method}
    if params is not None:
        body["params"] = params
    response = (await client.post(url, json=body)).json()
    print(f"\n--> {method}")
    print(json.dumps(response, indent=2)[:600])
    return response


async def main() -> None:
    gateway = await start_gateway(GatewayConfig(bind="127.0.0.1:0", mode="mcp"))
    client_task = asyncio.create_task(
        run_scripted_client(gateway.ws_url, load_script(FIXTURES / "full.json"))
    )
    while not gateway.registry.all_sessions():
        await asyncio.sleep(0.05)
    session = gateway.registry.all_sessions()[0]
    url = f"{gateway.base_url}/mcp/{session.session_id}"
    print(f"MCP endpoint: {url}")

    async with httpx.AsyncClient(timeout=30) as http:
        await rpc(http, url, 1, "initialize")
        await rpc(http, url, 2, "tools/list")
        await rpc(http, url, 3, "tools/call", {"name": "read", "arguments": {"prompt": "hi"}})
        await rpc(http, url, 4, "tools/call", {"name": "head_pose", "arguments": {}})
        see = await rpc(http, url, 5, "tools/call", {"name": "see", "arguments": {}})
        block = see["result"]["content"][0]
        print(f"\nimage block: mimeType={block['mimeType']}, {len(block['data'])} base64 chars")

    await session.close("demo complete")
    await client_task
    await gateway.stop()


if __name__ == "__main__":
    asyncio.run(main())

// End-to-end against the real gateway: the controller speaks to a live
// Python server over an actual WebSocket while MCP calls drive the tools
// a human would normally trigger.  Needs python3 + the xarp package
// installed (pip install -e ..).

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { createServer } from "node:net";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionController, SocketFactory } from "../src/controller.js";
import { Envelope } from "../src/protocol.js";

const ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..");

const wsFactory: SocketFactory = (url, handlers) => {
  const socket = new WebSocket(url);
  socket.on("open", () => handlers.onOpen());
  socket.on("message", (data) => handlers.onMessage(data.toString()));
  socket.on("close", () => handlers.onClose());
  socket.on("error", (err) => handlers.onError(err.message));
  return { send: (text) => socket.send(text), close: () => socket.close() };
};

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const address = srv.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      srv.close(() => resolve(address.port));
    });
    srv.on("error", reject);
  });
}

async function until(check: () => boolean, what: string, ms = 15000): Promise<void> {
  const deadline = Date.now() + ms;
  while (!check()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 50));
  }
}

describe("controller against the real gateway", () => {
  let server: ChildProcess;
  let port: number;
  let logDir: string;

  beforeAll(async () => {
    port = await freePort();
    logDir = mkdtempSync(join(tmpdir(), "xarp-web-e2e-"));
    server = spawn(
      "python3",
      ["-m", "xarp", "serve", "--bind", `127.0.0.1:${port}`, "--mode", "echo", "--no-web"],
      { cwd: ROOT, env: { ...process.env, XARP_LOG_DIR: logDir }, stdio: "ignore" },
    );
    const deadline = Date.now() + 20000;
    for (;;) {
      try {
        const response = await fetch(`http://127.0.0.1:${port}/healthz`);
        if (response.ok) break;
      } catch {
        /* not up yet */
      }
      if (Date.now() > deadline) throw new Error("gateway never became healthy");
      await new Promise((r) => setTimeout(r, 100));
    }
  }, 30000);

  afterAll(() => {
    server.kill("SIGINT");
  });

  it("plays the full four-tool session end to end", async () => {
    const controller = new SessionController();
    controller.connect(
      `ws://127.0.0.1:${port}/ws`,
      ["read", "write", "see", "head_pose"],
      wsFactory,
    );
    await until(() => controller.status === "connected", "handshake");
    const sessionId = controller.sessionId;
    expect(sessionId).not.toBe("");

    // echo app greets, then asks to read
    await until(
      () => controller.messages.some((m) => m.kind === "write" && m.text === "I am listening"),
      "greeting",
    );
    await until(() => controller.prompts.some((p) => p.tool === "read"), "read prompt");
    const readPrompt = controller.prompts.find((p) => p.tool === "read")!;
    expect(controller.answerRead(readPrompt.id, "abc")).toBe(true);

    // the echo comes back as a write
    await until(
      () => controller.messages.some((m) => m.kind === "write" && m.text === "abc?"),
      "echoed write",
    );

    // drive see + head_pose through the MCP bridge on the same session
    const mcpUrl = `http://127.0.0.1:${port}/mcp/${sessionId}`;
    const seePromise = fetch(mcpUrl, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        jsonrpc: "2.0",
        id: "see-1",
        method: "tools/call",
        params: { name: "see", arguments: {} },
      }),
    }).then((r) => r.json() as Promise<Record<string, any>>);

    await until(() => controller.prompts.some((p) => p.tool === "see"), "see prompt");
    const png = readFileSync(join(ROOT, "fixtures", "tiny.png"));
    const seePrompt = controller.prompts.find((p) => p.tool === "see")!;
    controller.answerSee(seePrompt.id, {
      mime: "image/png",
      width: 2,
      height: 2,
      data: png.toString("base64"),
    });
    const seeResponse = await seePromise;
    expect(seeResponse.result.isError).toBe(false);
    expect(seeResponse.result.content[0].type).toBe("image");
    expect(seeResponse.result.content[0].data).toBe(png.toString("base64"));

    controller.setPose({ x: 1, y: 1.6, z: -2, yawDeg: 90 });
    const poseResponse = (await fetch(mcpUrl, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        jsonrpc: "2.0",
        id: "pose-1",
        method: "tools/call",
        params: { name: "head_pose", arguments: {} },
      }),
    }).then((r) => r.json())) as Record<string, any>;
    const pose = JSON.parse(poseResponse.result.content[0].text);
    expect(pose.position).toEqual([1, 1.6, -2]);
    expect(Math.abs(pose.orientation[1] - 0.7071)).toBeLessThan(1e-3);

    controller.disconnect();

    // the server transcript mirrors the raw log, envelope for envelope
    await until(() => readdirSync(logDir).includes(`${sessionId}.jsonl`), "transcript file");
    const lines = readFileSync(join(logDir, `${sessionId}.jsonl`), "utf-8")
      .split("\n")
      .filter(Boolean)
      .map((line) => JSON.parse(line) as { direction: string; envelope: Envelope | null });
    const serverSent = lines
      .filter((l) => l.direction === "sent" && l.envelope)
      .map((l) => l.envelope);
    const serverReceived = lines
      .filter((l) => l.direction === "received" && l.envelope)
      .map((l) => l.envelope);
    const clientSent = controller.rawLog
      .filter((i) => i.direction === "sent")
      .map((i) => JSON.parse(i.text));
    const clientReceived = controller.rawLog
      .filter((i) => i.direction === "received")
      .map((i) => JSON.parse(i.text));
    expect(serverSent).toEqual(clientReceived);
    expect(serverReceived).toEqual(clientSent);
  }, 30000);

  it("write-only capability keeps read prompts away while the server gates locally", async () => {
    const controller = new SessionController();
    controller.connect(`ws://127.0.0.1:${port}/ws`, ["write"], wsFactory);
    await until(() => controller.status === "connected", "handshake");
    const sessionId = controller.sessionId;

    // greeting still renders; the echo app then logs TOOL_NOT_SUPPORTED
    await until(
      () => controller.messages.some((m) => m.kind === "write" && m.text === "I am listening"),
      "greeting",
    );
    await new Promise((r) => setTimeout(r, 300));
    expect(controller.prompts).toHaveLength(0);

    controller.disconnect();
    await until(() => readdirSync(logDir).includes(`${sessionId}.jsonl`), "transcript file");
    const transcript = readFileSync(join(logDir, `${sessionId}.jsonl`), "utf-8");
    expect(transcript).toContain("TOOL_NOT_SUPPORTED");
    // the read rejection happened locally: no read tool_call ever hit the wire
    const calls = transcript
      .split("\n")
      .filter(Boolean)
      .map((line) => JSON.parse(line))
      .filter((l) => l.envelope?.kind === "tool_call")
      .map((l) => l.envelope.payload.tool);
    expect(calls).toEqual(["write"]);
  }, 30000);
});

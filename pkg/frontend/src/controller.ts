// Session controller: all client-side protocol behavior, DOM-free so the
// whole flow is testable with a fake socket.
//
// Responsibilities: handshake with the selected capabilities, pending
// prompt bookkeeping (each resolved exactly once), auto-answering write
// and head_pose, and a raw log of every frame in both directions.

import {
  Envelope,
  ErrorCode,
  ToolName,
  decodeEnvelope,
  encodeEnvelope,
  helloEnvelope,
  resultError,
  resultOk,
} from "./protocol.js";
import { ImageMeta, imageResultValue } from "./image.js";
import { POSE_DEFAULTS, PoseState, poseResultValue } from "./pose.js";

export interface SocketLike {
  send(text: string): void;
  close(): void;
}

export interface SocketHandlers {
  onOpen(): void;
  onMessage(text: string): void;
  onClose(): void;
  onError(message: string): void;
}

export type SocketFactory = (url: string, handlers: SocketHandlers) => SocketLike;

export type Status = "idle" | "connecting" | "connected" | "rejected" | "closed";

export interface PendingPrompt {
  id: string;
  tool: "read" | "see";
  prompt?: string;
}

export interface MessageItem {
  kind: "write" | "info" | "error";
  text: string;
}

export interface RawLogItem {
  direction: "sent" | "received";
  envelope: Envelope | null;
  text: string;
}

export class SessionController {
  status: Status = "idle";
  sessionId = "";
  banner = "";
  declared: ToolName[] = [];
  messages: MessageItem[] = [];
  prompts: PendingPrompt[] = [];
  rawLog: RawLogItem[] = [];
  pose: PoseState = { ...POSE_DEFAULTS };

  private socket: SocketLike | null = null;
  private resolved = new Set<string>();

  constructor(private readonly onChange: () => void = () => {}) {}

  connect(url: string, selected: ToolName[], factory: SocketFactory): void {
    if (this.status === "connecting" || this.status === "connected") return;
    this.reset();
    this.declared = [...selected];
    this.status = "connecting";
    this.emit();
    try {
      this.socket = factory(url, {
        onOpen: () => this.sendEnvelope(helloEnvelope(`web-${Date.now()}`, this.declared)),
        onMessage: (text) => this.handleFrame(text),
        onClose: () => this.handleClosed(),
        onError: (message) => this.fail(`connection error: ${message}`),
      });
    } catch (err) {
      this.fail(`connection error: ${String(err)}`);
    }
  }

  disconnect(): void {
    if (this.socket && this.status === "connected") {
      this.sendEnvelope({ kind: "bye", id: "", payload: { reason: "user disconnected" } });
    }
    this.socket?.close();
    this.handleClosed();
  }

  private reset(): void {
    this.sessionId = "";
    this.banner = "";
    this.messages = [];
    this.prompts = [];
    this.rawLog = [];
    this.resolved = new Set();
  }

  private emit(): void {
    this.onChange();
  }

  private fail(message: string): void {
    this.status = this.status === "connected" ? "closed" : "rejected";
    this.banner = message;
    this.emit();
  }

  private handleClosed(): void {
    if (this.status === "closed" || this.status === "rejected" || this.status === "idle") return;
    if (this.status === "connecting") {
      this.status = "rejected";
      this.banner ||= "connection closed before handshake completed";
    } else {
      this.status = "closed";
      this.banner ||= "connection closed";
    }
    // unresolved prompts can never be answered now
    this.prompts = [];
    this.emit();
  }

  private sendEnvelope(env: Envelope): void {
    const text = encodeEnvelope(env);
    this.socket?.send(text);
    this.rawLog.push({ direction: "sent", envelope: env, text });
    this.emit();
  }

  private handleFrame(text: string): void {
    const env = decodeEnvelope(text);
    this.rawLog.push({ direction: "received", envelope: env, text });
    if (!env) {
      this.messages.push({ kind: "error", text: "received an undecodable frame" });
      this.emit();
      return;
    }
    switch (env.kind) {
      case "hello_ack":
        this.status = "connected";
        this.sessionId = String(env.payload.session_id ?? "");
        this.messages.push({ kind: "info", text: `session ${this.sessionId} established` });
        break;
      case "tool_call":
        this.handleToolCall(env);
        break;
      case "error": {
        const code = String(env.payload.code ?? "");
        const message = String(env.payload.message ?? "");
        if (this.status === "connecting") {
          this.status = "rejected";
          this.banner = `server rejected the connection: ${code}: ${message}`;
        } else {
          this.messages.push({ kind: "error", text: `server error: ${code}: ${message}` });
        }
        break;
      }
      case "bye":
        this.status = "closed";
        this.banner = `server said bye: ${String(env.payload.reason ?? "")}`;
        this.prompts = [];
        break;
      default:
        this.messages.push({ kind: "error", text: `unexpected ${env.kind} frame` });
    }
    this.emit();
  }

  private handleToolCall(env: Envelope): void {
    const tool = String(env.payload.tool ?? "");
    const args = (env.payload.args ?? {}) as Record<string, unknown>;
    if (!this.declared.includes(tool as ToolName)) {
      // server-side gating should make this unreachable; answer defensively
      this.respond(env.id, resultError(env.id, "CLIENT_ERROR", `tool ${tool} not declared`));
      return;
    }
    switch (tool) {
      case "write": {
        const text = String(args.text ?? "");
        this.messages.push({ kind: "write", text });
        // display confirmation is implicit: rendering is the acknowledgment
        this.respond(env.id, resultOk(env.id, true));
        break;
      }
      case "head_pose":
        this.respond(env.id, resultOk(env.id, poseResultValue(this.pose)));
        break;
      case "read": {
        const prompt = typeof args.prompt === "string" ? args.prompt : undefined;
        this.pushPrompt({ id: env.id, tool: "read", prompt });
        break;
      }
      case "see":
        this.pushPrompt({ id: env.id, tool: "see" });
        break;
      default:
        this.respond(env.id, resultError(env.id, "CLIENT_ERROR", `tool ${tool} not implemented`));
    }
  }

  private pushPrompt(prompt: PendingPrompt): void {
    // at most one visible prompt per correlation id
    if (this.resolved.has(prompt.id) || this.prompts.some((p) => p.id === prompt.id)) return;
    this.prompts.push(prompt);
    this.emit();
  }

  /** Send a result for a prompt exactly once; duplicates are ignored. */
  private respond(id: string, env: Envelope): boolean {
    if (this.resolved.has(id)) return false;
    this.resolved.add(id);
    this.prompts = this.prompts.filter((p) => p.id !== id);
    this.sendEnvelope(env);
    return true;
  }

  answerRead(id: string, text: string): boolean {
    const prompt = this.prompts.find((p) => p.id === id && p.tool === "read");
    if (!prompt) return false;
    return this.respond(id, resultOk(id, text));
  }

  answerSee(id: string, meta: ImageMeta): boolean {
    const prompt = this.prompts.find((p) => p.id === id && p.tool === "see");
    if (!prompt) return false;
    return this.respond(id, resultOk(id, imageResultValue(meta)));
  }

  cancelPrompt(id: string): boolean {
    const prompt = this.prompts.find((p) => p.id === id);
    if (!prompt) return false;
    return this.respond(id, resultError(id, "USER_CANCELLED", `${prompt.tool} dismissed`));
  }

  setPose(update: Partial<PoseState>): void {
    this.pose = { ...this.pose, ...update };
    this.emit();
  }
}

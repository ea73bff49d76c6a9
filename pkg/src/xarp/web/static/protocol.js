// Wire contract mirror for the browser client. One JSON object per
// WebSocket text frame; empty correlation ids are omitted on the wire.
export const PROTOCOL_VERSION = "0.1";
export const ALL_TOOLS = ["read", "write", "see", "head_pose"];
const KINDS = ["hello", "hello_ack", "tool_call", "tool_result", "error", "bye"];
export function encodeEnvelope(env) {
    const obj = { kind: env.kind };
    if (env.id)
        obj.id = env.id;
    obj.payload = env.payload;
    return JSON.stringify(obj);
}
/** Parse arbitrary frame text; returns null for anything malformed. */
export function decodeEnvelope(text) {
    let obj;
    try {
        obj = JSON.parse(text);
    }
    catch {
        return null;
    }
    if (typeof obj !== "object" || obj === null || Array.isArray(obj))
        return null;
    const record = obj;
    const kind = record.kind;
    if (typeof kind !== "string" || !KINDS.includes(kind))
        return null;
    const id = record.id ?? "";
    if (typeof id !== "string")
        return null;
    const payload = record.payload;
    if (typeof payload !== "object" || payload === null || Array.isArray(payload))
        return null;
    if ((kind === "tool_call" || kind === "tool_result") && id === "")
        return null;
    return { kind: kind, id, payload: payload };
}
// Canonical descriptor texts: shipped as data, used verbatim in hello.
const DESCRIPTORS = {
    read: {
        name: "read",
        description: "Requests a text input from the user.",
        params: {
            prompt: {
                type: "string",
                description: "Optional prompt shown next to the input affordance.",
                required: false,
            },
        },
        returns: { type: "string", description: "The user-entered text, verbatim." },
    },
    write: {
        name: "write",
        description: "Displays text to the user.",
        params: {
            text: { type: "string", description: "The text to display.", required: true },
        },
        returns: { type: "boolean", description: "True once the text is displayed." },
    },
    see: {
        name: "see",
        description: "Captures an RGB frame from the XR device.",
        params: {},
        returns: {
            type: "object",
            description: "Captured frame: mime, width, height, base64 data, captured_at.",
        },
    },
    head_pose: {
        name: "head_pose",
        description: "Provides the position and orientation of the XR device.",
        params: {},
        returns: {
            type: "object",
            description: "position [x,y,z] in meters and orientation [qx,qy,qz,qw].",
        },
    },
};
export function helloEnvelope(clientId, selected) {
    return {
        kind: "hello",
        id: "",
        payload: {
            protocol_version: PROTOCOL_VERSION,
            client_id: clientId,
            platform: "web",
            tools: selected.map((name) => DESCRIPTORS[name]),
        },
    };
}
export function resultOk(id, value) {
    return { kind: "tool_result", id, payload: { ok: true, value } };
}
export function resultError(id, code, message) {
    return { kind: "tool_result", id, payload: { ok: false, error: { code, message } } };
}

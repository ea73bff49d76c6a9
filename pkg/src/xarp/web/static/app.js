// DOM wiring for the three-pane layout: message log, pending prompts,
// controls (capabilities, pose sliders) + raw protocol log.
import { SessionController } from "./controller.js";
import { readImageFile } from "./image.js";
import { ALL_TOOLS } from "./protocol.js";
import { POSITION_RANGE_M, eulerToQuaternion } from "./pose.js";
const browserSocketFactory = (url, handlers) => {
    const ws = new WebSocket(url);
    ws.onopen = () => handlers.onOpen();
    ws.onmessage = (event) => handlers.onMessage(String(event.data));
    ws.onclose = () => handlers.onClose();
    ws.onerror = () => handlers.onError("websocket error");
    return { send: (text) => ws.send(text), close: () => ws.close() };
};
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
const statusBadge = el("status");
const banner = el("banner");
const sessionLabel = el("session-id");
const messageLog = el("messages");
const promptsPane = el("prompts");
const rawLog = el("raw-log");
const urlInput = el("server-url");
const connectButton = el("connect");
const disconnectButton = el("disconnect");
const capsBox = el("capabilities");
const quatLabel = el("quat");
urlInput.value = `ws://${location.host || "127.0.0.1:8080"}/ws`;
for (const tool of ALL_TOOLS) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = true;
    box.dataset.tool = tool;
    label.append(box, ` ${tool}`);
    capsBox.append(label);
}
const controller = new SessionController(render);
const sliderIds = ["pos-x", "pos-y", "pos-z", "yaw", "pitch", "roll"];
const sliderKey = {
    "pos-x": "x",
    "pos-y": "y",
    "pos-z": "z",
    yaw: "yawDeg",
    pitch: "pitchDeg",
    roll: "rollDeg",
};
for (const id of sliderIds) {
    const slider = el(id);
    if (id.startsWith("pos-")) {
        slider.min = String(-POSITION_RANGE_M);
        slider.max = String(POSITION_RANGE_M);
        slider.step = "0.1";
    }
    slider.addEventListener("input", () => {
        controller.setPose({ [sliderKey[id]]: Number(slider.value) });
        const out = el(`${id}-value`);
        out.value = slider.value;
    });
}
connectButton.addEventListener("click", () => {
    const selected = [...capsBox.querySelectorAll("input:checked")].map((box) => box.dataset.tool);
    controller.connect(urlInput.value, selected, browserSocketFactory);
});
disconnectButton.addEventListener("click", () => controller.disconnect());
function renderPrompt(promptId) {
    const prompt = controller.prompts.find((p) => p.id === promptId);
    if (!prompt)
        throw new Error("prompt vanished");
    const card = document.createElement("div");
    card.className = "prompt-card";
    const title = document.createElement("h3");
    title.textContent = `${prompt.tool} (call ${prompt.id})`;
    card.append(title);
    if (prompt.tool === "read") {
        if (prompt.prompt) {
            const question = document.createElement("p");
            question.textContent = prompt.prompt;
            card.append(question);
        }
        const field = document.createElement("input");
        field.type = "text";
        field.placeholder = "type a response";
        const submit = document.createElement("button");
        submit.textContent = "Send";
        submit.addEventListener("click", () => controller.answerRead(prompt.id, field.value));
        field.addEventListener("keydown", (event) => {
            if (event.key === "Enter")
                controller.answerRead(prompt.id, field.value);
        });
        card.append(field, submit);
    }
    else {
        const picker = document.createElement("input");
        picker.type = "file";
        picker.accept = "image/png,image/jpeg";
        const problem = document.createElement("p");
        problem.className = "inline-error";
        picker.addEventListener("change", async () => {
            const file = picker.files?.[0];
            if (!file)
                return;
            try {
                controller.answerSee(prompt.id, await readImageFile(file));
            }
            catch (err) {
                problem.textContent = String(err instanceof Error ? err.message : err);
            }
        });
        card.append(picker, problem);
    }
    const cancel = document.createElement("button");
    cancel.textContent = "Cancel";
    cancel.className = "cancel";
    cancel.addEventListener("click", () => controller.cancelPrompt(prompt.id));
    card.append(cancel);
    return card;
}
function render() {
    statusBadge.textContent = controller.status;
    statusBadge.dataset.status = controller.status;
    sessionLabel.textContent = controller.sessionId || "—";
    banner.textContent = controller.banner;
    banner.hidden = !controller.banner;
    connectButton.disabled = controller.status === "connecting" || controller.status === "connected";
    disconnectButton.disabled = controller.status !== "connected";
    messageLog.replaceChildren(...controller.messages.map((message) => {
        const item = document.createElement("li");
        item.className = message.kind;
        item.textContent = message.text;
        return item;
    }));
    promptsPane.replaceChildren(...controller.prompts.map((p) => renderPrompt(p.id)));
    rawLog.textContent = controller.rawLog
        .map((item) => `${item.direction === "sent" ? ">>" : "<<"} ${item.text}`)
        .join("\n");
    const q = eulerToQuaternion(controller.pose.yawDeg, controller.pose.pitchDeg, controller.pose.rollDeg);
    quatLabel.textContent = `[${q.map((c) => c.toFixed(4)).join(", ")}]`;
}
render();

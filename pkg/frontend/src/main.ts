// DOM wiring: canvas, layer toggle panel, click-to-goal, fault button.

import { BridgeClient } from "./client.js";
import { MARKER_LAYERS, Layer } from "./protocol.js";
import { renderScene } from "./render.js";
import { ViewerStore } from "./store.js";
import { Viewport, fitViewport, screenToWorld } from "./transform.js";

const params = new URLSearchParams(location.search);
const wsUrl =
  params.get("ws") ??
  `ws://${location.hostname || "127.0.0.1"}:${params.get("port") ?? "8765"}/bridge`;

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusLine = document.getElementById("status") as HTMLDivElement;
const togglePanel = document.getElementById("layers") as HTMLDivElement;
const faultButton = document.getElementById("fault") as HTMLButtonElement;

const store = new ViewerStore();
let viewport: Viewport | null = null;

function resize(): void {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  if (store.mapMeta) viewport = fitViewport(store.mapMeta, canvas.width, canvas.height);
}
window.addEventListener("resize", resize);

const client = new BridgeClient(wsUrl, {
  onFrame: (topic, msg) => {
    store.applyFrame(topic, msg);
    if (topic === "/costmap") resize();
  },
  onStatus: (env) => {
    if (env.op === "status") {
      store.applyStatusReply(env as never);
    }
  },
  onState: (connected) => {
    store.connected = connected;
  },
  onProtocolError: (detail) => console.warn("bridge:", detail),
});

// layer toggles: purely local visibility, the wire content stays buffered
for (const layer of MARKER_LAYERS) {
  const label = document.createElement("label");
  const box = document.createElement("input");
  box.type = "checkbox";
  box.checked = true;
  box.addEventListener("change", () => store.setVisible(layer as Layer, box.checked));
  label.appendChild(box);
  label.appendChild(document.createTextNode(layer));
  togglePanel.appendChild(label);
}

canvas.addEventListener("click", (ev) => {
  if (!viewport) return;
  const rect = canvas.getBoundingClientRect();
  const [wx, wy] = screenToWorld(viewport, ev.clientX - rect.left, ev.clientY - rect.top);
  client.setGoal(wx, wy);
});

faultButton.addEventListener("click", () => {
  const now = store.pose?.stamp ?? 0;
  client.injectFault(now, now + 5.0);
});

function frame(timeMs: number): void {
  if (!viewport && store.mapMeta) resize();
  if (viewport) {
    renderScene(ctx, store, viewport, canvas.width, canvas.height, timeMs);
  }
  const state = store.connected ? "connected" : "reconnecting...";
  const err = store.status?.level === "error" ? `  [${store.status.msg}]` : "";
  statusLine.textContent =
    `${state} - ${wsUrl}  pose=${store.pose ? store.pose.stamp.toFixed(1) + "s" : "-"}` +
    `  frames=${store.frameCount}${err}`;
  requestAnimationFrame(frame);
}

resize();
client.connect();
requestAnimationFrame(frame);

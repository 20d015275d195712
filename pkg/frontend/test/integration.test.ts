// Live round-trip against the real Python bridge: click-to-goal produces a
// plan promptly, fault injection blanks and restores the scan layer, and
// layer toggles touch nothing but visibility.
import { ChildProcess, spawn } from "node:child_process";
import net from "node:net";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { BridgeClient } from "../src/client.js";
import { MarkerFrame, PoseMsg } from "../src/protocol.js";
import { ViewerStore } from "../src/store.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const REPO = path.resolve(HERE, "..", "..");

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = net.createServer();
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as net.AddressInfo).port;
      srv.close(() => resolve(port));
    });
    srv.on("error", reject);
  });
}

async function waitFor<T>(
  probe: () => T | undefined,
  timeoutMs: number,
  what: string,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const got = probe();
    if (got !== undefined) return got;
    await new Promise((r) => setTimeout(r, 10));
  }
  throw new Error(`timed out waiting for ${what}`);
}

describe("viewer against a live bridge", () => {
  let server: ChildProcess;
  let client: BridgeClient;
  const store = new ViewerStore();
  let port: number;
  const planFrames: Array<{ at: number; msg: { goal: { x: number; y: number } } }> = [];
  const scanFrames: MarkerFrame[] = [];

  beforeAll(async () => {
    port = await freePort();
    server = spawn(
      "python3",
      ["-m", "clearbot", "run", "--map", "hallway_known",
        "--port", String(port), "--rate", "10"],
      {
        cwd: REPO,
        env: { ...process.env, PYTHONPATH: path.join(REPO, "src") },
        stdio: ["ignore", "ignore", "pipe"],
      },
    );
    client = new BridgeClient(
      `ws://127.0.0.1:${port}/bridge`,
      {
        onFrame: (topic, msg) => {
          store.applyFrame(topic, msg);
          if (topic === "/plan") {
            planFrames.push({ at: Date.now(), msg: msg as never });
          }
          if (topic === "/markers/scan") {
            scanFrames.push(msg as MarkerFrame);
          }
        },
        onState: (c) => (store.connected = c),
      },
      (url) => new WebSocket(url) as never,
      ["/pose", "/costmap", "/plan", "/markers/scan", "/markers/path", "/status"],
    );
    client.connect();
    await waitFor(() => (store.connected ? true : undefined), 15000, "connection");
    await waitFor(() => store.pose ?? undefined, 15000, "first pose");
    await waitFor(() => store.mapMeta ?? undefined, 15000, "map metadata");
  }, 40000);

  afterAll(() => {
    client?.close();
    server?.kill("SIGINT");
  });

  it("click on a free cell produces a rendered plan within 500 ms", async () => {
    const pose = store.pose as PoseMsg;
    const goal = { x: pose.x + 1.2, y: pose.y }; // open corridor ahead
    const clickedAt = Date.now();
    client.setGoal(goal.x, goal.y);
    const frame = await waitFor(
      () => planFrames.find((p) => Math.abs(p.msg.goal.x - goal.x) < 1e-6),
      5000,
      "a plan frame for the clicked goal",
    );
    expect(frame.at - clickedAt).toBeLessThan(500);
  }, 20000);

  it("fault injection blanks the scan layer on the next frame and expiry restores it", async () => {
    await waitFor(
      () => (scanFrames.some((f) => f.markers.length > 0) ? true : undefined),
      5000,
      "a populated scan frame",
    );
    const now = (store.pose as PoseMsg).stamp;
    const tStart = now + 0.15;
    const tEnd = tStart + 1.5;
    client.injectFault(tStart, tEnd);

    // the first scan captured inside the window must already be empty
    const blanked = await waitFor(
      () => scanFrames.find((f) => f.stamp >= tStart && f.stamp < tEnd),
      5000,
      "a scan frame inside the fault window",
    );
    expect(blanked.markers.length).toBe(0);

    const restored = await waitFor(
      () => scanFrames.find((f) => f.stamp >= tEnd),
      8000,
      "a scan frame after fault expiry",
    );
    expect(restored.markers.length).toBeGreaterThan(0);
  }, 30000);

  it("layer toggles change visibility only", () => {
    const before = store.markerCount("scan");
    store.setVisible("scan", false);
    expect(store.visibleFrames().map(([l]) => l)).not.toContain("scan");
    expect(store.markerCount("scan")).toBe(before);
    store.setVisible("scan", true);
    expect(store.visibleFrames().map(([l]) => l)).toContain("scan");
  });
});

import { describe, expect, it, vi } from "vitest";

import { BridgeClient, SocketLike, backoffDelay } from "../src/client.js";
import { SUBSCRIBE_TOPICS } from "../src/protocol.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.onclose?.();
  }
}

describe("BridgeClient", () => {
  it("subscribes to the standard topic set on open", () => {
    const sockets: FakeSocket[] = [];
    const client = new BridgeClient("ws://x/bridge", {}, () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    });
    client.connect();
    sockets[0].onopen!();
    const subs = sockets[0].sent.map((t) => JSON.parse(t));
    expect(subs.every((s) => s.op === "subscribe")).toBe(true);
    expect(subs.map((s) => s.topic)).toEqual(SUBSCRIBE_TOPICS);
    client.close();
  });

  it("routes publish frames and survives malformed ones", () => {
    const frames: Array<[string, unknown]> = [];
    const errors: string[] = [];
    const socket = new FakeSocket();
    const client = new BridgeClient(
      "ws://x/bridge",
      {
        onFrame: (topic, msg) => frames.push([topic, msg]),
        onProtocolError: (d) => errors.push(d),
      },
      () => socket,
    );
    client.connect();
    socket.onopen!();
    socket.onmessage!({ data: '{"op":"publish","topic":"/pose","msg":{"x":1}}' });
    socket.onmessage!({ data: "}{garbage" });
    socket.onmessage!({ data: '{"op":"publish","topic":"/pose","msg":{"x":2}}' });
    expect(frames).toEqual([
      ["/pose", { x: 1 }],
      ["/pose", { x: 2 }],
    ]);
    expect(errors).toHaveLength(1); // logged, session survived
    client.close();
  });

  it("reconnects with growing, capped backoff", () => {
    vi.useFakeTimers();
    try {
      const sockets: FakeSocket[] = [];
      const states: boolean[] = [];
      const client = new BridgeClient(
        "ws://x/bridge",
        { onState: (c) => states.push(c) },
        () => {
          const s = new FakeSocket();
          sockets.push(s);
          return s;
        },
      );
      client.connect();
      expect(sockets).toHaveLength(1);
      sockets[0].onclose!(); // server down
      vi.advanceTimersByTime(backoffDelay(0) + 1);
      expect(sockets).toHaveLength(2);
      sockets[1].onclose!();
      vi.advanceTimersByTime(backoffDelay(1) + 1);
      expect(sockets).toHaveLength(3);
      // a successful open resets the ladder
      sockets[2].onopen!();
      sockets[2].onclose!();
      vi.advanceTimersByTime(backoffDelay(0) + 1);
      expect(sockets).toHaveLength(4);
      expect(states).toEqual([false, false, true, false]);
      expect(backoffDelay(10)).toBe(8000); // cap
      client.close();
    } finally {
      vi.useRealTimers();
    }
  });

  it("publishes goals and faults in wire form", () => {
    const socket = new FakeSocket();
    const client = new BridgeClient("ws://x/bridge", {}, () => socket);
    client.connect();
    socket.onopen!();
    socket.sent.length = 0;
    client.setGoal(1.5, 2.5);
    client.injectFault(10, 15);
    expect(JSON.parse(socket.sent[0])).toEqual({
      op: "publish", topic: "/goal", msg: { x: 1.5, y: 2.5 },
    });
    expect(JSON.parse(socket.sent[1])).toEqual({
      op: "publish", topic: "/fault",
      msg: { kind: "lidar_blackout", t_start: 10, t_end: 15 },
    });
    client.close();
  });
});

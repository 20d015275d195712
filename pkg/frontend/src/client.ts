// Bridge session: subscribes to the standard topic set, feeds frames to the
// store, and reconnects with capped exponential backoff. The WebSocket
// constructor is injectable so the logic runs under tests (and node).

import { Envelope, SUBSCRIBE_TOPICS, decodeEnvelope, encodeEnvelope } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientCallbacks {
  onFrame?: (topic: string, msg: unknown) => void;
  onStatus?: (msg: Envelope) => void;
  onState?: (connected: boolean) => void;
  onProtocolError?: (detail: string) => void;
}

const BACKOFF_BASE_MS = 500;
const BACKOFF_CAP_MS = 8000;

export function backoffDelay(attempt: number): number {
  return Math.min(BACKOFF_CAP_MS, BACKOFF_BASE_MS * 2 ** attempt);
}

export class BridgeClient {
  private socket: SocketLike | null = null;
  private attempts = 0;
  private closed = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private callbacks: ClientCallbacks = {},
    private factory: SocketFactory = (u) =>
      new (globalThis as { WebSocket: new (url: string) => SocketLike }).WebSocket(u),
    private topics: string[] = SUBSCRIBE_TOPICS,
  ) {}

  connect(): void {
    if (this.closed) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.callbacks.onState?.(true);
      for (const topic of this.topics) {
        socket.send(encodeEnvelope({ op: "subscribe", topic }));
      }
    };
    socket.onmessage = (ev) => this.handleText(String(ev.data));
    socket.onerror = () => {
      /* onclose follows and schedules the retry */
    };
    socket.onclose = () => {
      this.callbacks.onState?.(false);
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.closed || this.timer !== null) return;
    const delay = backoffDelay(this.attempts);
    this.attempts += 1;
    this.timer = setTimeout(() => {
      this.timer = null;
      this.connect();
    }, delay);
  }

  /** One inbound frame; malformed data is logged and the session survives. */
  handleText(text: string): void {
    const env = decodeEnvelope(text, (detail) => {
      this.callbacks.onProtocolError?.(detail);
    });
    if (env === null) return;
    if (env.op === "publish" && typeof env.topic === "string") {
      this.callbacks.onFrame?.(env.topic, env.msg);
      return;
    }
    if (env.op === "status" || env.op === "topics") {
      this.callbacks.onStatus?.(env);
    }
  }

  publish(topic: string, msg: unknown): void {
    this.socket?.send(encodeEnvelope({ op: "publish", topic, msg }));
  }

  setGoal(x: number, y: number): void {
    this.publish("/goal", { x, y });
  }

  injectFault(tStart: number, tEnd: number): void {
    this.publish("/fault", { kind: "lidar_blackout", t_start: tStart, t_end: tEnd });
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.socket?.close();
  }
}

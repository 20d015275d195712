// Wire types for the bridge's five-op JSON envelope protocol.

export type Op = "subscribe" | "unsubscribe" | "publish" | "topics" | "status";

export interface Envelope {
  op: Op;
  topic?: string;
  type?: string;
  msg?: unknown;
  id?: string;
  throttle_ms?: number;
  [extra: string]: unknown;
}

export interface PoseMsg {
  stamp: number;
  x: number;
  y: number;
  theta: number;
}

export interface MarkerWire {
  id: number;
  kind: "dot" | "cell" | "arrow" | "avatar" | "point3d";
  x: number;
  y: number;
  z: number;
  yaw: number;
  scale: number;
  color: [number, number, number, number];
  flash_hz?: number;
}

export interface MarkerFrame {
  stamp: number;
  layer: string;
  markers: MarkerWire[];
}

export interface CostmapMsg {
  stamp: number;
  resolution: number;
  width: number;
  height: number;
  origin: { x: number; y: number; theta: number };
  probs: number[];
}

export interface StatusMsg {
  level: string;
  msg: string;
  [extra: string]: unknown;
}

export const MARKER_LAYERS = [
  "costmap",
  "pointcloud",
  "scan",
  "path",
  "particles",
  "humans",
  "signal",
] as const;
export type Layer = (typeof MARKER_LAYERS)[number];

export const SUBSCRIBE_TOPICS: string[] = [
  "/pose",
  "/costmap",
  "/plan",
  "/turn_signal",
  "/status",
  ...MARKER_LAYERS.map((l) => `/markers/${l}`),
];

export function encodeEnvelope(env: Envelope): string {
  return JSON.stringify(env);
}

/** Parse one inbound frame; malformed input is reported, never thrown. */
export function decodeEnvelope(
  text: string,
  onError: (detail: string) => void = console.warn,
): Envelope | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    onError(`unparseable frame: ${err}`);
    return null;
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    onError("envelope is not an object");
    return null;
  }
  const env = raw as Envelope;
  if (typeof env.op !== "string") {
    onError("envelope lacks an op");
    return null;
  }
  return env;
}

export function markerLayerOf(topic: string): Layer | null {
  const prefix = "/markers/";
  if (!topic.startsWith(prefix)) return null;
  const layer = topic.slice(prefix.length);
  return (MARKER_LAYERS as readonly string[]).includes(layer)
    ? (layer as Layer)
    : null;
}

// Canvas drawing. Kept free of DOM lookups so the scene logic can run under
// tests against a recording 2D-context stand-in.

import { MarkerWire, PoseMsg } from "./protocol.js";
import { ViewerStore } from "./store.js";
import { Viewport, flashVisible, rgbaCss, worldToScreen } from "./transform.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
}

function drawDot(ctx: Ctx2D, sx: number, sy: number, rPx: number): void {
  ctx.beginPath();
  ctx.arc(sx, sy, Math.max(1.5, rPx), 0, 2 * Math.PI);
  ctx.fill();
}

function drawArrow(ctx: Ctx2D, sx: number, sy: number, yaw: number, lenPx: number): void {
  const dx = Math.cos(-yaw); // screen y points down
  const dy = Math.sin(-yaw);
  const tipX = sx + dx * lenPx;
  const tipY = sy + dy * lenPx;
  ctx.beginPath();
  ctx.moveTo(sx, sy);
  ctx.lineTo(tipX, tipY);
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(tipX, tipY);
  ctx.lineTo(tipX - (dx * 0.35 + dy * 0.25) * lenPx, tipY - (dy * 0.35 - dx * 0.25) * lenPx);
  ctx.lineTo(tipX - (dx * 0.35 - dy * 0.25) * lenPx, tipY - (dy * 0.35 + dx * 0.25) * lenPx);
  ctx.closePath();
  ctx.fill();
}

function drawAvatar(ctx: Ctx2D, sx: number, sy: number, rPx: number): void {
  drawDot(ctx, sx, sy, rPx); // body
  ctx.beginPath();
  ctx.arc(sx, sy - rPx * 1.4, rPx * 0.55, 0, 2 * Math.PI); // head
  ctx.fill();
}

/** Draw one marker; returns false when a flashing marker is in its off phase. */
export function drawMarker(
  ctx: Ctx2D,
  vp: Viewport,
  m: MarkerWire,
  timeMs: number,
  anchor: PoseMsg | null,
): boolean {
  if (!flashVisible(m.flash_hz, timeMs)) return false;
  // signal arrows are robot-frame: anchor them to the live pose
  let wx = m.x;
  let wy = m.y;
  let yaw = m.yaw;
  if (anchor !== null) {
    const c = Math.cos(anchor.theta);
    const s = Math.sin(anchor.theta);
    wx = anchor.x + c * m.x - s * m.y;
    wy = anchor.y + s * m.x + c * m.y;
    yaw = anchor.theta + m.yaw;
  }
  const [sx, sy] = worldToScreen(vp, wx, wy);
  const sizePx = m.scale * vp.scale;
  ctx.fillStyle = rgbaCss(m.color);
  ctx.strokeStyle = rgbaCss(m.color);
  switch (m.kind) {
    case "cell":
      ctx.fillRect(sx - sizePx / 2, sy - sizePx / 2, sizePx, sizePx);
      break;
    case "arrow":
      ctx.lineWidth = 3;
      drawArrow(ctx, sx, sy, yaw, Math.max(18, sizePx));
      break;
    case "avatar":
      drawAvatar(ctx, sx, sy, Math.max(5, sizePx / 2));
      break;
    default: // dot, point3d
      drawDot(ctx, sx, sy, sizePx / 2);
  }
  return true;
}

function drawRobot(ctx: Ctx2D, vp: Viewport, pose: PoseMsg): void {
  const [sx, sy] = worldToScreen(vp, pose.x, pose.y);
  const r = Math.max(6, 0.18 * vp.scale);
  ctx.fillStyle = "rgba(60,120,255,0.9)";
  drawDot(ctx, sx, sy, r);
  ctx.strokeStyle = "rgba(255,255,255,0.9)";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(sx, sy);
  ctx.lineTo(sx + Math.cos(-pose.theta) * r * 1.6, sy + Math.sin(-pose.theta) * r * 1.6);
  ctx.stroke();
}

/** Full scene pass; returns markers drawn (flashing off-phase ones excluded). */
export function renderScene(
  ctx: Ctx2D,
  store: ViewerStore,
  vp: Viewport,
  canvasW: number,
  canvasH: number,
  timeMs: number,
): number {
  ctx.clearRect(0, 0, canvasW, canvasH);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, canvasW, canvasH);

  if (store.mapMeta) {
    const meta = store.mapMeta;
    const [x0, y0] = worldToScreen(vp, meta.origin.x, meta.origin.y + meta.height * meta.resolution);
    ctx.strokeStyle = "#3a4656";
    ctx.lineWidth = 1;
    ctx.strokeRect(x0, y0, meta.width * meta.resolution * vp.scale,
      meta.height * meta.resolution * vp.scale);
  }

  let drawn = 0;
  for (const [layer, frame] of store.visibleFrames()) {
    const anchor = layer === "signal" ? store.pose : null;
    for (const m of frame.markers) {
      if (drawMarker(ctx, vp, m, timeMs, anchor)) drawn += 1;
    }
  }
  if (store.pose) drawRobot(ctx, vp, store.pose);
  return drawn;
}

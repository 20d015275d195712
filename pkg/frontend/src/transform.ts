// World <-> screen mapping derived from the map metadata, plus the shared
// flash phase for blinking markers.

import { CostmapMsg } from "./protocol.js";

export interface Viewport {
  scale: number; // pixels per meter
  offsetX: number; // screen x of world origin
  offsetY: number; // screen y of world origin (y axis flipped)
}

/** Fit the map extent into the canvas with a margin, world y up. */
export function fitViewport(
  meta: Pick<CostmapMsg, "resolution" | "width" | "height" | "origin">,
  canvasW: number,
  canvasH: number,
  marginPx = 20,
): Viewport {
  const worldW = meta.width * meta.resolution;
  const worldH = meta.height * meta.resolution;
  const scale = Math.min(
    (canvasW - 2 * marginPx) / worldW,
    (canvasH - 2 * marginPx) / worldH,
  );
  const offsetX = marginPx - meta.origin.x * scale;
  const offsetY = canvasH - marginPx + meta.origin.y * scale;
  return { scale, offsetX, offsetY };
}

export function worldToScreen(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.offsetX + x * vp.scale, vp.offsetY - y * vp.scale];
}

export function screenToWorld(vp: Viewport, sx: number, sy: number): [number, number] {
  return [(sx - vp.offsetX) / vp.scale, (vp.offsetY - sy) / vp.scale];
}

/**
 * Square-wave flashing: a marker with flash_hz blinks on/off `flash_hz`
 * times per second (at 2 Hz: visible 0-250 ms, hidden 250-500 ms, ...).
 */
export function flashVisible(flashHz: number | undefined, timeMs: number): boolean {
  if (!flashHz || flashHz <= 0) return true;
  return Math.floor((timeMs / 1000) * flashHz * 2) % 2 === 0;
}

export function rgbaCss(color: [number, number, number, number]): string {
  const [r, g, b, a] = color;
  return `rgba(${Math.round(r * 255)},${Math.round(g * 255)},${Math.round(b * 255)},${a})`;
}

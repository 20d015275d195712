import { describe, expect, it } from "vitest";

import { MarkerWire } from "../src/protocol.js";
import { ViewerStore } from "../src/store.js";
import { Ctx2D, drawMarker, renderScene } from "../src/render.js";
import {
  fitViewport,
  flashVisible,
  rgbaCss,
  screenToWorld,
  worldToScreen,
} from "../src/transform.js";

const meta = { resolution: 0.1, width: 80, height: 20, origin: { x: 0, y: 0, theta: 0 } };

describe("viewport", () => {
  it("fits the map with margins and flips y", () => {
    const vp = fitViewport(meta, 820, 240, 10);
    const [x0, y0] = worldToScreen(vp, 0, 0);
    const [x1, y1] = worldToScreen(vp, 8, 2);
    expect(x0).toBeCloseTo(10);
    expect(y0).toBeCloseTo(230);
    expect(x1).toBeCloseTo(810);
    expect(y1).toBeCloseTo(30);
    expect(y1).toBeLessThan(y0); // world up is screen up
  });

  it("screenToWorld inverts worldToScreen", () => {
    const vp = fitViewport(meta, 640, 480);
    const [sx, sy] = worldToScreen(vp, 3.21, 1.07);
    const [wx, wy] = screenToWorld(vp, sx, sy);
    expect(wx).toBeCloseTo(3.21, 9);
    expect(wy).toBeCloseTo(1.07, 9);
  });
});

describe("flash phase", () => {
  it("blinks at 2 Hz in alternating 250 ms phases", () => {
    expect(flashVisible(2, 0)).toBe(true);
    expect(flashVisible(2, 200)).toBe(true);
    expect(flashVisible(2, 260)).toBe(false);
    expect(flashVisible(2, 499)).toBe(false);
    expect(flashVisible(2, 510)).toBe(true);
  });

  it("non-flashing markers are always visible", () => {
    expect(flashVisible(undefined, 12345)).toBe(true);
    expect(flashVisible(0, 777)).toBe(true);
  });
});

function fakeCtx(): Ctx2D & { ops: string[]; fills: string[] } {
  const ops: string[] = [];
  const fills: string[] = [];
  return {
    ops,
    fills,
    fillStyle: "",
    strokeStyle: "",
    lineWidth: 1,
    clearRect: () => ops.push("clear"),
    fillRect: () => ops.push("fillRect"),
    strokeRect: () => ops.push("strokeRect"),
    beginPath: () => ops.push("beginPath"),
    arc: () => ops.push("arc"),
    moveTo: () => ops.push("moveTo"),
    lineTo: () => ops.push("lineTo"),
    closePath: () => ops.push("closePath"),
    fill() {
      ops.push("fill");
      fills.push(String(this.fillStyle));
    },
    stroke: () => ops.push("stroke"),
  };
}

describe("rendering", () => {
  const vp = fitViewport(meta, 800, 200);

  it("draws marker colors exactly as they came off the wire", () => {
    const ctx = fakeCtx();
    const marker: MarkerWire = {
      id: 0, kind: "dot", x: 1, y: 1, z: 0, yaw: 0, scale: 0.05,
      color: [1, 0, 0, 0.8],
    };
    expect(drawMarker(ctx, vp, marker, 0, null)).toBe(true);
    expect(ctx.fills).toContain(rgbaCss([1, 0, 0, 0.8]));
    expect(rgbaCss([1, 0, 0, 0.8])).toBe("rgba(255,0,0,0.8)");
  });

  it("skips flashing markers in their off phase", () => {
    const ctx = fakeCtx();
    const arrow: MarkerWire = {
      id: 0, kind: "arrow", x: 0, y: 0, z: 0.3, yaw: Math.PI / 2, scale: 0.3,
      color: [1, 0.75, 0, 1], flash_hz: 2,
    };
    expect(drawMarker(ctx, vp, arrow, 260, { stamp: 0, x: 1, y: 1, theta: 0 })).toBe(false);
    expect(ctx.ops).toHaveLength(0);
    expect(drawMarker(ctx, vp, arrow, 0, { stamp: 0, x: 1, y: 1, theta: 0 })).toBe(true);
  });

  it("hidden layers are skipped entirely", () => {
    const store = new ViewerStore();
    store.mapMeta = { stamp: 0, probs: [], ...meta };
    store.applyFrame("/markers/scan", {
      stamp: 0, layer: "scan",
      markers: [{ id: 0, kind: "dot", x: 1, y: 1, z: 0, yaw: 0, scale: 0.05, color: [1, 0, 0, 1] }],
    });
    const shown = renderScene(fakeCtx(), store, vp, 800, 200, 0);
    expect(shown).toBe(1);
    store.setVisible("scan", false);
    const hidden = renderScene(fakeCtx(), store, vp, 800, 200, 0);
    expect(hidden).toBe(0);
  });
});

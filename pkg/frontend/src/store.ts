// Latest-frame-per-layer buffer between the socket and the renderer.
//
// The viewer holds no truth of its own: everything drawn comes from these
// frames, so reconnecting and replaying latched topics reproduces the scene.

import {
  CostmapMsg,
  Layer,
  MARKER_LAYERS,
  MarkerFrame,
  PoseMsg,
  StatusMsg,
  markerLayerOf,
} from "./protocol.js";

export class ViewerStore {
  frames = new Map<Layer, MarkerFrame>();
  visible = new Set<Layer>(MARKER_LAYERS);
  pose: PoseMsg | null = null;
  mapMeta: CostmapMsg | null = null;
  status: StatusMsg | null = null;
  connected = false;
  frameCount = 0;
  errorCount = 0;

  /** Route one publish frame into the scene state. */
  applyFrame(topic: string, msg: unknown): void {
    this.frameCount += 1;
    const layer = markerLayerOf(topic);
    if (layer !== null) {
      this.frames.set(layer, msg as MarkerFrame);
      return;
    }
    if (topic === "/pose") {
      this.pose = msg as PoseMsg;
      return;
    }
    if (topic === "/costmap") {
      this.mapMeta = msg as CostmapMsg;
      return;
    }
    if (topic === "/status") {
      this.status = msg as StatusMsg;
      if ((msg as StatusMsg).level === "error") this.errorCount += 1;
      return;
    }
    // /plan and /turn_signal arrive as raw topics too; the marker layers
    // already carry their visual form, so nothing else to do here
  }

  applyStatusReply(msg: StatusMsg): void {
    this.status = msg;
    if (msg.level === "error") this.errorCount += 1;
  }

  /** Toggles change visibility only; buffered wire content stays intact. */
  setVisible(layer: Layer, on: boolean): void {
    if (on) this.visible.add(layer);
    else this.visible.delete(layer);
  }

  visibleFrames(): Array<[Layer, MarkerFrame]> {
    const out: Array<[Layer, MarkerFrame]> = [];
    for (const layer of MARKER_LAYERS) {
      const frame = this.frames.get(layer);
      if (frame && this.visible.has(layer)) out.push([layer, frame]);
    }
    return out;
  }

  markerCount(layer: Layer): number {
    return this.frames.get(layer)?.markers.length ?? 0;
  }
}

/**
 * Snapshot buffer: the render loop runs at display rate while snapshots
 * arrive at ~50 Hz, so frames are interpolated between the two most recent
 * snapshots (with a fixed render delay) and continuous quantities lerped.
 */

import type { StateSnapshot } from "./protocol.js";

export interface RenderSample {
  tick: number;
  time: number;
  q: number[];
  linkPoints: number[][];
  tipPosition: number[];
  tipRotation: number[][];
  mode: string;
  docking: string;
  tep: { lateral: number; axial: number; angle: number };
  extrusion: number;
  stale: boolean;
}

const lerp = (a: number, b: number, s: number) => a + (b - a) * s;

function lerpArray(a: number[], b: number[], s: number): number[] {
  return a.map((v, i) => lerp(v, b[i] ?? v, s));
}

function lerpPoints(a: number[][], b: number[][], s: number): number[][] {
  if (a.length !== b.length) return b;
  return a.map((p, i) => lerpArray(p, b[i], s));
}

export class SnapshotBuffer {
  private prev: StateSnapshot | null = null;
  private latest: StateSnapshot | null = null;
  private latestArrival = 0; // client clock, seconds
  /** Render this far behind the newest snapshot so there is one to blend to. */
  renderDelay = 0.04;
  /** Beyond this holdover the stream is considered stalled. */
  staleAfter = 0.5;

  push(snap: StateSnapshot, arrivalTime: number): void {
    if (this.latest !== null && snap.tick < this.latest.tick) {
      return; // out-of-order: drop
    }
    this.prev = this.latest;
    this.latest = snap;
    this.latestArrival = arrivalTime;
  }

  get current(): StateSnapshot | null {
    return this.latest;
  }

  /** Interpolated view of the stream at the given client time. */
  sample(clientTime: number): RenderSample | null {
    const latest = this.latest;
    if (latest === null) return null;
    const prev = this.prev;
    const age = clientTime - this.latestArrival;
    let s = 1.0;
    if (prev !== null && latest.time > prev.time) {
      const span = latest.time - prev.time;
      // place the render point renderDelay behind "now" on the stream clock
      s = Math.max(0, Math.min(1, (age + span - this.renderDelay) / span));
    }
    const from = prev ?? latest;
    return {
      tick: latest.tick,
      time: lerp(from.time, latest.time, s),
      q: lerpArray(from.q, latest.q, s),
      linkPoints: lerpPoints(from.link_points, latest.link_points, s),
      tipPosition: lerpArray(from.tip_pose.translation, latest.tip_pose.translation, s),
      tipRotation: latest.tip_pose.rotation,
      mode: latest.mode,
      docking: latest.docking,
      tep: latest.tep,
      extrusion: lerp(from.extrusion, latest.extrusion, s),
      stale: age > this.staleAfter,
    };
  }
}

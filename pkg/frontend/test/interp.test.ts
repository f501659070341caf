import { describe, expect, it } from "vitest";

import { SnapshotBuffer } from "../src/interp.js";
import type { StateSnapshot } from "../src/protocol.js";

function snap(tick: number, time: number, x: number): StateSnapshot {
  return {
    type: "state_snapshot",
    protocol_version: "1",
    session_id: "s",
    tick,
    time,
    q: [x, 0, 0, 0, 0, 0, 0],
    link_points: [
      [0, 0, 0],
      [x, 0, 0],
    ],
    tip_pose: { rotation: [[1, 0, 0], [0, 1, 0], [0, 0, 1]], translation: [x, 0, 0] },
    mode: "teleop_translational",
    tep: { lateral: 0, axial: -0.03 + x, angle: 0 },
    docking: "away",
    extrusion: x,
  };
}

describe("snapshot interpolation", () => {
  it("returns null before any snapshot", () => {
    expect(new SnapshotBuffer().sample(0)).toBeNull();
  });

  it("lerps continuous quantities between the last two snapshots", () => {
    const buf = new SnapshotBuffer();
    buf.renderDelay = 0.02;
    buf.push(snap(0, 0.0, 0.0), 10.0);
    buf.push(snap(2, 0.02, 1.0), 10.02);
    // at arrival time the render point sits renderDelay behind: s = 0
    const early = buf.sample(10.02)!;
    expect(early.tipPosition[0]).toBeCloseTo(0.0, 6);
    // renderDelay later the render point reaches the latest snapshot: s = 1
    const late = buf.sample(10.04)!;
    expect(late.tipPosition[0]).toBeCloseTo(1.0, 6);
    const mid = buf.sample(10.03)!;
    expect(mid.tipPosition[0]).toBeGreaterThan(0.1);
    expect(mid.tipPosition[0]).toBeLessThan(0.9);
    expect(mid.q[0]).toBeCloseTo(mid.tipPosition[0], 6);
    expect(mid.extrusion).toBeCloseTo(mid.tipPosition[0], 6);
  });

  it("produces distinct frames at display rate from a 50 Hz stream", () => {
    const buf = new SnapshotBuffer();
    buf.renderDelay = 0.04;
    let arrival = 0;
    for (let k = 0; k <= 5; k++) {
      buf.push(snap(2 * k, 0.02 * k, 0.02 * k), (arrival = k * 0.02));
    }
    // sample inside the rising window (renderDelay behind the stream head):
    // age in (0.02, 0.04) maps across the latest snapshot interval
    const positions: number[] = [];
    for (let f = 0; f < 4; f++) {
      positions.push(buf.sample(arrival + 0.022 + f * 0.004)!.tipPosition[0]);
    }
    for (let i = 1; i < positions.length; i++) {
      expect(positions[i]).toBeGreaterThan(positions[i - 1]); // smooth, monotone
    }
  });

  it("drops out-of-order snapshots and flags a stalled stream", () => {
    const buf = new SnapshotBuffer();
    buf.push(snap(4, 0.04, 0.4), 1.0);
    buf.push(snap(2, 0.02, 0.2), 1.01); // stale: dropped
    expect(buf.current!.tick).toBe(4);
    expect(buf.sample(1.05)!.stale).toBe(false);
    expect(buf.sample(1.95)!.stale).toBe(true);
  });

  it("holds the last pose when the stream stops", () => {
    const buf = new SnapshotBuffer();
    buf.push(snap(0, 0.0, 0.0), 0.0);
    buf.push(snap(2, 0.02, 1.0), 0.02);
    const frozen = buf.sample(5.0)!;
    expect(frozen.tipPosition[0]).toBeCloseTo(1.0, 6);
  });
});

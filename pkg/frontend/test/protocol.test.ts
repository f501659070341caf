import { describe, expect, it } from "vitest";

import {
  PROTOCOL_VERSION,
  ProtocolError,
  decodeServerMessage,
  encodeClientMessage,
  pedalFrame,
  trialControl,
} from "../src/protocol.js";

describe("protocol", () => {
  it("round-trips pedal frames through the wire encoding", () => {
    const frame = pedalFrame("abc", [true, false, false, true], [0.5, -1], 0.25, 1.5);
    const decoded = JSON.parse(encodeClientMessage(frame));
    expect(decoded).toEqual(frame);
    expect(decoded.protocol_version).toBe(PROTOCOL_VERSION);
  });

  it("clamps pedal axes to [-1, 1]", () => {
    const frame = pedalFrame("abc", [true, false, false, false], [5, -7], 9, 0);
    expect(frame.joystick).toEqual([1, -1]);
    expect(frame.rocker).toBe(1);
  });

  it("builds trial controls with extras", () => {
    const msg = trialControl("abc", "start", { task_id: 2, seed: 7 });
    expect(msg.action).toBe("start");
    expect(msg.task_id).toBe(2);
    expect(JSON.parse(encodeClientMessage(msg)).seed).toBe(7);
  });

  it("decodes snapshots and scene info", () => {
    const snap = {
      type: "state_snapshot",
      protocol_version: "1",
      session_id: "s",
      tick: 10,
      time: 0.1,
      q: [0, 0, 0, 0, 0, 0, 0],
      link_points: [[0, 0, 0]],
      tip_pose: { rotation: [[1, 0, 0], [0, 1, 0], [0, 0, 1]], translation: [0, 0, 0] },
      mode: "hold",
      tep: { lateral: 0, axial: -0.03, angle: 0 },
      docking: "away",
      extrusion: 0,
    };
    const msg = decodeServerMessage(JSON.stringify(snap));
    expect(msg.type).toBe("state_snapshot");
  });

  it("rejects unknown types and wrong versions", () => {
    expect(() => decodeServerMessage('{"type":"nope","protocol_version":"1"}')).toThrow(ProtocolError);
    expect(() =>
      decodeServerMessage('{"type":"state_snapshot","protocol_version":"0"}'),
    ).toThrow(ProtocolError);
    expect(() => decodeServerMessage("{bad json")).toThrow(ProtocolError);
  });
});

/**
 * Wire protocol mirror: JSON messages, one per WebSocket text frame.
 * Must stay in lockstep with the server's message schema.
 */

export const PROTOCOL_VERSION = "1";

export interface PoseJson {
  rotation: number[][];
  translation: number[];
}

export interface StateSnapshot {
  type: "state_snapshot";
  protocol_version: string;
  session_id: string;
  tick: number;
  time: number;
  q: number[];
  link_points: number[][];
  tip_pose: PoseJson;
  mode: string;
  tep: { lateral: number; axial: number; angle: number };
  docking: string;
  extrusion: number;
  events?: Record<string, unknown>[];
  camera_overlay?: { tep: number[] | null; tool: number[] | null } | null;
  trial?: { task_id: number; seed: number; running: boolean; participant_id: string } | null;
  record?: Record<string, unknown> | null;
}

export interface SceneInfo {
  type: "scene_info";
  protocol_version: string;
  session_id: string;
  globe_center: number[];
  globe_radius: number;
  cornea_axis: number[];
  cornea_half_angle: number;
  tep_pose: PoseJson;
  lumen_inner_diameter: number;
  lumen_length: number;
  rod_diameter: number;
  shaft_length: number;
  image_size: number[];
}

export interface ErrorMessage {
  type: "error";
  protocol_version: string;
  session_id: string;
  code: string;
  message: string;
}

export interface PedalFrame {
  type: "pedal_frame";
  protocol_version: string;
  session_id: string;
  t_client: number;
  buttons: [boolean, boolean, boolean, boolean];
  joystick: [number, number];
  rocker: number;
}

export interface TrialControl {
  type: "trial_control";
  protocol_version: string;
  session_id: string;
  action: "start" | "abort" | "reset" | "submit_tlx" | "camera_inset";
  task_id?: number;
  seed?: number;
  participant_id?: string;
  tlx?: Record<string, number | string>;
  visible?: boolean;
  at_time?: number;
}

export type ServerMessage = StateSnapshot | SceneInfo | ErrorMessage;
export type ClientMessage = PedalFrame | TrialControl;

export class ProtocolError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

export function decodeServerMessage(text: string): ServerMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (e) {
    throw new ProtocolError("bad_message", `invalid JSON: ${(e as Error).message}`);
  }
  if (typeof obj !== "object" || obj === null) {
    throw new ProtocolError("bad_message", "message must be a JSON object");
  }
  const msg = obj as Record<string, unknown>;
  if (msg.protocol_version !== PROTOCOL_VERSION) {
    throw new ProtocolError("bad_version", `unsupported protocol_version ${msg.protocol_version}`);
  }
  switch (msg.type) {
    case "state_snapshot":
    case "scene_info":
    case "error":
      return msg as unknown as ServerMessage;
    default:
      throw new ProtocolError("bad_message", `unknown message type ${String(msg.type)}`);
  }
}

export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

export function pedalFrame(
  sessionId: string,
  buttons: [boolean, boolean, boolean, boolean],
  joystick: [number, number],
  rocker: number,
  tClient: number,
): PedalFrame {
  const clamp = (v: number) => Math.max(-1, Math.min(1, v));
  return {
    type: "pedal_frame",
    protocol_version: PROTOCOL_VERSION,
    session_id: sessionId,
    t_client: tClient,
    buttons,
    joystick: [clamp(joystick[0]), clamp(joystick[1])],
    rocker: clamp(rocker),
  };
}

export function trialControl(
  sessionId: string,
  action: TrialControl["action"],
  extra: Partial<TrialControl> = {},
): TrialControl {
  return {
    type: "trial_control",
    protocol_version: PROTOCOL_VERSION,
    session_id: sessionId,
    action,
    ...extra,
  };
}

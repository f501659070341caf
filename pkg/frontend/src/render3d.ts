/**
 * Minimal 3D line renderer on a 2D canvas: orbitable camera, perspective
 * projection, and the scene draw (arm polyline, rod, eye globe wireframe,
 * trocar axis, docking corridor colors).
 */

import type { SceneInfo } from "./protocol.js";
import type { RenderSample } from "./interp.js";

export type Vec3 = [number, number, number];

export const v3 = {
  sub: (a: Vec3, b: Vec3): Vec3 => [a[0] - b[0], a[1] - b[1], a[2] - b[2]],
  add: (a: Vec3, b: Vec3): Vec3 => [a[0] + b[0], a[1] + b[1], a[2] + b[2]],
  scale: (a: Vec3, s: number): Vec3 => [a[0] * s, a[1] * s, a[2] * s],
  dot: (a: Vec3, b: Vec3): number => a[0] * b[0] + a[1] * b[1] + a[2] * b[2],
  cross: (a: Vec3, b: Vec3): Vec3 => [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ],
  norm: (a: Vec3): number => Math.hypot(a[0], a[1], a[2]),
  unit: (a: Vec3): Vec3 => {
    const n = Math.hypot(a[0], a[1], a[2]) || 1;
    return [a[0] / n, a[1] / n, a[2] / n];
  },
};

/** Orbit camera around a target point; world z is up. */
export class OrbitCamera {
  constructor(
    public target: Vec3 = [0.8, 0, 0.35],
    public yaw = -2.4,
    public pitch = 0.45,
    public distance = 0.9,
    public focal = 900,
  ) {}

  orbit(dYaw: number, dPitch: number): void {
    this.yaw += dYaw;
    this.pitch = Math.max(-1.45, Math.min(1.45, this.pitch + dPitch));
  }

  zoom(factor: number): void {
    this.distance = Math.max(0.1, Math.min(5.0, this.distance * factor));
  }

  pan(dx: number, dy: number): void {
    const { right, up } = this.basis();
    this.target = v3.add(this.target, v3.add(v3.scale(right, dx), v3.scale(up, dy)));
  }

  position(): Vec3 {
    const cp = Math.cos(this.pitch);
    return v3.add(this.target, [
      this.distance * cp * Math.cos(this.yaw),
      this.distance * cp * Math.sin(this.yaw),
      this.distance * Math.sin(this.pitch),
    ]);
  }

  basis(): { forward: Vec3; right: Vec3; up: Vec3 } {
    const eye = this.position();
    const forward = v3.unit(v3.sub(this.target, eye));
    const right = v3.unit(v3.cross(forward, [0, 0, 1]));
    const up = v3.cross(right, forward);
    return { forward, right, up };
  }

  /**
   * Perspective projection to canvas pixels.
   * Returns null when the point is behind the camera.
   */
  project(p: Vec3, width: number, height: number): [number, number, number] | null {
    const eye = this.position();
    const { forward, right, up } = this.basis();
    const rel = v3.sub(p, eye);
    const z = v3.dot(rel, forward);
    if (z <= 1e-6) return null;
    const x = v3.dot(rel, right);
    const y = v3.dot(rel, up);
    return [width / 2 + (this.focal * x) / z, height / 2 - (this.focal * y) / z, z];
  }
}

type Ctx = CanvasRenderingContext2D;

function stroke(ctx: Ctx, pts: (readonly [number, number, number] | null)[], color: string, width = 1.5): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  let pen = false;
  for (const p of pts) {
    if (p === null) {
      pen = false;
      continue;
    }
    if (pen) ctx.lineTo(p[0], p[1]);
    else ctx.moveTo(p[0], p[1]);
    pen = true;
  }
  ctx.stroke();
}

function circlePoints(center: Vec3, axisA: Vec3, axisB: Vec3, radius: number, n = 40): Vec3[] {
  const pts: Vec3[] = [];
  for (let i = 0; i <= n; i++) {
    const t = (2 * Math.PI * i) / n;
    pts.push(
      v3.add(center, v3.add(v3.scale(axisA, radius * Math.cos(t)), v3.scale(axisB, radius * Math.sin(t)))),
    );
  }
  return pts;
}

export const DOCKING_COLORS: Record<string, string> = {
  away: "#9aa4b2",
  aligned: "#e8c35a",
  docked: "#5ad17e",
};

export function drawScene(
  ctx: Ctx,
  cam: OrbitCamera,
  scene: SceneInfo,
  sample: RenderSample | null,
  width: number,
  height: number,
): void {
  ctx.fillStyle = "#10151c";
  ctx.fillRect(0, 0, width, height);
  const P = (p: Vec3) => cam.project(p, width, height);

  // floor grid under the phantom
  const cz = scene.globe_center[2] - 0.08;
  for (let i = -4; i <= 4; i++) {
    const s = 0.05;
    stroke(ctx, [P([scene.globe_center[0] + i * s, -4 * s, cz]), P([scene.globe_center[0] + i * s, 4 * s, cz])], "#1d2633", 1);
    stroke(ctx, [P([scene.globe_center[0] - 4 * s, i * s, cz]), P([scene.globe_center[0] + 4 * s, i * s, cz])], "#1d2633", 1);
  }

  // eye globe: three great circles + cornea cap rim
  const c = scene.globe_center as Vec3;
  const r = scene.globe_radius;
  stroke(ctx, circlePoints(c, [1, 0, 0], [0, 1, 0], r).map(P), "#41566e");
  stroke(ctx, circlePoints(c, [1, 0, 0], [0, 0, 1], r).map(P), "#41566e");
  stroke(ctx, circlePoints(c, [0, 1, 0], [0, 0, 1], r).map(P), "#41566e");
  const axis = v3.unit(scene.cornea_axis as Vec3);
  const tiltA = v3.unit(v3.cross(axis, Math.abs(axis[2]) > 0.9 ? [1, 0, 0] : [0, 0, 1]));
  const tiltB = v3.cross(axis, tiltA);
  const capR = r * Math.sin(scene.cornea_half_angle);
  const capC = v3.add(c, v3.scale(axis, r * Math.cos(scene.cornea_half_angle)));
  stroke(ctx, circlePoints(capC, tiltA, tiltB, capR).map(P), "#74d0e8", 2);

  // trocar entry point and lumen axis
  const tep = scene.tep_pose.translation as Vec3;
  const lumenZ: Vec3 = [
    scene.tep_pose.rotation[0][2],
    scene.tep_pose.rotation[1][2],
    scene.tep_pose.rotation[2][2],
  ];
  stroke(ctx, [P(v3.sub(tep, v3.scale(lumenZ, 0.02))), P(v3.add(tep, v3.scale(lumenZ, scene.lumen_length)))], "#e8725a", 2);
  const tepPx = P(tep);
  if (tepPx) {
    ctx.fillStyle = "#e8725a";
    ctx.beginPath();
    ctx.arc(tepPx[0], tepPx[1], 4, 0, 2 * Math.PI);
    ctx.fill();
  }

  if (sample === null) return;

  // arm polyline
  const joints = sample.linkPoints.map((p) => P(p as Vec3));
  stroke(ctx, joints, "#8fa8c8", 3);
  for (const j of joints) {
    if (!j) continue;
    ctx.fillStyle = "#b9cbe2";
    ctx.beginPath();
    ctx.arc(j[0], j[1], 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  // instrument rod: shaft back from the tip, extrusion ahead of it
  const tip = sample.tipPosition as Vec3;
  const rodZ: Vec3 = [sample.tipRotation[0][2], sample.tipRotation[1][2], sample.tipRotation[2][2]];
  const color = DOCKING_COLORS[sample.docking] ?? "#9aa4b2";
  stroke(ctx, [P(v3.sub(tip, v3.scale(rodZ, scene.shaft_length))), P(tip)], color, 2.5);
  if (sample.extrusion > 0) {
    stroke(ctx, [P(tip), P(v3.add(tip, v3.scale(rodZ, sample.extrusion)))], "#ffffff", 1.5);
  }
  const tipPx = P(tip);
  if (tipPx) {
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(tipPx[0], tipPx[1], 3.5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

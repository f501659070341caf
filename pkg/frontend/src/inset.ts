/**
 * Task-3 tip-camera inset: rendered client-side from the projected overlay
 * coordinates the server computes (no pixel streaming). Tracks its own
 * visibility so the session can accumulate camera utilisation.
 */

import type { SceneInfo, StateSnapshot } from "./protocol.js";

export class CameraInset {
  visible = false;

  /** Returns true when the visibility actually changed (emit a control). */
  setVisible(on: boolean, taskId: number | null): boolean {
    if (taskId !== 3) return false; // inset exists only for task 3
    if (on === this.visible) return false;
    this.visible = on;
    return true;
  }

  draw(ctx: CanvasRenderingContext2D, scene: SceneInfo, snap: StateSnapshot, w: number, h: number): void {
    const sx = w / scene.image_size[0];
    const sy = h / scene.image_size[1];
    ctx.fillStyle = "#05070a";
    ctx.fillRect(0, 0, w, h);
    ctx.strokeStyle = "#74d0e8";
    ctx.lineWidth = 2;
    ctx.strokeRect(1, 1, w - 2, h - 2);

    // crosshair at the image centre
    ctx.strokeStyle = "#31445c";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(w / 2 - 10, h / 2);
    ctx.lineTo(w / 2 + 10, h / 2);
    ctx.moveTo(w / 2, h / 2 - 10);
    ctx.lineTo(w / 2, h / 2 + 10);
    ctx.stroke();

    const overlay = snap.camera_overlay;
    if (!overlay) return;
    if (overlay.tep) {
      const [u, v] = overlay.tep;
      ctx.strokeStyle = "#e8725a";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(u * sx, v * sy, 8, 0, 2 * Math.PI);
      ctx.stroke();
    }
    if (overlay.tool) {
      const [u, v] = overlay.tool;
      ctx.fillStyle = "#5ad17e";
      ctx.beginPath();
      ctx.arc(u * sx, v * sy, 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}

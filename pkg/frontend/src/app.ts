/**
 * Operator console wiring: one WebSocket session, decoupled input and
 * render loops, HUD, camera inset, and the post-trial workload form.
 *
 * Fail-safe rules: losing the window focus clears every held input; a
 * dropped connection disables input entirely (no frames means no motion).
 */

import { PedalInput, samplesEqual, type PedalSample, NEUTRAL } from "./input.js";
import { SnapshotBuffer } from "./interp.js";
import { CameraInset } from "./inset.js";
import {
  decodeServerMessage,
  encodeClientMessage,
  pedalFrame,
  trialControl,
  type SceneInfo,
  type StateSnapshot,
} from "./protocol.js";
import { DOCKING_COLORS, OrbitCamera, drawScene } from "./render3d.js";
import { buildTlxForm } from "./tlx.js";

const INPUT_HZ = 60;
const KEEPALIVE_S = 0.15; // resend unchanged frames at ~7 Hz (staleness guard)

interface Elements {
  canvas: HTMLCanvasElement;
  insetCanvas: HTMLCanvasElement;
  hud: HTMLElement;
  banner: HTMLElement;
  tlx: HTMLElement;
  startButtons: HTMLElement;
}

export class OperatorConsole {
  private ws: WebSocket | null = null;
  private sessionId = "";
  private scene: SceneInfo | null = null;
  private buffer = new SnapshotBuffer();
  private input = new PedalInput();
  private inset = new CameraInset();
  private cam = new OrbitCamera();
  private connected = false;
  private lastSent: PedalSample | null = null;
  private lastSentAt = 0;
  private lastRecord: Record<string, unknown> | null = null;
  private taskId: number | null = null;
  private inputTimer: number | null = null;
  private frames = 0;
  private fps = 0;
  private fpsWindowStart = 0;

  constructor(private el: Elements, private url: string) {}

  connect(): void {
    this.el.banner.textContent = "connecting…";
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.connected = true;
      this.el.banner.textContent = "";
    };
    ws.onclose = () => {
      // deadman semantics: no connection => no motion, inputs disabled
      this.connected = false;
      this.input.blur();
      this.el.banner.textContent = "connection lost: inputs disabled, reconnecting";
      setTimeout(() => this.connect(), 1000);
    };
    ws.onmessage = (ev) => this.onMessage(String(ev.data));
  }

  private onMessage(text: string): void {
    const msg = decodeServerMessage(text);
    if (msg.type === "scene_info") {
      this.scene = msg;
      this.sessionId = msg.session_id;
      this.cam.target = [msg.globe_center[0], msg.globe_center[1], msg.globe_center[2]];
      return;
    }
    if (msg.type === "error") {
      this.el.banner.textContent = `server: ${msg.code}: ${msg.message}`;
      return;
    }
    this.onSnapshot(msg);
  }

  private onSnapshot(snap: StateSnapshot): void {
    this.buffer.push(snap, performance.now() / 1000);
    if (snap.trial) this.taskId = snap.trial.task_id;
    if (snap.record && snap.record !== this.lastRecord) {
      this.lastRecord = snap.record;
      this.onTrialEnd(snap.record);
    }
  }

  // -- controls ---------------------------------------------------------------

  startTrial(taskId: number, seed: number): void {
    this.lastRecord = null;
    this.taskId = taskId;
    this.inset.visible = false;
    this.send(trialControl(this.sessionId, "start", { task_id: taskId, seed }));
  }

  abortTrial(): void {
    this.send(trialControl(this.sessionId, "abort"));
  }

  toggleCameraInset(): void {
    if (this.inset.setVisible(!this.inset.visible, this.taskId)) {
      this.send(trialControl(this.sessionId, "camera_inset", { visible: this.inset.visible }));
    }
  }

  private onTrialEnd(record: Record<string, unknown>): void {
    const ok = record.success ? "success" : `failure (${record.failure_reason})`;
    this.el.banner.textContent = `trial finished: ${ok} in ${(record.duration as number).toFixed(1)} s`;
    buildTlxForm(this.el.tlx, String(record.participant_id ?? "operator"), Number(record.task_id), (payload) => {
      this.send(trialControl(this.sessionId, "submit_tlx", { tlx: payload }));
    });
  }

  private send(msg: Parameters<typeof encodeClientMessage>[0]): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encodeClientMessage(msg));
    }
  }

  // -- input loop ---------------------------------------------------------------

  bindInputs(): void {
    window.addEventListener("keydown", (e) => {
      if (e.code === "Tab") e.preventDefault(); // Tab is the mode toggle
      if (e.code === "KeyV") {
        this.toggleCameraInset();
        return;
      }
      this.input.keyDown(e.code);
    });
    window.addEventListener("keyup", (e) => this.input.keyUp(e.code));
    window.addEventListener("blur", () => this.input.blur());

    // orbit controls on the main canvas
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.el.canvas.addEventListener("mousedown", (e) => {
      dragging = true;
      lastX = e.clientX;
      lastY = e.clientY;
    });
    window.addEventListener("mouseup", () => (dragging = false));
    window.addEventListener("mousemove", (e) => {
      if (!dragging) return;
      this.cam.orbit(-(e.clientX - lastX) * 0.008, (e.clientY - lastY) * 0.008);
      lastX = e.clientX;
      lastY = e.clientY;
    });
    this.el.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.cam.zoom(Math.exp(e.deltaY * 0.001));
    });

    this.inputTimer = window.setInterval(() => this.inputTick(), 1000 / INPUT_HZ);
  }

  private gamepad(): Gamepad | null {
    const pads = navigator.getGamepads ? navigator.getGamepads() : [];
    for (const p of pads) if (p) return p;
    return null;
  }

  inputTick(): void {
    if (!this.connected) return; // no frames at all while disconnected
    const sample = this.input.sample(this.gamepad());
    const now = performance.now() / 1000;
    const changed = this.lastSent === null || !samplesEqual(sample, this.lastSent);
    if (!changed && now - this.lastSentAt < KEEPALIVE_S) return;
    this.lastSent = sample;
    this.lastSentAt = now;
    this.send(
      pedalFrame(
        this.sessionId,
        [sample.deadman, sample.modeToggle, sample.clutch, sample.complete],
        sample.joystick,
        sample.rocker,
        now,
      ),
    );
  }

  // -- render loop -----------------------------------------------------------------

  startRenderLoop(): void {
    const frame = () => {
      this.renderFrame(performance.now() / 1000);
      requestAnimationFrame(frame);
    };
    requestAnimationFrame(frame);
  }

  renderFrame(now: number): void {
    const ctx = this.el.canvas.getContext("2d");
    if (!ctx || !this.scene) return;
    const w = this.el.canvas.width;
    const h = this.el.canvas.height;
    const sample = this.buffer.sample(now);
    drawScene(ctx, this.cam, this.scene, sample, w, h);
    this.updateHud(sample);

    const snap = this.buffer.current;
    this.el.insetCanvas.style.display = this.inset.visible ? "block" : "none";
    if (this.inset.visible && snap) {
      const ictx = this.el.insetCanvas.getContext("2d");
      if (ictx) this.inset.draw(ictx, this.scene, snap, this.el.insetCanvas.width, this.el.insetCanvas.height);
    }

    this.frames += 1;
    if (now - this.fpsWindowStart >= 1.0) {
      this.fps = this.frames / (now - this.fpsWindowStart);
      this.frames = 0;
      this.fpsWindowStart = now;
    }
  }

  private updateHud(sample: ReturnType<SnapshotBuffer["sample"]>): void {
    if (!sample) {
      this.el.hud.innerHTML = "<b>press Start</b> (hold Space as the deadman)";
      return;
    }
    const mm = (v: number) => (v * 1000).toFixed(2);
    const deg = (v: number) => ((v * 180) / Math.PI).toFixed(1);
    const color = DOCKING_COLORS[sample.docking] ?? "#9aa4b2";
    const holdNote = sample.mode === "hold" ? " / HOLD (press the deadman)" : "";
    this.el.hud.innerHTML = [
      `t ${sample.time.toFixed(1)} s · mode <b>${sample.mode}</b>${holdNote}`,
      `docking <b style="color:${color}">${sample.docking}</b>`,
      `lateral ${mm(sample.tep.lateral)} mm · axial ${mm(sample.tep.axial)} mm · angle ${deg(sample.tep.angle)}°`,
      `extrusion ${mm(sample.extrusion)} mm · ${this.fps.toFixed(0)} fps${sample.stale ? " · STREAM STALLED" : ""}`,
    ].join("<br>");
  }
}

export function mountConsole(doc: Document, url: string): OperatorConsole {
  const el: Elements = {
    canvas: doc.getElementById("scene") as HTMLCanvasElement,
    insetCanvas: doc.getElementById("inset") as HTMLCanvasElement,
    hud: doc.getElementById("hud") as HTMLElement,
    banner: doc.getElementById("banner") as HTMLElement,
    tlx: doc.getElementById("tlx") as HTMLElement,
    startButtons: doc.getElementById("controls") as HTMLElement,
  };
  const console_ = new OperatorConsole(el, url);
  for (const task of [1, 2, 3]) {
    const btn = doc.createElement("button");
    btn.textContent = `Start task ${task}`;
    btn.addEventListener("click", () => {
      const seed = Number((doc.getElementById("seed") as HTMLInputElement).value || "0");
      console_.startTrial(task, seed);
    });
    el.startButtons.appendChild(btn);
  }
  const abort = doc.createElement("button");
  abort.textContent = "Abort";
  abort.addEventListener("click", () => console_.abortTrial());
  el.startButtons.appendChild(abort);

  console_.bindInputs();
  console_.connect();
  console_.startRenderLoop();
  return console_;
}

/**
 * Foot-pedal emulation from keyboard and gamepad.
 *
 * The deadman is a *held* binding by construction: its state is the live
 * key/trigger state, never a toggle, and any loss of input focus releases
 * it. Axes are normalized to [-1, 1] and self-centering.
 */

export interface PedalSample {
  deadman: boolean;
  modeToggle: boolean;
  clutch: boolean;
  complete: boolean;
  joystick: [number, number];
  rocker: number;
}

export const NEUTRAL: PedalSample = {
  deadman: false,
  modeToggle: false,
  clutch: false,
  complete: false,
  joystick: [0, 0],
  rocker: 0,
};

export interface InputBinding {
  deadman: string;
  modeToggle: string;
  clutch: string;
  complete: string;
  joystickPos: [string, string]; // +x, +y
  joystickNeg: [string, string]; // -x, -y
  rockerPos: string;
  rockerNeg: string;
  gamepadDeadmanButton: number;
  gamepadToggleButton: number;
  gamepadCompleteButton: number;
  gamepadAxes: [number, number]; // joystick x, y
  gamepadRockerAxis: number;
}

export const DEFAULT_BINDING: InputBinding = {
  deadman: "Space",
  modeToggle: "Tab",
  clutch: "KeyC",
  complete: "Enter",
  joystickPos: ["KeyD", "KeyW"],
  joystickNeg: ["KeyA", "KeyS"],
  rockerPos: "KeyE",
  rockerNeg: "KeyQ",
  gamepadDeadmanButton: 7, // right trigger: naturally held
  gamepadToggleButton: 3,
  gamepadCompleteButton: 0,
  gamepadAxes: [0, 1],
  gamepadRockerAxis: 3,
};

export interface GamepadLike {
  buttons: readonly { pressed: boolean; value: number }[];
  axes: readonly number[];
}

const clamp = (v: number) => Math.max(-1, Math.min(1, v));

export class PedalInput {
  private keys = new Set<string>();

  constructor(public binding: InputBinding = DEFAULT_BINDING) {}

  keyDown(code: string): void {
    this.keys.add(code);
  }

  keyUp(code: string): void {
    this.keys.delete(code);
  }

  /** Window blur / focus loss: every held input is released. */
  blur(): void {
    this.keys.clear();
  }

  private held(code: string): boolean {
    return this.keys.has(code);
  }

  sample(gamepad: GamepadLike | null = null): PedalSample {
    const b = this.binding;
    let jx = (this.held(b.joystickPos[0]) ? 1 : 0) - (this.held(b.joystickNeg[0]) ? 1 : 0);
    let jy = (this.held(b.joystickPos[1]) ? 1 : 0) - (this.held(b.joystickNeg[1]) ? 1 : 0);
    let rocker = (this.held(b.rockerPos) ? 1 : 0) - (this.held(b.rockerNeg) ? 1 : 0);
    let deadman = this.held(b.deadman);
    let modeToggle = this.held(b.modeToggle);
    let complete = this.held(b.complete);
    const clutch = this.held(b.clutch);

    if (gamepad !== null) {
      const dz = (v: number) => (Math.abs(v) < 0.1 ? 0 : v); // stick deadzone
      const gx = dz(gamepad.axes[b.gamepadAxes[0]] ?? 0);
      const gy = -dz(gamepad.axes[b.gamepadAxes[1]] ?? 0); // stick up = +y
      const gr = -dz(gamepad.axes[b.gamepadRockerAxis] ?? 0);
      if (gx !== 0) jx = gx;
      if (gy !== 0) jy = gy;
      if (gr !== 0) rocker = gr;
      deadman = deadman || (gamepad.buttons[b.gamepadDeadmanButton]?.value ?? 0) > 0.5;
      modeToggle = modeToggle || (gamepad.buttons[b.gamepadToggleButton]?.pressed ?? false);
      complete = complete || (gamepad.buttons[b.gamepadCompleteButton]?.pressed ?? false);
    }

    return {
      deadman,
      modeToggle,
      clutch,
      complete,
      joystick: [clamp(jx), clamp(jy)],
      rocker: clamp(rocker),
    };
  }
}

export function samplesEqual(a: PedalSample, b: PedalSample): boolean {
  return (
    a.deadman === b.deadman &&
    a.modeToggle === b.modeToggle &&
    a.clutch === b.clutch &&
    a.complete === b.complete &&
    a.joystick[0] === b.joystick[0] &&
    a.joystick[1] === b.joystick[1] &&
    a.rocker === b.rocker
  );
}

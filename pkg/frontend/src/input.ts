// Keyboard-to-fingering mapping: six keys stand in for the six finger
// holes, key held = hole covered. The default uses six home-row keys
// (left hand on s/d/f, right on j/k/l, top-to-bottom); bindings are
// rebindable because keyboards and hands vary.

import { Covered, HOLE_COUNT } from "./notation.js";

export const DEFAULT_KEYS: string[] = ["s", "d", "f", "j", "k", "l"];

export class FingeringInput {
  private keys: string[];
  private down = new Set<string>();
  private listeners: ((covered: Covered, atMs: number) => void)[] = [];

  constructor(keys: string[] = DEFAULT_KEYS) {
    if (keys.length !== HOLE_COUNT || new Set(keys).size !== HOLE_COUNT) {
      throw new Error(`need ${HOLE_COUNT} distinct keys`);
    }
    this.keys = keys.map((k) => k.toLowerCase());
  }

  rebind(keys: string[]): void {
    if (keys.length !== HOLE_COUNT || new Set(keys).size !== HOLE_COUNT) {
      throw new Error(`need ${HOLE_COUNT} distinct keys`);
    }
    this.keys = keys.map((k) => k.toLowerCase());
    this.down.clear();
  }

  get covered(): Covered {
    return this.keys.map((k) => this.down.has(k)) as Covered;
  }

  onChange(listener: (covered: Covered, atMs: number) => void): void {
    this.listeners.push(listener);
  }

  /** Feed a key event; returns true when the fingering state changed. */
  keyEvent(key: string, pressed: boolean, atMs: number): boolean {
    const normalized = key.toLowerCase();
    if (!this.keys.includes(normalized)) return false;
    const had = this.down.has(normalized);
    if (pressed === had) return false;
    if (pressed) this.down.add(normalized);
    else this.down.delete(normalized);
    const covered = this.covered;
    for (const listener of this.listeners) listener(covered, atMs);
    return true;
  }

  attach(target: {
    addEventListener(type: string, cb: (e: KeyboardEvent) => void): void;
  }): void {
    target.addEventListener("keydown", (e) => {
      if (!e.repeat) this.keyEvent(e.key, true, performance.now());
    });
    target.addEventListener("keyup", (e) => this.keyEvent(e.key, false, performance.now()));
  }
}

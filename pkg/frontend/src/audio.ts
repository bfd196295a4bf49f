// Sound output: a monophonic voice (band-limited sawtooth through a
// low-pass filter at fixed gain, matching the constant-breath single-octave
// constraint), a per-beat metronome click, and scheduled playback of review
// tracks. If no AudioContext is available the app runs visual-only.

import { Degree, frequencyOf } from "./notation.js";

const VOICE_GAIN = 0.12;
const FILTER_HZ = 2400;
const CLICK_HZ = 1600;

export interface TrackSegment {
  start_ms: number;
  end_ms: number;
  pitch: number | null;
}

export class AudioOut {
  private ctx: AudioContext | null = null;
  private osc: OscillatorNode | null = null;
  private gain: GainNode | null = null;
  private playback: { osc: OscillatorNode; gain: GainNode } | null = null;

  get available(): boolean {
    return this.ctx !== null;
  }

  /** Must be called from a user gesture (browser autoplay policy). */
  init(): boolean {
    if (this.ctx) return true;
    const Ctor = (globalThis as { AudioContext?: typeof AudioContext }).AudioContext;
    if (!Ctor) return false;
    this.ctx = new Ctor();
    return true;
  }

  /** Hold the voice at the given pitch; null silences it. */
  setVoice(degree: Degree | null): void {
    if (!this.ctx) return;
    if (degree === null) {
      this.stopVoice();
      return;
    }
    if (!this.osc) {
      this.osc = this.ctx.createOscillator();
      this.osc.type = "sawtooth";
      const filter = this.ctx.createBiquadFilter();
      filter.type = "lowpass";
      filter.frequency.value = FILTER_HZ;
      this.gain = this.ctx.createGain();
      this.gain.gain.value = VOICE_GAIN;
      this.osc.connect(filter).connect(this.gain).connect(this.ctx.destination);
      this.osc.start();
    }
    this.osc.frequency.setValueAtTime(frequencyOf(degree), this.ctx.currentTime);
  }

  stopVoice(): void {
    if (this.osc) {
      this.osc.stop();
      this.osc.disconnect();
      this.osc = null;
      this.gain = null;
    }
  }

  metronomeClick(): void {
    if (!this.ctx) return;
    const osc = this.ctx.createOscillator();
    const gain = this.ctx.createGain();
    osc.frequency.value = CLICK_HZ;
    gain.gain.setValueAtTime(0.3, this.ctx.currentTime);
    gain.gain.exponentialRampToValueAtTime(0.001, this.ctx.currentTime + 0.05);
    osc.connect(gain).connect(this.ctx.destination);
    osc.start();
    osc.stop(this.ctx.currentTime + 0.06);
  }

  /** Play a review track (ground truth or as-played) from its segments. */
  playTrack(segments: TrackSegment[]): void {
    if (!this.ctx) return;
    this.stopTrack();
    const osc = this.ctx.createOscillator();
    osc.type = "sawtooth";
    const filter = this.ctx.createBiquadFilter();
    filter.type = "lowpass";
    filter.frequency.value = FILTER_HZ;
    const gain = this.ctx.createGain();
    gain.gain.value = 0;
    osc.connect(filter).connect(gain).connect(this.ctx.destination);
    const t0 = this.ctx.currentTime + 0.05;
    let endAt = t0;
    for (const seg of segments) {
      const start = t0 + seg.start_ms / 1000;
      const end = t0 + seg.end_ms / 1000;
      if (seg.pitch === null) {
        gain.gain.setValueAtTime(0, start);
      } else {
        osc.frequency.setValueAtTime(frequencyOf(seg.pitch as Degree), start);
        gain.gain.setValueAtTime(VOICE_GAIN, start);
      }
      endAt = Math.max(endAt, end);
    }
    gain.gain.setValueAtTime(0, endAt);
    osc.start(t0);
    osc.stop(endAt + 0.1);
    this.playback = { osc, gain };
    osc.onended = () => {
      if (this.playback?.osc === osc) this.playback = null;
    };
  }

  stopTrack(): void {
    if (this.playback) {
      try {
        this.playback.osc.stop();
      } catch {
        // already stopped
      }
      this.playback.osc.disconnect();
      this.playback = null;
    }
  }
}

// Browser entry point: wires the protocol client, keyboard input, canvas
// rendering, and audio into one page. Single UI thread; every server
// message lands in one handler that updates state and repaints.

import { AudioOut } from "./audio.js";
import { FingeringInput } from "./input.js";
import {
  buildScene,
  DEFAULT_GEOMETRY,
  fluteIconShapes,
} from "./layout.js";
import {
  Degree,
  degreeFromFingering,
  PieceData,
  PITCH_NAMES,
} from "./notation.js";
import type {
  ExamResultPayload,
  FramePayload,
  HelloPayload,
  ReviewPayload,
  StartAckPayload,
} from "./protocol.js";
import { SessionClient, WebSocketTransport } from "./protocol.js";
import { clear, paintFluteIcon, paintScene } from "./render.js";

interface UiState {
  hello: HelloPayload | null;
  piece: PieceData | null;
  frame: FramePayload | null;
  review: ReviewPayload | null;
  lastExam: ExamResultPayload | null;
  sessionActive: boolean;
  sessionStartMs: number;
  reviewTrack: "played" | "ground_truth";
  status: string;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function main(): void {
  const scoreCanvas = el<HTMLCanvasElement>("score");
  const fluteCanvas = el<HTMLCanvasElement>("flute");
  const scoreCtx = scoreCanvas.getContext("2d")!;
  const fluteCtx = fluteCanvas.getContext("2d")!;

  const state: UiState = {
    hello: null,
    piece: null,
    frame: null,
    review: null,
    lastExam: null,
    sessionActive: false,
    sessionStartMs: 0,
    reviewTrack: "ground_truth",
    status: "connecting...",
  };

  const audio = new AudioOut();
  const input = new FingeringInput();
  const subject =
    new URLSearchParams(location.search).get("subject") ?? "anonymous";
  const wsUrl = `ws://${location.host}/session?subject=${encodeURIComponent(subject)}`;
  const client = new SessionClient(new WebSocketTransport(new WebSocket(wsUrl)));

  const modeSelect = el<HTMLSelectElement>("mode");
  const pieceSelect = el<HTMLSelectElement>("piece");
  const tempoInput = el<HTMLInputElement>("tempo");
  const statusLine = el<HTMLDivElement>("status");
  const audioBanner = el<HTMLDivElement>("audio-banner");

  function repaint(): void {
    clear(scoreCtx, scoreCanvas.width, scoreCanvas.height);
    if (state.piece) {
      paintScene(scoreCtx, buildScene(state.piece, state.frame, DEFAULT_GEOMETRY));
    }
    let target: Degree | null = null;
    const frame = state.frame;
    if (frame?.playhead_beats != null && state.piece) {
      const beat = frame.playhead_beats;
      const active = state.piece.notes.find(
        (n) => beat >= n.onset && beat < n.onset + n.duration,
      );
      target = active ? active.degree : null;
    }
    clear(fluteCtx, fluteCanvas.width, fluteCanvas.height);
    paintFluteIcon(fluteCtx, fluteIconShapes(target));
    statusLine.textContent = state.status;
  }

  client.on("hello", (hello) => {
    state.hello = hello;
    state.status = `curriculum ${hello.curriculum.id}: ${hello.curriculum.pieces.length} pieces`;
    modeSelect.innerHTML = "";
    for (const mode of hello.modes) {
      const option = document.createElement("option");
      option.value = mode;
      option.textContent = `Mode ${mode}`;
      modeSelect.appendChild(option);
    }
    pieceSelect.innerHTML = "";
    for (const piece of hello.curriculum.pieces) {
      const option = document.createElement("option");
      option.value = piece.id;
      option.textContent = piece.title;
      pieceSelect.appendChild(option);
    }
    const first = hello.curriculum.pieces[0];
    if (first) {
      state.piece = first as PieceData;
      tempoInput.value = String(first.tempo);
    }
    repaint();
  });

  client.on("start", (ack: StartAckPayload) => {
    state.piece = ack.piece as PieceData;
    state.frame = null;
    state.review = null;
    state.sessionActive = true;
    state.sessionStartMs = performance.now();
    state.status = `${ack.purpose} in mode ${ack.mode} at ${ack.tempo} BPM: ${ack.piece.title}`;
    repaint();
  });

  let lastMetronomeBeat: number | null = null;
  client.on("frame", (frame) => {
    state.frame = frame;
    if (
      frame.metronome_beat !== null &&
      frame.metronome_beat !== lastMetronomeBeat
    ) {
      lastMetronomeBeat = frame.metronome_beat;
      audio.metronomeClick();
    }
    repaint();
  });

  client.on("note-result", (result) => {
    state.status = `note ${result.note_index + 1}: ${result.status}`;
    repaint();
  });

  client.on("exam-result", (result) => {
    state.lastExam = result;
    state.sessionActive = false;
    const pct = (result.score * 100).toFixed(0);
    const extra = result.skip_eligible ? " (may skip)" : "";
    state.status = `${result.kind} exam on ${result.piece_id}: ${pct}%${extra} | ` +
      `curriculum ${result.curriculum.status}, streak ${result.curriculum.consecutive_passes}`;
    repaint();
  });

  client.on("review", (review) => {
    state.review = review;
    state.sessionActive = false;
    state.status = `review ready: ${review.note_correct.filter(Boolean).length}/${review.note_correct.length} notes correct`;
    repaint();
  });

  client.on("error", (error) => {
    state.status = `error: ${error.message}`;
    state.sessionActive = false;
    repaint();
  });

  input.onChange((covered, atMs) => {
    if (!state.sessionActive) return;
    const t = atMs - state.sessionStartMs;
    client.sendFingering(t, covered);
    audio.setVoice(degreeFromFingering(covered));
    const degree = degreeFromFingering(covered);
    el<HTMLDivElement>("sounding").textContent = `sounding: ${PITCH_NAMES[degree]}`;
  });
  input.attach(window as unknown as {
    addEventListener(type: string, cb: (e: KeyboardEvent) => void): void;
  });

  function startSession(purpose: string): void {
    if (!audio.init()) audioBanner.hidden = false;
    lastMetronomeBeat = null;
    client.startSession({
      purpose,
      piece_id: pieceSelect.value || undefined,
      mode: modeSelect.value || "D",
      tempo: Number(tempoInput.value) || undefined,
    });
  }

  el<HTMLButtonElement>("start-practice").onclick = () => startSession("practice");
  el<HTMLButtonElement>("start-pre-exam").onclick = () => startSession("pre-exam");
  el<HTMLButtonElement>("start-exam").onclick = () => startSession("exam");
  el<HTMLButtonElement>("skip-song").onclick = () =>
    client.startSession({ purpose: "skip" });
  el<HTMLButtonElement>("stop").onclick = () => {
    client.startSession({ purpose: "stop" });
    audio.stopVoice();
  };
  el<HTMLButtonElement>("review-toggle").onclick = () => {
    if (!state.review) return;
    state.reviewTrack =
      state.reviewTrack === "ground_truth" ? "played" : "ground_truth";
    const track =
      state.reviewTrack === "ground_truth"
        ? state.review.ground_truth
        : state.review.played;
    state.status = `playing ${state.reviewTrack.replace("_", " ")} track`;
    audio.playTrack(track);
    repaint();
  };

  repaint();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", main);
}

// Pure scene construction for the colored score page and the flute icon.
// Everything here is plain geometry so it can be golden-tested without a
// canvas; render.ts paints the resulting shapes.
//
// A page is split into two bands of four measures each; within a band the
// seven pitch rows stack bottom-up (row 0 = C at the bottom) and a note is
// a rectangle in its row whose width is proportional to its duration. The
// top row (B) has no background tint, so the band reads as six colored
// rows with open space above.

import {
  colorOf,
  Degree,
  NoteData,
  PieceData,
  ROW_COLORS,
  rowOf,
} from "./notation.js";
import type { FramePayload } from "./protocol.js";

export const BANDS_PER_PAGE = 2;
export const MEASURES_PER_BAND = 4;
export const ROWS = 7;
export const TRANSPARENT_ROW = 6; // B

export interface RectShape {
  kind: "rect";
  x: number;
  y: number;
  w: number;
  h: number;
  fill: string;
  stroke?: string;
  strokeWidth?: number;
  alpha?: number;
  role: "row-bg" | "note" | "mask" | "playhead" | "measure-line" | "band-frame";
  noteIndex?: number;
  row?: number;
}

export interface ArrowShape {
  kind: "arrow";
  x: number; // tip x
  y: number; // tip y
  size: number;
  direction: "up" | "down";
  fill: string;
  role: "mask-arrow";
}

export type Shape = RectShape | ArrowShape;

export interface PageGeometry {
  width: number;
  height: number;
  margin: number;
  bandGap: number;
}

export const DEFAULT_GEOMETRY: PageGeometry = {
  width: 960,
  height: 480,
  margin: 16,
  bandGap: 24,
};

export interface BandBox {
  x: number;
  y: number;
  w: number;
  h: number;
  startBeat: number;
  endBeat: number;
}

export function bandBoxes(piece: PieceData, geometry: PageGeometry): BandBox[] {
  const beatsPerBand = piece.beats_per_measure * MEASURES_PER_BAND;
  const innerW = geometry.width - 2 * geometry.margin;
  const innerH = geometry.height - 2 * geometry.margin;
  const bandH = (innerH - geometry.bandGap * (BANDS_PER_PAGE - 1)) / BANDS_PER_PAGE;
  const boxes: BandBox[] = [];
  for (let b = 0; b < BANDS_PER_PAGE; b++) {
    boxes.push({
      x: geometry.margin,
      y: geometry.margin + b * (bandH + geometry.bandGap),
      w: innerW,
      h: bandH,
      startBeat: b * beatsPerBand,
      endBeat: (b + 1) * beatsPerBand,
    });
  }
  return boxes;
}

function rowTop(band: BandBox, row: number): number {
  const rowH = band.h / ROWS;
  return band.y + (ROWS - 1 - row) * rowH;
}

function beatX(band: BandBox, beat: number): number {
  const pxPerBeat = band.w / (band.endBeat - band.startBeat);
  return band.x + (beat - band.startBeat) * pxPerBeat;
}

function bandOfBeat(bands: BandBox[], beat: number): BandBox | null {
  for (const band of bands) {
    if (beat >= band.startBeat && beat < band.endBeat) return band;
  }
  const last = bands[bands.length - 1];
  if (last && beat === last.endBeat) return last;
  return null;
}

export interface NoteRect {
  noteIndex: number;
  band: number;
  x: number;
  y: number;
  w: number;
  h: number;
  row: number;
}

/** Note rectangles across bands; a note crossing a band boundary is split. */
export function noteRects(piece: PieceData, geometry: PageGeometry): NoteRect[] {
  const bands = bandBoxes(piece, geometry);
  const rects: NoteRect[] = [];
  piece.notes.forEach((note, index) => {
    const row = rowOf(note.degree);
    let from = note.onset;
    const to = note.onset + note.duration;
    for (let b = 0; b < bands.length && from < to; b++) {
      const band = bands[b]!;
      const lo = Math.max(from, band.startBeat);
      const hi = Math.min(to, band.endBeat);
      if (hi <= lo) continue;
      rects.push({
        noteIndex: index,
        band: b,
        x: beatX(band, lo),
        y: rowTop(band, row),
        w: hi - lo > 0 ? (hi - lo) * (band.w / (band.endBeat - band.startBeat)) : 0,
        h: band.h / ROWS,
        row,
      });
      from = hi;
    }
  });
  return rects;
}

const MASK_FILL = "#FFFFFF";
const PLAYHEAD_FILL = "#FFFFFF";
const CORRECT_OUTLINE = "#FFFFFF";
const ROW_BG_ALPHA = 0.18;

/**
 * Build the full display list for a piece plus an optional feedback frame.
 * Correct notes get white outlines; a mismatch renders a white mask at the
 * played row under the active note's span with arrows toward the target
 * row; the playhead is a vertical white bar. A frame with hidden statuses
 * (mode C) or no frame at all renders the plain score.
 */
export function buildScene(
  piece: PieceData,
  frame: FramePayload | null,
  geometry: PageGeometry = DEFAULT_GEOMETRY,
): Shape[] {
  const bands = bandBoxes(piece, geometry);
  const shapes: Shape[] = [];

  for (const band of bands) {
    shapes.push({
      kind: "rect",
      x: band.x,
      y: band.y,
      w: band.w,
      h: band.h,
      fill: "none",
      stroke: "#333333",
      strokeWidth: 1,
      role: "band-frame",
    });
    for (let row = 0; row < ROWS; row++) {
      if (row === TRANSPARENT_ROW) continue;
      shapes.push({
        kind: "rect",
        x: band.x,
        y: rowTop(band, row),
        w: band.w,
        h: band.h / ROWS,
        fill: ROW_COLORS[row as Degree],
        alpha: ROW_BG_ALPHA,
        role: "row-bg",
        row,
      });
    }
    const beatsPerBand = band.endBeat - band.startBeat;
    for (let m = 1; m < MEASURES_PER_BAND; m++) {
      const beat = band.startBeat + (m * beatsPerBand) / MEASURES_PER_BAND;
      shapes.push({
        kind: "rect",
        x: beatX(band, beat),
        y: band.y,
        w: 1,
        h: band.h,
        fill: "#444444",
        role: "measure-line",
      });
    }
  }

  const statuses = frame?.note_statuses ?? null;
  for (const rect of noteRects(piece, geometry)) {
    const note = piece.notes[rect.noteIndex]!;
    const status = statuses ? statuses[rect.noteIndex] : undefined;
    shapes.push({
      kind: "rect",
      x: rect.x,
      y: rect.y,
      w: rect.w,
      h: rect.h,
      fill: colorOf(note.degree),
      stroke: status === "correct" ? CORRECT_OUTLINE : undefined,
      strokeWidth: status === "correct" ? 2 : undefined,
      role: "note",
      noteIndex: rect.noteIndex,
      row: rect.row,
    });
  }

  const mask = frame?.active_mask ?? null;
  if (mask) {
    const [spanStart, spanEnd] = mask.span;
    const band = bandOfBeat(bands, spanStart);
    if (band) {
      const lo = Math.max(spanStart, band.startBeat);
      const hi = Math.min(spanEnd, band.endBeat);
      const x = beatX(band, lo);
      const w = beatX(band, hi) - x;
      const y = rowTop(band, mask.played_row);
      const h = band.h / ROWS;
      shapes.push({
        kind: "rect",
        x,
        y,
        w,
        h,
        fill: MASK_FILL,
        alpha: 0.75,
        role: "mask",
        row: mask.played_row,
      });
      if (mask.arrow !== "none") {
        const size = h * 0.6;
        const tipY = mask.arrow === "up" ? y - size * 0.25 : y + h + size * 0.25;
        for (const fx of [x + w * 0.25, x + w * 0.75]) {
          shapes.push({
            kind: "arrow",
            x: fx,
            y: tipY,
            size,
            direction: mask.arrow,
            fill: MASK_FILL,
            role: "mask-arrow",
          });
        }
      }
    }
  }

  const playhead = frame?.playhead_beats ?? null;
  if (playhead !== null) {
    const band = bandOfBeat(bands, playhead);
    if (band) {
      shapes.push({
        kind: "rect",
        x: beatX(band, Math.min(playhead, band.endBeat)) - 1,
        y: band.y,
        w: 3,
        h: band.h,
        fill: PLAYHEAD_FILL,
        role: "playhead",
      });
    }
  }

  return shapes;
}

// -- flute icon ---------------------------------------------------------------

export interface HoleShape {
  kind: "hole";
  cx: number;
  cy: number;
  r: number;
  fill: string;
  blowing: boolean;
  hole?: number; // 1..6 top to bottom for finger holes
}

const GREY = ROW_COLORS[6];

/**
 * Flute icon: the blowing hole on top (always grey), six finger holes
 * below. Covered holes take the target pitch's color; released holes and
 * a target-free icon stay grey.
 */
export function fluteIconShapes(
  target: Degree | null,
  geometry: { x: number; y: number; height: number } = { x: 24, y: 24, height: 420 },
): HoleShape[] {
  const covered = target === null ? null : fingeringHoles(target);
  const r = geometry.height / 18;
  const step = (geometry.height - 2 * r) / 7;
  const shapes: HoleShape[] = [
    { kind: "hole", cx: geometry.x, cy: geometry.y + r, r, fill: GREY, blowing: true },
  ];
  for (let hole = 1; hole <= 6; hole++) {
    const isCovered = covered ? covered[hole - 1]! : false;
    shapes.push({
      kind: "hole",
      cx: geometry.x,
      cy: geometry.y + r + hole * step,
      r: r * 0.8,
      fill: isCovered && target !== null ? colorOf(target) : GREY,
      blowing: false,
      hole,
    });
  }
  return shapes;
}

function fingeringHoles(degree: Degree): boolean[] {
  return Array.from({ length: 6 }, (_, i) => i < 6 - degree);
}

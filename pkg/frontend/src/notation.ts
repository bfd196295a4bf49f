// Client-side mirror of the pitch/color/row/fingering trinity. One diatonic
// octave: degree 0 (C) through 6 (B); row index equals degree, row 0 drawn
// at the bottom of a band.

export type Degree = 0 | 1 | 2 | 3 | 4 | 5 | 6;

export const DEGREES: Degree[] = [0, 1, 2, 3, 4, 5, 6];

export const PITCH_NAMES = ["C", "D", "E", "F", "G", "A", "B"] as const;

export const ROW_COLORS = [
  "#E6194B", // C red
  "#F58231", // D orange
  "#FFE119", // E yellow
  "#3CB44B", // F green
  "#4363D8", // G blue
  "#911EB4", // A purple
  "#A9A9A9", // B grey
] as const;

export const HOLE_COUNT = 6;

/** Covered state of the six finger holes, index 0 = topmost hole. */
export type Covered = [boolean, boolean, boolean, boolean, boolean, boolean];

export function colorOf(degree: Degree): string {
  return ROW_COLORS[degree];
}

export function rowOf(degree: Degree): number {
  return degree;
}

/** Canonical fingering: the top (6 - degree) holes covered. */
export function fingeringForDegree(degree: Degree): Covered {
  const covered = Array.from({ length: HOLE_COUNT }, (_, i) => i < HOLE_COUNT - degree);
  return covered as Covered;
}

/** Topmost-open-hole rule; the all-covered pattern sounds C. */
export function degreeFromFingering(covered: Covered): Degree {
  for (let hole = 1; hole <= HOLE_COUNT; hole++) {
    if (!covered[hole - 1]) return (7 - hole) as Degree;
  }
  return 0;
}

// 12-TET in the C5..B5 octave, A4 = 440 Hz.
const MIDI_OF_DEGREE = [72, 74, 76, 77, 79, 81, 83] as const;

export function frequencyOf(degree: Degree): number {
  return 440 * Math.pow(2, (MIDI_OF_DEGREE[degree] - 69) / 12);
}

export interface NoteData {
  degree: Degree;
  onset: number; // beats
  duration: number; // beats
}

export interface PieceData {
  id: string;
  title: string;
  tempo: number;
  beats_per_measure: number;
  notes: NoteData[];
}

export function pieceEndBeats(piece: PieceData): number {
  let end = 0;
  for (const note of piece.notes) end = Math.max(end, note.onset + note.duration);
  return end;
}

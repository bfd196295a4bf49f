"""Pitch/color/row/fingering domain for a six-hole flute, plus piece model and difficulty.

The playable material is a single diatonic octave: seven pitches, seven rows
(low to high), seven colors, and seven canonical fingerings on a flute with
one blowing hole (always open, always grey) and six finger holes below it.
Any one of pitch, color, or row determines the other two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction
from typing import Iterable, Sequence

#: Beat subdivision for note timing. 48 is divisible by 2, 3, 4, 6 and 8, so
#: dotted and triplet values are exact integers on the grid.
TICKS_PER_BEAT = 48

HOLE_COUNT = 6

#: Notes longer than this many measures draw a length warning: one page of
#: notation holds two bands of four measures each.
MEASURES_PER_PAGE = 8


class Pitch(IntEnum):
    """Diatonic scale degree in C major, 0 = C (lowest) through 6 = B."""

    C = 0
    D = 1
    E = 2
    F = 3
    G = 4
    A = 5
    B = 6


class NoteColor(Enum):
    """The seven note colors; the enum value is the 24-bit RGB."""

    RED = 0xE6194B
    ORANGE = 0xF58231
    YELLOW = 0xFFE119
    GREEN = 0x3CB44B
    BLUE = 0x4363D8
    PURPLE = 0x911EB4
    GREY = 0xA9A9A9

    @property
    def rgb(self) -> int:
        return self.value

    @property
    def css(self) -> str:
        return f"#{self.value:06X}"


_COLOR_OF_PITCH = {
    Pitch.C: NoteColor.RED,
    Pitch.D: NoteColor.ORANGE,
    Pitch.E: NoteColor.YELLOW,
    Pitch.F: NoteColor.GREEN,
    Pitch.G: NoteColor.BLUE,
    Pitch.A: NoteColor.PURPLE,
    Pitch.B: NoteColor.GREY,
}

# 12-tone equal temperament, A4 = 440 Hz. The synth octave is C5..B5.
_MIDI_OF_PITCH = {
    Pitch.C: 72,
    Pitch.D: 74,
    Pitch.E: 76,
    Pitch.F: 77,
    Pitch.G: 79,
    Pitch.A: 81,
    Pitch.B: 83,
}


@dataclass(frozen=True)
class Fingering:
    """Cover state of the six finger holes; index 0 is hole 1 (topmost).

    The blowing hole is not part of the state: it is never fingered.
    """

    covered: tuple[bool, bool, bool, bool, bool, bool]

    def __post_init__(self) -> None:
        cov = tuple(bool(c) for c in self.covered)
        if len(cov) != HOLE_COUNT:
            raise ValueError(f"fingering needs exactly {HOLE_COUNT} holes, got {len(cov)}")
        object.__setattr__(self, "covered", cov)

    def hole_covered(self, hole: int) -> bool:
        """Whether the 1-based hole (1 = topmost, 6 = lowest) is covered."""
        if not 1 <= hole <= HOLE_COUNT:
            raise ValueError(f"hole index out of range: {hole}")
        return self.covered[hole - 1]

    @classmethod
    def from_bits(cls, bits: Iterable[int | bool]) -> "Fingering":
        return cls(tuple(bool(b) for b in bits))  # type: ignore[arg-type]


def fingering_for_pitch(pitch: Pitch) -> Fingering:
    """Canonical fingering: the top ``6 - degree`` holes covered, the rest open.

    C covers all six holes, D covers all but the lowest, and B releases all.
    """
    n_covered = HOLE_COUNT - int(pitch)
    return Fingering(tuple(i < n_covered for i in range(HOLE_COUNT)))  # type: ignore[arg-type]


def pitch_from_fingering(fingering: Fingering) -> Pitch:
    """Sounding pitch of any hole pattern under the topmost-open-hole rule.

    Air escapes at the highest open hole, so only the topmost open hole
    matters: a pattern with topmost open hole k (1 = top) sounds degree
    ``7 - k``; the all-covered pattern sounds C. Total over all 64 patterns,
    and the inverse of :func:`fingering_for_pitch` on the canonical seven.
    """
    for hole, covered in enumerate(fingering.covered, start=1):
        if not covered:
            return Pitch(7 - hole)
    return Pitch.C


def color_of(pitch: Pitch) -> NoteColor:
    return _COLOR_OF_PITCH[Pitch(pitch)]


def row_of(pitch: Pitch) -> int:
    """Row index of the pitch; row 0 is drawn at the bottom of the band."""
    return int(pitch)


def frequency_of(pitch: Pitch) -> float:
    """Synth frequency in Hz (12-TET, octave C5..B5, A4 = 440 Hz)."""
    midi = _MIDI_OF_PITCH[Pitch(pitch)]
    return 440.0 * 2.0 ** ((midi - 69) / 12.0)


def _to_beats(value: int | Fraction) -> Fraction:
    frac = Fraction(value)
    if (frac * TICKS_PER_BEAT).denominator != 1:
        raise ValueError(f"{frac} beats is off the 1/{TICKS_PER_BEAT}-beat grid")
    return frac


@dataclass(frozen=True)
class Note:
    """One note: a pitch with onset and duration in beats on the 1/48 grid."""

    pitch: Pitch
    onset: Fraction
    duration: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "pitch", Pitch(self.pitch))
        onset = _to_beats(self.onset)
        duration = _to_beats(self.duration)
        if onset < 0:
            raise ValueError(f"negative onset: {onset}")
        if duration <= 0:
            raise ValueError(f"non-positive duration: {duration}")
        object.__setattr__(self, "onset", onset)
        object.__setattr__(self, "duration", duration)

    @property
    def end(self) -> Fraction:
        return self.onset + self.duration


@dataclass(frozen=True)
class Piece:
    """A monophonic piece within the single diatonic octave.

    Construction checks only structural sanity (positive tempo and meter);
    the musical invariants are reported by :func:`validate_piece` so that
    malformed documents can be inspected rather than rejected blindly.
    """

    id: str
    title: str
    notes: tuple[Note, ...]
    beats_per_measure: int = 4
    default_tempo: float = 90.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "notes", tuple(self.notes))
        if self.beats_per_measure < 1:
            raise ValueError(f"beats_per_measure must be positive: {self.beats_per_measure}")
        if not self.default_tempo > 0:
            raise ValueError(f"tempo must be positive: {self.default_tempo}")

    @property
    def length_beats(self) -> Fraction:
        if not self.notes:
            return Fraction(0)
        return max(note.end for note in self.notes)

    @property
    def measure_count(self) -> int:
        return math.ceil(self.length_beats / self.beats_per_measure)

    def duration_ms(self, tempo: float | None = None) -> float:
        bpm = self.default_tempo if tempo is None else tempo
        return float(self.length_beats) * 60000.0 / bpm


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    severity: Severity = Severity.ERROR


def validate_piece(piece: Piece) -> list[Violation]:
    """Check the musical invariants; violations are data, not exceptions.

    Errors: unsorted notes, overlapping notes (polyphony), adjacent notes of
    equal pitch. Exceeding one notation page (8 measures) is a warning only.
    """
    violations: list[Violation] = []
    notes = piece.notes
    for i in range(1, len(notes)):
        prev, cur = notes[i - 1], notes[i]
        if cur.onset < prev.onset:
            violations.append(Violation("unsorted", f"note {i} starts before note {i - 1}"))
        elif cur.onset < prev.end:
            violations.append(
                Violation("polyphony", f"notes {i - 1} and {i} overlap at beat {cur.onset}")
            )
        if cur.pitch == prev.pitch:
            violations.append(
                Violation(
                    "adjacent-equal-pitch",
                    f"notes {i - 1} and {i} repeat pitch {cur.pitch.name}",
                )
            )
    if piece.measure_count > MEASURES_PER_PAGE:
        violations.append(
            Violation(
                "page-overflow",
                f"piece spans {piece.measure_count} measures; one page holds {MEASURES_PER_PAGE}",
                Severity.WARNING,
            )
        )
    return violations


class DifficultyUndefinedError(ValueError):
    """Raised when a difficulty factor is undefined (fewer than two notes)."""


def note_density(piece: Piece) -> float:
    """Notes per beat over the span of the piece."""
    length = piece.length_beats
    if length == 0:
        raise DifficultyUndefinedError(f"piece {piece.id!r} is empty")
    return len(piece.notes) / float(length)


def mean_interval(piece: Piece) -> float:
    """Mean absolute diatonic-degree step between consecutive notes."""
    if len(piece.notes) < 2:
        raise DifficultyUndefinedError(
            f"piece {piece.id!r} has {len(piece.notes)} notes; intervals need at least 2"
        )
    steps = [
        abs(int(b.pitch) - int(a.pitch)) for a, b in zip(piece.notes, piece.notes[1:])
    ]
    return sum(steps) / len(steps)


def _standardize(value: float, mean: float, sd: float) -> float:
    return 0.0 if sd == 0.0 else (value - mean) / sd


@dataclass(frozen=True)
class DifficultyScale:
    """Density/interval normalization fitted on a curriculum.

    Difficulty is the sum of the two z-scores, so it is relative to the
    curriculum the scale was fitted on: a lone piece scores 0, pieces denser
    or jumpier than the curriculum average score above 0. Scores may be
    negative for easier-than-average pieces.
    """

    density_mean: float
    density_sd: float
    interval_mean: float
    interval_sd: float

    @classmethod
    def fit(cls, pieces: Sequence[Piece]) -> "DifficultyScale":
        if not pieces:
            raise ValueError("cannot fit a difficulty scale on an empty curriculum")
        densities = [note_density(p) for p in pieces]
        intervals = [mean_interval(p) for p in pieces]

        def moments(xs: list[float]) -> tuple[float, float]:
            mean = sum(xs) / len(xs)
            var = sum((x - mean) ** 2 for x in xs) / len(xs)
            return mean, math.sqrt(var)

        dm, ds = moments(densities)
        im, isd = moments(intervals)
        return cls(dm, ds, im, isd)

    def score(self, piece: Piece) -> float:
        return _standardize(note_density(piece), self.density_mean, self.density_sd) + (
            _standardize(mean_interval(piece), self.interval_mean, self.interval_sd)
        )


def difficulty(piece: Piece, scale: DifficultyScale) -> float:
    """Difficulty of ``piece`` relative to the curriculum behind ``scale``."""
    return scale.score(piece)

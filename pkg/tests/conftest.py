from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest

from rainbowscore.notation import Note, Piece, Pitch
from rainbowscore.scorefile import builtin_manifest_path, load_curriculum


def make_piece(
    pitches,
    durations=None,
    *,
    piece_id="test-piece",
    tempo=60.0,
    beats_per_measure=4,
):
    """Contiguous piece from pitch names/degrees and per-note beat durations."""
    if durations is None:
        durations = [Fraction(1)] * len(pitches)
    notes = []
    onset = Fraction(0)
    for raw, dur in zip(pitches, durations):
        pitch = Pitch[raw] if isinstance(raw, str) else Pitch(raw)
        dur = Fraction(dur)
        notes.append(Note(pitch, onset, dur))
        onset += dur
    return Piece(
        id=piece_id,
        title=piece_id,
        notes=tuple(notes),
        beats_per_measure=beats_per_measure,
        default_tempo=tempo,
    )


@pytest.fixture(scope="session")
def corpus():
    return load_curriculum(builtin_manifest_path())


@pytest.fixture
def six_note_piece():
    """Quarter notes at 60 BPM; the sixth note is E (row 2)."""
    return make_piece(["C", "D", "C", "D", "C", "E"])


@pytest.fixture
def tiny_curriculum(tmp_path: Path) -> Path:
    """A fast two-piece curriculum manifest for pipeline tests."""
    (tmp_path / "one.rbs").write_text(
        "id: one\ntitle: One\ntempo: 120\nbeats_per_measure: 4\n\n"
        "C q D q E q F q | G q A q G q E q\n",
        encoding="utf-8",
    )
    (tmp_path / "two.rbs").write_text(
        "id: two\ntitle: Two\ntempo: 120\nbeats_per_measure: 4\n\n"
        "G q B q A q F q | E q C q D q C q\n",
        encoding="utf-8",
    )
    manifest = tmp_path / "manifest.json"
    manifest.write_text(
        json.dumps({"id": "tiny-2", "pieces": ["one.rbs", "two.rbs"]}), encoding="utf-8"
    )
    return manifest

from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rainbowscore.notation import Note, Piece, Pitch
from rainbowscore.scorefile import (
    DOT_FACTOR,
    DURATION_BEATS,
    CurriculumError,
    ParseError,
    PieceValidationError,
    SerializationError,
    builtin_manifest_path,
    load_curriculum,
    load_manifest,
    parse_piece,
    serialize_piece,
)

from conftest import make_piece

# The grammar's representable durations: the base tokens and their dotted forms.
REPRESENTABLE = sorted(
    {beats for beats in DURATION_BEATS.values()}
    | {beats * DOT_FACTOR for beats in DURATION_BEATS.values()}
)


class TestParse:
    def test_basic_document(self):
        piece = parse_piece(
            "id: demo\ntempo: 90\n\nC q D q E q F q | G q A q B q A q\n"
        )
        assert piece.id == "demo"
        assert len(piece.notes) == 8
        assert piece.measure_count == 2
        assert piece.notes[0] == Note(Pitch.C, Fraction(0), Fraction(1))
        assert piece.notes[4].onset == Fraction(4)

    def test_durations_and_dots(self):
        piece = parse_piece("id: d\n\nC w D h E q F e G s A q.\n")
        assert [n.duration for n in piece.notes] == [
            Fraction(4),
            Fraction(2),
            Fraction(1),
            Fraction(1, 2),
            Fraction(1, 4),
            Fraction(3, 2),
        ]

    def test_adjacent_equal_pitch_rejected(self):
        with pytest.raises(PieceValidationError) as exc:
            parse_piece("id: x\n\nC q C q\n")
        assert "adjacent-equal-pitch" in str(exc.value)

    def test_bar_misalignment(self):
        with pytest.raises(ParseError) as exc:
            parse_piece("id: x\nbeats_per_measure: 4\n\nC q | D q\n")
        assert "multiple of 4" in str(exc.value)
        assert exc.value.line == 4

    def test_unknown_pitch_has_position(self):
        with pytest.raises(ParseError) as exc:
            parse_piece("id: x\n\nC q H q\n")
        assert exc.value.line == 3
        assert exc.value.column == 5

    def test_missing_duration(self):
        with pytest.raises(ParseError):
            parse_piece("id: x\n\nC q D\n")

    def test_unknown_header_key(self):
        with pytest.raises(ParseError):
            parse_piece("id: x\nmood: happy\n\nC q D q\n")

    def test_comments_and_blank_lines(self):
        piece = parse_piece(
            "id: c  # trailing comment\n\n# full-line comment\nC q D q\n\nE q F q\n"
        )
        assert len(piece.notes) == 4

    def test_defaults(self):
        piece = parse_piece("id: x\n\nC q D q\n")
        assert piece.beats_per_measure == 4
        assert piece.default_tempo == 90.0
        assert piece.title == "x"

    @given(st.text(max_size=200))
    @settings(max_examples=300, deadline=None)
    def test_never_crashes_on_arbitrary_text(self, text: str):
        try:
            parse_piece(text)
        except (ParseError, PieceValidationError):
            pass


def _pieces() -> st.SearchStrategy[Piece]:
    """Random contiguous pieces representable in the grammar."""

    @st.composite
    def build(draw):
        n = draw(st.integers(min_value=0, max_value=16))
        pitches = []
        for _ in range(n):
            options = [p for p in Pitch if not pitches or p is not pitches[-1]]
            pitches.append(draw(st.sampled_from(options)))
        durations = [draw(st.sampled_from(REPRESENTABLE)) for _ in range(n)]
        notes = []
        onset = Fraction(0)
        for pitch, dur in zip(pitches, durations):
            notes.append(Note(pitch, onset, dur))
            onset += dur
        return Piece(
            id=draw(st.from_regex(r"[a-z][a-z0-9-]{0,10}", fullmatch=True)),
            title=draw(st.from_regex(r"[A-Za-z][A-Za-z0-9 ]{0,14}[A-Za-z0-9]", fullmatch=True)),
            notes=tuple(notes),
            beats_per_measure=draw(st.integers(min_value=1, max_value=6)),
            default_tempo=float(draw(st.integers(min_value=40, max_value=200))),
        )

    return build()


class TestSerialize:
    @given(_pieces())
    @settings(max_examples=150, deadline=None)
    def test_round_trip(self, piece: Piece):
        assert parse_piece(serialize_piece(piece)) == piece

    def test_empty_piece_is_header_only(self):
        piece = make_piece([], piece_id="empty")
        text = serialize_piece(piece)
        assert "q" not in text.splitlines()[-1]
        assert parse_piece(text) == piece

    def test_off_grammar_duration_rejected(self):
        # 5/48 beat is on the tick grid but has no duration token.
        piece = Piece(
            id="odd",
            title="odd",
            notes=(Note(Pitch.C, Fraction(0), Fraction(5, 48)),),
        )
        with pytest.raises(SerializationError):
            serialize_piece(piece)

    def test_gap_rejected(self):
        piece = Piece(
            id="gap",
            title="gap",
            notes=(
                Note(Pitch.C, Fraction(0), Fraction(1)),
                Note(Pitch.D, Fraction(2), Fraction(1)),
            ),
        )
        with pytest.raises(SerializationError):
            serialize_piece(piece)

    def test_corpus_round_trips(self, corpus):
        for piece in corpus:
            assert parse_piece(serialize_piece(piece)) == piece


class TestCurriculum:
    def test_builtin_corpus_loads_16(self, corpus):
        assert len(corpus) == 16
        assert len({p.id for p in corpus}) == 16

    def test_missing_file_named(self, tmp_path):
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"id": "x", "pieces": ["a.rbs", "nope.rbs"]}))
        (tmp_path / "a.rbs").write_text("id: a\n\nC q D q\n")
        with pytest.raises(CurriculumError) as exc:
            load_curriculum(manifest)
        assert "nope.rbs" in str(exc.value)

    def test_two_piece_curriculum_allowed(self, tiny_curriculum):
        assert len(load_curriculum(tiny_curriculum)) == 2

    def test_single_piece_rejected(self, tmp_path):
        manifest = tmp_path / "m.json"
        (tmp_path / "a.rbs").write_text("id: a\n\nC q D q\n")
        manifest.write_text(json.dumps({"id": "x", "pieces": ["a.rbs"]}))
        with pytest.raises(CurriculumError):
            load_curriculum(manifest)

    def test_invalid_piece_aborts_with_filename(self, tmp_path):
        (tmp_path / "a.rbs").write_text("id: a\n\nC q D q\n")
        (tmp_path / "bad.rbs").write_text("id: bad\n\nC q C q\n")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"id": "x", "pieces": ["a.rbs", "bad.rbs"]}))
        with pytest.raises(CurriculumError) as exc:
            load_curriculum(manifest)
        assert "bad.rbs" in str(exc.value)

    def test_manifest_shape_errors(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("[1, 2]")
        with pytest.raises(CurriculumError):
            load_manifest(path)
        with pytest.raises(CurriculumError):
            load_manifest(tmp_path / "missing.json")

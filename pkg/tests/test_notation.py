from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from rainbowscore.notation import (
    DifficultyScale,
    DifficultyUndefinedError,
    Fingering,
    Note,
    NoteColor,
    Pitch,
    Severity,
    color_of,
    fingering_for_pitch,
    frequency_of,
    mean_interval,
    note_density,
    pitch_from_fingering,
    row_of,
    validate_piece,
)

from conftest import make_piece


def oracle_pitch(covered: tuple[bool, ...]) -> Pitch:
    """Independent topmost-open-hole rule: scan holes top-down for the first
    open one; all-covered sounds C."""
    for hole in range(1, 7):
        if not covered[hole - 1]:
            return Pitch(7 - hole)
    return Pitch.C


class TestTrinity:
    def test_canonical_fingerings(self):
        # C covers everything, D covers all but the lowest, B releases all.
        assert fingering_for_pitch(Pitch.C).covered == (True,) * 6
        assert fingering_for_pitch(Pitch.D).covered == (True, True, True, True, True, False)
        assert fingering_for_pitch(Pitch.B).covered == (False,) * 6

    def test_round_trip_all_pitches(self):
        for pitch in Pitch:
            assert pitch_from_fingering(fingering_for_pitch(pitch)) is pitch

    def test_total_over_64_patterns_matches_oracle(self):
        for bits in itertools.product([False, True], repeat=6):
            assert pitch_from_fingering(Fingering(bits)) is oracle_pitch(bits)

    def test_lowest_hole_open_is_d(self):
        assert pitch_from_fingering(Fingering((True,) * 5 + (False,))) is Pitch.D

    def test_partially_open_pattern(self):
        # holes 3..6 open with 1-2 covered: topmost open hole 3 -> degree 4 (G)
        assert pitch_from_fingering(Fingering((True, True, False, False, False, False))) is Pitch.G

    def test_fingering_length_enforced(self):
        with pytest.raises(ValueError):
            Fingering((True, False))


class TestColorsAndRows:
    def test_color_assignments(self):
        assert color_of(Pitch.C) is NoteColor.RED
        assert color_of(Pitch.D) is NoteColor.ORANGE
        assert color_of(Pitch.B) is NoteColor.GREY

    def test_color_bijective(self):
        assert len({color_of(p) for p in Pitch}) == 7

    def test_rows(self):
        assert row_of(Pitch.C) == 0
        assert row_of(Pitch.D) == 1
        assert row_of(Pitch.B) == 6
        assert len({row_of(p) for p in Pitch}) == 7

    def test_css_values(self):
        assert NoteColor.RED.css == "#E6194B"
        assert NoteColor.GREY.rgb == 0xA9A9A9


class TestFrequency:
    def test_reference_values(self):
        # 440 * 2^((midi-69)/12) for A5=81, C5=72, B5=83
        assert frequency_of(Pitch.A) == pytest.approx(880.0, abs=1e-9)
        assert frequency_of(Pitch.C) == pytest.approx(523.2511306011972, abs=0.01)
        assert frequency_of(Pitch.B) == pytest.approx(987.7666025122483, abs=0.01)

    def test_strictly_increasing(self):
        freqs = [frequency_of(p) for p in Pitch]
        assert all(a < b for a, b in zip(freqs, freqs[1:]))


class TestNoteAndPiece:
    def test_note_grid(self):
        Note(Pitch.C, Fraction(1, 48), Fraction(1, 3))  # on-grid values pass
        with pytest.raises(ValueError):
            Note(Pitch.C, Fraction(1, 5), Fraction(1))
        with pytest.raises(ValueError):
            Note(Pitch.C, Fraction(0), Fraction(0))
        with pytest.raises(ValueError):
            Note(Pitch.C, Fraction(-1), Fraction(1))

    def test_validate_clean_piece(self):
        piece = make_piece(["C", "D", "E", "F", "G", "A", "B", "A"] * 4)
        assert piece.measure_count == 8
        assert validate_piece(piece) == []

    def test_adjacent_equal_pitch(self):
        piece = make_piece(["D", "D"])
        codes = [v.code for v in validate_piece(piece)]
        assert codes == ["adjacent-equal-pitch"]

    def test_polyphony(self):
        notes = (
            Note(Pitch.C, Fraction(0), Fraction(2)),
            Note(Pitch.D, Fraction(1), Fraction(1)),
        )
        piece = make_piece([])
        piece = piece.__class__(id="p", title="p", notes=notes)
        codes = [v.code for v in validate_piece(piece)]
        assert codes == ["polyphony"]

    def test_unsorted(self):
        notes = (
            Note(Pitch.C, Fraction(2), Fraction(1)),
            Note(Pitch.D, Fraction(0), Fraction(1)),
        )
        piece = make_piece([]).__class__(id="p", title="p", notes=notes)
        assert "unsorted" in [v.code for v in validate_piece(piece)]

    def test_page_overflow_is_warning(self):
        piece = make_piece(["C", "D"] * 17)  # 34 beats > 8 measures of 4
        violations = validate_piece(piece)
        assert [v.code for v in violations] == ["page-overflow"]
        assert violations[0].severity is Severity.WARNING


class TestDifficulty:
    def test_singleton_curriculum_scores_zero(self):
        piece = make_piece(["C", "D", "E", "F"])
        scale = DifficultyScale.fit([piece])
        assert scale.score(piece) == 0.0

    def test_determinism(self):
        a = make_piece(["C", "D", "E", "F"], piece_id="a")
        b = make_piece(["C", "E", "G", "B"], piece_id="b")
        scale = DifficultyScale.fit([a, b])
        assert scale.score(a) == scale.score(a)

    def test_wider_intervals_score_higher(self):
        # Same rhythm; stepwise (interval 1) vs leaps of 4. Brute-force check
        # of both metrics confirms the densities tie and intervals order.
        stepwise = make_piece(["C", "D", "E", "D", "C", "D"], piece_id="x")
        leaps = make_piece(["C", "G", "C", "G", "C", "G"], piece_id="y")
        assert note_density(stepwise) == note_density(leaps) == 1.0
        assert mean_interval(stepwise) == 1.0
        assert mean_interval(leaps) == 4.0
        scale = DifficultyScale.fit([stepwise, leaps])
        assert scale.score(leaps) > scale.score(stepwise)

    def test_interval_needs_two_notes(self):
        with pytest.raises(DifficultyUndefinedError):
            mean_interval(make_piece(["C"]))

    def test_enlarged_intervals_increase_difficulty(self):
        base = make_piece(["C", "D", "C", "D"], piece_id="base")
        wider = make_piece(["C", "E", "C", "E"], piece_id="wider")
        scale = DifficultyScale.fit([base, wider])
        assert scale.score(wider) > scale.score(base)

import io

import mido
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_notes
from lyricmelody.errors import Rejection
from lyricmelody.ingestion import (
    IngestConfig,
    LyricWord,
    PipelineReport,
    align_lyrics_melody,
    best_octave_shift,
    clean_melody,
    dedup_corpus,
    ingest_files,
    ingest_song,
    merge_fragments,
    process_lyrics,
    quantize_duration,
    quantize_onset,
)
from lyricmelody.midi import LyricEvent, RawNote
from lyricmelody.representation import DURATIONS, TICKS_PER_BAR, Tempo
from lyricmelody.synth import SynthConfig, random_corpus, render_midi

GRID = sorted(set(range(0, 21 * TICKS_PER_BAR + 1, 30)) | set(range(0, 21 * TICKS_PER_BAR + 1, 40)))


def _events(*fragments):
    return [LyricEvent(i * 480, text) for i, text in enumerate(fragments)]


class TestLyrics:
    def test_merge_without_spaces(self):
        words = merge_fragments(_events("Hel", "lo ", "world "))
        assert [w.text for w in words] == ["hello", "world"]
        assert words[0].tick == 0 and words[1].tick == 960

    def test_merge_after_hyphen(self):
        words = merge_fragments(_events("ba-", " na-", " na ", "split"))
        assert [w.text for w in words] == ["banana", "split"]
        assert words[0].syllables == ("ba", "na", "na")

    def test_leading_space_starts_word(self):
        assert [w.text for w in merge_fragments(_events("love", " me"))] == ["love", "me"]

    def test_cleaning_keeps_punctuation(self):
        words = merge_fragments(_events("Night, ", "(oh) ", "Don't "))
        assert [w.text for w in words] == ["night,", "oh", "don't"]

    def test_header_and_line_markers(self):
        words = merge_fragments(_events("@Ttitle", "/love ", "\\me "))
        assert [w.text for w in words] == ["love", "me"]

    def test_repetition_rejected(self, dictionary):
        with pytest.raises(Rejection) as err:
            process_lyrics(_events(*["la "] * 10), dictionary)
        assert err.value.reason == "lyric-repetition"

    def test_reference_sentence_retained(self, dictionary):
        words = process_lyrics(_events("have ", "a ", "ba-", "na-", "na "), dictionary)
        assert [w.text for w in words] == ["have", "a", "banana"]

    def test_dictionary_misses_dropped(self, dictionary):
        words = process_lyrics(_events("love ", "xyzzy ", "night "), dictionary)
        assert [w.text for w in words] == ["love", "night"]

    def test_all_missing(self, dictionary):
        with pytest.raises(Rejection) as err:
            process_lyrics(_events("xyzzy ", "plugh "), dictionary)
        assert err.value.reason == "dictionary-miss"

    def test_long_short_rejected(self, dictionary):
        with pytest.raises(Rejection) as err:
            process_lyrics(_events("a ", "i ", "me ", "love "), dictionary)
        assert err.value.reason == "long-short-words"

    def test_thresholds_configurable(self, dictionary):
        loose = IngestConfig(max_long_short=1.0)
        assert len(process_lyrics(_events("a ", "i ", "me ", "love "), dictionary, loose)) == 4


class TestQuantization:
    def test_example(self):
        assert quantize_onset(37) == 40

    def test_tie_prefers_thirty_grid(self):
        # 35 is 5 from 30 and 5 from 40
        assert quantize_onset(35) == 30

    @given(st.integers(0, 20 * TICKS_PER_BAR))
    def test_nearest_point_within_twenty(self, tick):
        q = quantize_onset(tick)
        assert abs(q - tick) <= 20
        assert q % 30 == 0 or q % 40 == 0
        best = min(abs(g - tick) for g in GRID)
        assert abs(q - tick) == best

    @given(st.integers(1, 4000))
    def test_duration_on_vocabulary(self, ticks):
        d = quantize_duration(ticks)
        assert d in DURATIONS
        assert abs(d - ticks) == min(abs(v - ticks) for v in DURATIONS)


class TestOctaveShift:
    def test_low_melody_moves_up(self):
        assert best_octave_shift([36, 38, 40, 43]) == 12

    @given(st.lists(st.integers(0, 127), min_size=1, max_size=30))
    def test_maximal_in_range_count(self, pitches):
        shift = best_octave_shift(pitches)
        assert shift % 12 == 0

        def inside(s):
            return sum(48 <= p + s < 72 for p in pitches)

        legal = [12 * k for k in range(-5, 6) if 0 <= min(pitches) + 12 * k and max(pitches) + 12 * k <= 127]
        assert inside(shift) == max(inside(s) for s in legal)


def _raw(spec):
    return [RawNote(o, p, d, 90) for o, p, d in spec]


class TestMelody:
    def _bars(self, n_bars):
        return _raw([(b * TICKS_PER_BAR, 60, 1920) for b in range(n_bars)])

    def test_seven_bars_rejected(self):
        with pytest.raises(Rejection) as err:
            clean_melody(self._bars(7), Tempo.ADAGIO)
        assert err.value.reason == "min-bars"

    def test_eight_bars_kept(self):
        notes, _ = clean_melody(self._bars(8), Tempo.ADAGIO)
        assert len(notes) == 8

    def test_empty_bars_removed(self):
        spec = [(0, 60, 480)] + [((b + 3) * TICKS_PER_BAR, 62, 480) for b in range(8)]
        notes, bar_map = clean_melody(_raw(spec), Tempo.ADAGIO)
        assert [n.bar for n in notes] == list(range(9))
        assert bar_map[3] == 1

    def test_chord_keeps_highest(self):
        spec = [(0, 60, 480), (0, 67, 480)] + [(b * TICKS_PER_BAR, 62, 480) for b in range(1, 8)]
        notes, _ = clean_melody(_raw(spec), Tempo.ADAGIO)
        assert notes[0].pitch == 67

    def test_overlap_clipped(self):
        spec = [(0, 60, 900), (480, 62, 480)] + [(b * TICKS_PER_BAR, 62, 480) for b in range(1, 8)]
        notes, _ = clean_melody(_raw(spec), Tempo.ADAGIO)
        assert notes[0].duration == 480

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 12 * TICKS_PER_BAR), st.integers(20, 100),
                              st.integers(10, 2000)), min_size=1, max_size=40))
    def test_idempotent(self, spec):
        spec += [(b * TICKS_PER_BAR, 60, 480) for b in range(8)]
        notes, _ = clean_melody(_raw(spec), Tempo.ANDANTE)
        for n in notes:
            n.validate()
        again, _ = clean_melody(_raw([(n.onset, n.pitch, n.duration) for n in notes]), Tempo.ANDANTE)
        assert again == notes


class TestAlignment:
    def test_example(self):
        notes = make_notes([(0, 60, 480), (480, 62, 480), (960, 64, 480), (1440, 65, 480)])
        song = align_lyrics_melody([LyricWord("have", 0, ()), LyricWord("love", 960, ())], notes)
        assert song.word_of_note == (0, 0, 1, 1)

    def test_single(self):
        notes = make_notes([(0, 60, 480)])
        assert align_lyrics_melody([LyricWord("hi", 0, ())], notes).word_of_note == (0,)

    def test_degenerate(self):
        notes = make_notes([(0, 60, 480)])
        with pytest.raises(Rejection) as err:
            align_lyrics_melody([LyricWord("a", 0, ()), LyricWord("b", 10, ())], notes)
        assert err.value.reason == "degenerate-alignment"

    def test_collision_keeps_first(self):
        notes = make_notes([(0, 60, 480), (480, 62, 480)])
        song = align_lyrics_melody([LyricWord("a", 0, ()), LyricWord("b", 20, ()),
                                    LyricWord("c", 470, ())], notes)
        assert song.words == ("a", "c")


def _midi(messages, conductor):
    mid = mido.MidiFile(type=1, ticks_per_beat=480)
    mid.tracks.append(mido.MidiTrack(conductor))
    mid.tracks.append(mido.MidiTrack(messages))
    buf = io.BytesIO()
    mid.save(file=buf)
    return buf.getvalue()


def _bar_song(n_bars, numerator=4, tempos=(100,)):
    conductor = [mido.MetaMessage("time_signature", numerator=numerator, denominator=4)]
    conductor += [mido.MetaMessage("set_tempo", tempo=mido.bpm2tempo(b), time=1920 * (i > 0))
                  for i, b in enumerate(tempos)]
    words = ["love ", "night ", "morning ", "river ", "summer ", "garden ", "silver ",
             "ocean ", "dream ", "shadow "]
    track = []
    for b in range(n_bars):
        track.append(mido.MetaMessage("lyrics", text=words[b % len(words)], time=0))
        track.append(mido.Message("note_on", note=60 + b % 5, velocity=90, time=0))
        track.append(mido.Message("note_off", note=60 + b % 5, velocity=0, time=1920))
    return _midi(track, conductor)


class TestPipeline:
    def test_min_bars(self, dictionary):
        with pytest.raises(Rejection) as err:
            ingest_song(_bar_song(7), dictionary)
        assert err.value.reason == "min-bars"
        assert len(ingest_song(_bar_song(8), dictionary).notes) == 8

    def test_time_signature(self, dictionary):
        with pytest.raises(Rejection) as err:
            ingest_song(_bar_song(8, numerator=3), dictionary)
        assert err.value.reason == "non-4/4"

    def test_tempo_change(self, dictionary):
        with pytest.raises(Rejection) as err:
            ingest_song(_bar_song(8, tempos=(100, 120)), dictionary)
        assert err.value.reason == "tempo-change"

    def test_parse_error_is_rejection(self, dictionary):
        with pytest.raises(Rejection) as err:
            ingest_song(b"MThd\x00", dictionary)
        assert err.value.reason == "parse-error"

    def test_synthetic_songs_survive_unchanged(self, dictionary):
        for song in random_corpus(8, seed=3, dictionary=dictionary, config=SynthConfig(max_words=40)):
            assert ingest_song(render_midi(song, ppq=192), dictionary) == song

    def test_files_report_and_threads(self, tmp_path, dictionary):
        songs = random_corpus(6, seed=11, dictionary=dictionary, config=SynthConfig(max_words=40))
        paths = []
        for i, song in enumerate(songs):
            paths.append(tmp_path / f"s{i}.mid")
            paths[-1].write_bytes(render_midi(song))
        (tmp_path / "dup.mid").write_bytes(render_midi(songs[0]))
        (tmp_path / "short.mid").write_bytes(_bar_song(7))
        (tmp_path / "junk.mid").write_bytes(b"not midi")
        paths += [tmp_path / "dup.mid", tmp_path / "short.mid", tmp_path / "junk.mid"]
        serial, report = ingest_files(paths, dictionary)
        parallel, report2 = ingest_files(paths, dictionary, threads=3)
        assert serial == parallel == songs
        assert report.to_json() == report2.to_json()
        assert report.reconciles()
        assert report.rejected["duplicate"] == 1
        assert report.rejected["min-bars"] == 1
        assert report.rejected["parse-error"] == 1

    def test_empty_report(self):
        report = PipelineReport()
        assert report.reconciles() and report.to_json()["retained"] == 0


class TestDedup:
    def test_planted_duplicates(self, dictionary):
        base = random_corpus(900, seed=5, dictionary=dictionary,
                             config=SynthConfig(min_words=8, max_words=16))
        rng = np.random.default_rng(0)
        planted = [base[int(i)] for i in rng.choice(900, size=100, replace=True)]
        mixed = list(base)
        for song in planted:
            mixed.insert(int(rng.integers(len(mixed) + 1)), song)
        kept = dedup_corpus(mixed)
        assert len(kept) == len(dedup_corpus(base)) == 900

    def test_same_lyrics_different_melody(self, dictionary):
        a, b = random_corpus(2, seed=1, dictionary=dictionary, config=SynthConfig(min_words=5, max_words=10))
        from dataclasses import replace
        b2 = replace(a, notes=tuple(replace(n, pitch=n.pitch + 1) for n in a.notes))
        assert len(dedup_corpus([a, b2])) == 2
        assert len(dedup_corpus([a, a, b])) == 2

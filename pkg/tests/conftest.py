from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from lyricmelody.dictionary import PronouncingDictionary
from lyricmelody.representation import (
    DURATIONS,
    POSITIONS,
    TICKS_PER_BAR,
    AlignedSong,
    Note,
    Tempo,
)
from lyricmelody.synth import SynthConfig, random_corpus


@pytest.fixture(scope="session")
def dictionary() -> PronouncingDictionary:
    return PronouncingDictionary.bundled()


@pytest.fixture(scope="session")
def corpus(dictionary):
    return random_corpus(60, seed=7, dictionary=dictionary, config=SynthConfig(max_words=50))


def make_notes(spec, tempo: Tempo = Tempo.MODERATO) -> tuple[Note, ...]:
    """``[(onset, pitch, duration), ...]`` in absolute ticks."""
    return tuple(Note(o // TICKS_PER_BAR, o % TICKS_PER_BAR, p, d, tempo) for o, p, d in spec)


def sequential_notes(pitches, durations, start: int = 0, tempo: Tempo = Tempo.MODERATO):
    onset = start
    spec = []
    for p, d in zip(pitches, durations):
        spec.append((onset, p, d))
        onset += d
    return make_notes(spec, tempo)


ONSET_GRID = tuple(b * TICKS_PER_BAR + p for b in range(40) for p in POSITIONS)


@st.composite
def songs(draw, max_words: int = 12, max_notes_per_word: int = 3) -> AlignedSong:
    """Valid AlignedSongs with arbitrary grid-aligned notes and phrase maps."""
    n_words = draw(st.integers(1, max_words))
    per_word = draw(st.lists(st.integers(1, max_notes_per_word), min_size=n_words, max_size=n_words))
    n_notes = sum(per_word)
    tempo = draw(st.sampled_from(list(Tempo)))
    onsets = sorted(draw(st.lists(st.sampled_from(ONSET_GRID), min_size=n_notes,
                                  max_size=n_notes, unique=True)))
    notes = tuple(
        Note(o // TICKS_PER_BAR, o % TICKS_PER_BAR, draw(st.integers(0, 127)),
             draw(st.sampled_from(DURATIONS)), tempo)
        for o in onsets
    )
    word_of_note = tuple(w for w, k in enumerate(per_word) for _ in range(k))
    words = tuple(draw(st.sampled_from(["love", "night,", "banana", "the", "sky.", "don't"]))
                  for _ in range(n_words))
    # phrase boundaries at word starts keep both maps consistent
    cuts = draw(st.lists(st.booleans(), min_size=n_words, max_size=n_words))
    phrase_of_word = []
    p = 0
    for w in range(n_words):
        if w > 0 and cuts[w]:
            p += 1
        phrase_of_word.append(p)
    phrase_of_note = tuple(phrase_of_word[w] for w in word_of_note)
    return AlignedSong(words, notes, word_of_note, tuple(phrase_of_word), phrase_of_note)


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)

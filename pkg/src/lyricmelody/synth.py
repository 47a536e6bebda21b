"""Seeded synthetic songs for tests, benchmarks and the toy MIDI corpus.

Melodies are pitch random walks over a small rhythm vocabulary; each word is
sung on one note per syllable, occasionally with an extra melismatic note.
Some songs carry punctuation (lyrics-based phrases), the rest rely on the
melody-based phrase recognizer.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
import numpy as np

from .dictionary import PronouncingDictionary
from .phrase import PhraseConfig, assign_phrase_ids, recognize_phrases
from .representation import TICKS_PER_BAR, AlignedSong, Note, Tempo, tempo_class

# Every value is a multiple of 40 ticks, so onsets stay on the position grid.
NOTE_DURATIONS = (120, 240, 240, 240, 480, 480, 720, 960, 160, 80)
REST_DURATIONS = (240, 480)
# A tempo inside each class, used when rendering a song back to MIDI.
CLASS_BPM = {Tempo.LARGE: 50.0, Tempo.LARGHETTO: 63.0, Tempo.ADAGIO: 72.0,
             Tempo.ANDANTE: 90.0, Tempo.MODERATO: 112.0, Tempo.ALLEGRO: 140.0,
             Tempo.PRESTO: 180.0}


@dataclass(frozen=True)
class SynthConfig:
    min_words: int = 30
    max_words: int = 90
    melisma_prob: float = 0.15
    rest_prob: float = 0.08
    punctuated_share: float = 0.6
    punctuation_prob: float = 0.15
    pitch_low: int = 55
    pitch_high: int = 71
    bpm_choices: tuple[float, ...] = (72.0, 90.0, 100.0, 120.0, 140.0)


def _split_word(text: str, k: int) -> list[str]:
    """Cut ``text`` into ``k`` non-empty pieces (fewer if it is too short)."""
    k = max(1, min(k, len(text)))
    bounds = np.linspace(0, len(text), k + 1).round().astype(int)
    return [text[a:b] for a, b in zip(bounds, bounds[1:])]


def random_song(rng: np.random.Generator, dictionary: PronouncingDictionary,
                config: SynthConfig = SynthConfig(),
                phrase_config: PhraseConfig = PhraseConfig()) -> AlignedSong:
    vocab = sorted(dictionary.words())
    n_words = int(rng.integers(config.min_words, config.max_words + 1))
    punctuated = rng.random() < config.punctuated_share
    tempo = tempo_class(float(rng.choice(config.bpm_choices)))

    words: list[str] = []
    notes: list[Note] = []
    word_of_note: list[int] = []
    tick = 0
    pitch = int(rng.integers(config.pitch_low + 4, config.pitch_high - 4))
    for w in range(n_words):
        text = vocab[int(rng.integers(len(vocab)))]
        while words and text == words[-1].rstrip(",."):
            text = vocab[int(rng.integers(len(vocab)))]
        if punctuated and rng.random() < config.punctuation_prob:
            text += "," if rng.random() < 0.7 else "."
        words.append(text)
        k = len(dictionary.stress(text)) + int(rng.random() < config.melisma_prob)
        for _ in range(k):
            pitch = int(np.clip(pitch + rng.integers(-4, 5), config.pitch_low, config.pitch_high))
            dur = int(rng.choice(NOTE_DURATIONS))
            notes.append(Note(tick // TICKS_PER_BAR, tick % TICKS_PER_BAR, pitch, dur, tempo))
            word_of_note.append(w)
            tick += dur
            if rng.random() < config.rest_prob:
                tick += int(rng.choice(REST_DURATIONS))
    song = AlignedSong.single_phrase(words, notes, word_of_note)
    return assign_phrase_ids(song, recognize_phrases(song, phrase_config))


def random_corpus(n: int, seed: int, dictionary: PronouncingDictionary | None = None,
                  config: SynthConfig = SynthConfig()) -> list[AlignedSong]:
    dictionary = dictionary or PronouncingDictionary.bundled()
    rng = np.random.default_rng(seed)
    return [random_song(rng, dictionary, config) for _ in range(n)]


def render_midi(song: AlignedSong, bpm: float | None = None, ppq: int = 480,
                split_syllables: bool = True) -> bytes:
    """Type-1 MIDI bytes: a conductor track and one lyric-bearing melody track.

    Words sung on several notes are written as hyphenated fragments, one per
    note. ``bpm`` defaults to a tempo inside the song's tempo class.
    Requires the optional ``mido`` package.
    """
    import mido

    if bpm is None:
        bpm = CLASS_BPM[song.notes[0].tempo]

    def scaled(t: int) -> int:
        value = t * ppq
        if value % 480:
            raise ValueError(f"tick {t} is not representable at {ppq} ppq")
        return value // 480

    mid = mido.MidiFile(type=1, ticks_per_beat=ppq)
    conductor = mido.MidiTrack()
    conductor.append(mido.MetaMessage("time_signature", numerator=4, denominator=4, time=0))
    conductor.append(mido.MetaMessage("set_tempo", tempo=mido.bpm2tempo(bpm), time=0))
    mid.tracks.append(conductor)

    events: list[tuple[int, int, mido.Message]] = []  # (tick, order, message)
    for w, rng_ in enumerate(song.word_note_ranges()):
        pieces = _split_word(song.words[w], len(rng_)) if split_syllables else [song.words[w]]
        for j, k in enumerate(rng_):
            if j < len(pieces):
                text = pieces[j] + ("-" if j < len(pieces) - 1 else " ")
                events.append((song.notes[k].onset, 1, mido.MetaMessage("lyrics", text=text)))
    for n in song.notes:
        events.append((n.onset, 2, mido.Message("note_on", note=n.pitch, velocity=90)))
        events.append((n.end, 0, mido.Message("note_off", note=n.pitch, velocity=0)))
    track = mido.MidiTrack()
    last = 0
    for tick, _, msg in sorted(events, key=lambda e: (e[0], e[1])):
        track.append(msg.copy(time=scaled(tick) - scaled(last)))
        last = tick
    mid.tracks.append(track)
    buf = io.BytesIO()
    mid.save(file=buf)
    return buf.getvalue()

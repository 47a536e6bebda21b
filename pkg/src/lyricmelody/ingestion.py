"""Four-phase cleaning of raw MIDI songs into aligned lyric-melody pairs.

Lyrics: clean fragments, merge syllables into words, drop words missing from
the pronouncing dictionary, filter repetitive or long/short-word lyrics.
Melody: require 4/4 and a constant tempo, transpose by whole octaves toward
[48, 72), quantize to the 30/40-tick union grid, drop empty bars, require a
minimum bar count. Alignment: attach each word to its nearest note. Finally
de-duplicate on (melody hash, lyric hash).
"""

from __future__ import annotations

import bisect
import hashlib
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .dictionary import PronouncingDictionary, lookup_key
from .errors import CapacityError, InvalidInput, ParseError, Rejection
from .midi import LyricEvent, RawNote, RawSong, parse_midi
from .phrase import PhraseConfig, assign_phrase_ids, recognize_phrases
from .representation import (
    DURATIONS,
    MAX_BARS,
    MAX_PITCH,
    MAX_WORDS,
    TICKS_PER_BAR,
    AlignedSong,
    Note,
    Tempo,
    tempo_class,
)

log = logging.getLogger(__name__)

PUNCTUATION = frozenset("'\",:;.?!")
DEFAULT_BPM = 120.0

REJECTION_REASONS = (
    "parse-error",
    "no-lyrics",
    "dictionary-miss",
    "lyric-repetition",
    "long-short-words",
    "no-melody",
    "non-4/4",
    "tempo-change",
    "min-bars",
    "bar-cap",
    "degenerate-alignment",
    "capacity",
    "duplicate",
)


@dataclass(frozen=True)
class IngestConfig:
    max_repetition: float = 0.2
    max_long_short: float = 0.5
    short_word_max: int = 2
    long_word_min: int = 10
    min_bars: int = 8
    pitch_low: int = 48
    pitch_high: int = 72


# ---------------------------------------------------------------------------
# Lyrics


@dataclass(frozen=True)
class LyricWord:
    text: str
    tick: int
    syllables: tuple[str, ...]


def clean_text(text: str) -> str:
    """Keep English letters and the seven punctuation marks, lowercased."""
    return "".join(c for c in text.lower() if ("a" <= c <= "z") or c in PUNCTUATION)


def merge_fragments(events: Sequence[LyricEvent]) -> list[LyricWord]:
    """Join syllable fragments into words.

    A fragment continues the current word when the previous fragment ended
    with a hyphen, or when neither the previous fragment ends nor this one
    starts with whitespace. Karaoke line markers ``/`` and ``\\`` act as
    whitespace; ``@`` header texts are skipped.
    """
    words: list[tuple[int, list[str]]] = []
    after_hyphen = False
    open_end = False
    for ev in events:
        raw = ev.text
        if raw.startswith("@"):
            continue
        raw = raw.replace("\\", " ").replace("/", " ")
        if not raw.strip():
            after_hyphen = open_end = False
            continue
        pieces = raw.split()
        continues = after_hyphen or (open_end and not raw[0].isspace())
        if words and continues:
            words[-1][1].append(pieces[0])
        else:
            words.append((ev.tick, [pieces[0]]))
        words.extend((ev.tick, [piece]) for piece in pieces[1:])
        after_hyphen = pieces[-1].endswith("-")
        open_end = not raw[-1].isspace()
    out = []
    for tick, syllables in words:
        text = clean_text("".join(s.rstrip("-") for s in syllables))
        if any("a" <= c <= "z" for c in text):
            out.append(LyricWord(text, tick, tuple(clean_text(s) for s in syllables)))
    return out


def letter_count(word: str) -> int:
    return sum(1 for c in word if "a" <= c <= "z")


def repetition_ratio(words: Sequence[str]) -> float:
    """Share of words identical to the word immediately before them."""
    keys = [lookup_key(w) for w in words]
    repeats = sum(1 for a, b in zip(keys, keys[1:]) if a == b)
    return repeats / len(keys)


def long_short_ratio(words: Sequence[str], config: IngestConfig = IngestConfig()) -> float:
    flagged = sum(
        1 for w in words
        if letter_count(w) <= config.short_word_max or letter_count(w) >= config.long_word_min
    )
    return flagged / len(words)


def process_lyrics(raw: RawSong | Sequence[LyricEvent], dictionary: PronouncingDictionary,
                   config: IngestConfig = IngestConfig()) -> list[LyricWord]:
    events = raw.lyrics if isinstance(raw, RawSong) else tuple(raw)
    if not events:
        raise Rejection("no-lyrics")
    words = [w for w in merge_fragments(events) if w.text in dictionary]
    if not words:
        raise Rejection("dictionary-miss", "no lyric word is in the pronouncing dictionary")
    texts = [w.text for w in words]
    ratio = repetition_ratio(texts)
    if ratio > config.max_repetition:
        raise Rejection("lyric-repetition", f"repetition ratio {ratio:.3f}")
    ratio = long_short_ratio(texts, config)
    if ratio > config.max_long_short:
        raise Rejection("long-short-words", f"long/short word proportion {ratio:.3f}")
    return words


# ---------------------------------------------------------------------------
# Melody

def _nearest_on_grid(tick: int, step: int) -> int:
    lo = (tick // step) * step
    return lo if tick - lo <= lo + step - tick else lo + step


def quantize_onset(tick: int) -> int:
    """Nearest point of {30k} ∪ {40k}; ties go to the 30-tick grid."""
    q30 = _nearest_on_grid(tick, 30)
    q40 = _nearest_on_grid(tick, 40)
    return q30 if abs(tick - q30) <= abs(tick - q40) else q40


def quantize_duration(ticks: int) -> int:
    """Nearest duration-vocabulary value; ties go to multiples of 30, then shorter."""
    i = bisect.bisect_left(DURATIONS, ticks)
    candidates = DURATIONS[max(0, i - 1):i + 1]
    return min(candidates, key=lambda d: (abs(ticks - d), d % 30 != 0, d))


def best_octave_shift(pitches: Sequence[int], low: int = 48, high: int = 72) -> int:
    """Whole-octave shift (in semitones) maximizing notes inside [low, high).

    Ties prefer the smaller absolute shift, then the upward one. Shifts that
    push any pitch outside MIDI range are not considered.
    """
    best_key, best = None, 0
    for octaves in range(-10, 11):
        shift = 12 * octaves
        if min(pitches) + shift < 0 or max(pitches) + shift > MAX_PITCH:
            continue
        inside = sum(1 for p in pitches if low <= p + shift < high)
        key = (-inside, abs(shift), -shift)
        if best_key is None or key < best_key:
            best_key, best = key, shift
    return best


@dataclass(frozen=True)
class ProcessedMelody:
    notes: tuple[Note, ...]
    bpm: float
    # original bar index -> bar index after empty-bar removal (kept bars only)
    bar_map: dict[int, int] = field(hash=False)

    def map_tick(self, tick: int) -> int:
        """Carry a tick of the original timeline through quantization-free bar removal."""
        bar, offset = divmod(tick, TICKS_PER_BAR)
        if bar in self.bar_map:
            return self.bar_map[bar] * TICKS_PER_BAR + offset
        later = [b for b in self.bar_map if b > bar]
        new_bar = self.bar_map[min(later)] if later else len(self.bar_map)
        return new_bar * TICKS_PER_BAR


def clean_melody(notes: Sequence[RawNote], tempo: Tempo,
                 config: IngestConfig = IngestConfig()) -> tuple[tuple[Note, ...], dict[int, int]]:
    """Quantize, make monophonic, transpose, and drop empty bars.

    Returns the notes and the map from original to new bar indices. Raises
    :class:`Rejection` for too few or too many bars.
    """
    if not notes:
        raise Rejection("no-melody")
    by_onset: dict[int, RawNote] = {}
    for n in notes:
        onset = quantize_onset(n.onset)
        kept = by_onset.get(onset)
        if kept is None or n.pitch > kept.pitch:
            by_onset[onset] = n
    onsets = sorted(by_onset)
    events = []
    for k, onset in enumerate(onsets):
        raw = by_onset[onset]
        length = raw.duration
        if k + 1 < len(onsets):
            length = min(length, onsets[k + 1] - onset)
        events.append((onset, raw.pitch, quantize_duration(length)))

    shift = best_octave_shift([p for _, p, _ in events], config.pitch_low, config.pitch_high)

    occupied = set()
    for onset, _, dur in events:
        occupied.update(range(onset // TICKS_PER_BAR, (onset + dur - 1) // TICKS_PER_BAR + 1))
    bar_map = {b: i for i, b in enumerate(sorted(occupied))}
    n_bars = len(bar_map)
    if n_bars < config.min_bars:
        raise Rejection("min-bars", f"{n_bars} bars")
    if n_bars > MAX_BARS:
        raise Rejection("bar-cap", f"{n_bars} bars")
    out = tuple(
        Note(bar_map[onset // TICKS_PER_BAR], onset % TICKS_PER_BAR, pitch + shift, dur, tempo)
        for onset, pitch, dur in events
    )
    return out, bar_map


def process_melody(raw: RawSong, config: IngestConfig = IngestConfig()) -> ProcessedMelody:
    for _, num, den in raw.time_signatures:
        if (num, den) != (4, 4):
            raise Rejection("non-4/4", f"time signature {num}/{den}")
    bpms = {round(bpm, 6) for _, bpm in raw.tempos}
    if len(bpms) > 1:
        raise Rejection("tempo-change", f"{len(bpms)} distinct tempi")
    bpm = bpms.pop() if bpms else DEFAULT_BPM
    notes, bar_map = clean_melody(raw.notes, tempo_class(bpm), config)
    return ProcessedMelody(notes, bpm, bar_map)


# ---------------------------------------------------------------------------
# Alignment


def align_lyrics_melody(words: Sequence[LyricWord], notes: Sequence[Note]) -> AlignedSong:
    """Attach each word to the note whose onset is nearest the word's tick.

    Ticks of ``words`` must already be on the timeline of ``notes``. When
    several words land on one note only the first is kept. Notes between two
    anchored notes belong to the earlier word; notes before the first anchor
    belong to the first word.
    """
    if not words or not notes:
        raise InvalidInput("alignment needs at least one word and one note")
    onsets = [n.onset for n in notes]
    anchors: list[int] = []
    kept: list[str] = []
    for w in words:
        i = bisect.bisect_left(onsets, w.tick)
        candidates = [j for j in (i - 1, i) if 0 <= j < len(onsets)]
        nearest = min(candidates, key=lambda j: (abs(onsets[j] - w.tick), j))
        if anchors and nearest <= anchors[-1]:
            continue
        anchors.append(nearest)
        kept.append(w.text)
    if len(words) > 1 and len(kept) == 1:
        raise Rejection("degenerate-alignment", "all words collapse onto one note")
    if len(kept) > MAX_WORDS:
        raise Rejection("capacity", f"{len(kept)} words")
    word_of_note = []
    w = 0
    for k in range(len(notes)):
        while w + 1 < len(anchors) and anchors[w + 1] <= k:
            w += 1
        word_of_note.append(w)
    return AlignedSong.single_phrase(kept, notes, word_of_note)


# ---------------------------------------------------------------------------
# De-duplication


def song_hashes(song: AlignedSong) -> tuple[str, str]:
    melody = ";".join(f"{n.bar},{n.position},{n.pitch},{n.duration}" for n in song.notes)
    lyrics = " ".join(song.words)
    return (hashlib.sha256(melody.encode()).hexdigest(),
            hashlib.sha256(lyrics.encode()).hexdigest())


def dedup_corpus(songs: Iterable[AlignedSong]) -> list[AlignedSong]:
    seen = set()
    out = []
    for song in songs:
        key = song_hashes(song)
        if key not in seen:
            seen.add(key)
            out.append(song)
    return out


# ---------------------------------------------------------------------------
# Whole pipeline


@dataclass
class PipelineReport:
    input: int = 0
    retained: int = 0
    rejected: Counter = field(default_factory=Counter)

    def reconciles(self) -> bool:
        return self.retained + sum(self.rejected.values()) == self.input

    def to_json(self) -> dict:
        return {
            "input": self.input,
            "retained": self.retained,
            "rejected": {r: self.rejected.get(r, 0) for r in REJECTION_REASONS},
        }


def ingest_song(data: bytes, dictionary: PronouncingDictionary,
                config: IngestConfig = IngestConfig(),
                phrase_config: PhraseConfig = PhraseConfig()) -> AlignedSong:
    """Run one file through every per-song phase. Raises :class:`Rejection`."""
    try:
        raw = parse_midi(data)
    except ParseError as exc:
        raise Rejection("parse-error", str(exc)) from None
    words = process_lyrics(raw, dictionary, config)
    melody = process_melody(raw, config)
    words = [LyricWord(w.text, melody.map_tick(w.tick), w.syllables) for w in words]
    song = align_lyrics_melody(words, melody.notes)
    try:
        return assign_phrase_ids(song, recognize_phrases(song, phrase_config))
    except CapacityError as exc:
        raise Rejection("capacity", str(exc)) from None


def _ingest_path(args) -> AlignedSong | str:
    path, dictionary, config, phrase_config = args
    try:
        return ingest_song(Path(path).read_bytes(), dictionary, config, phrase_config)
    except Rejection as exc:
        log.info("%s rejected: %s", path, exc)
        return exc.reason


def ingest_files(paths: Sequence[str | Path], dictionary: PronouncingDictionary,
                 config: IngestConfig = IngestConfig(),
                 phrase_config: PhraseConfig = PhraseConfig(),
                 threads: int = 1) -> tuple[list[AlignedSong], PipelineReport]:
    """Ingest files in the given order; output order never depends on ``threads``."""
    jobs = [(p, dictionary, config, phrase_config) for p in paths]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_ingest_path, jobs, chunksize=8))
    else:
        results = [_ingest_path(j) for j in jobs]
    report = PipelineReport(input=len(paths))
    songs = []
    for res in results:
        if isinstance(res, str):
            report.rejected[res] += 1
        else:
            songs.append(res)
    unique = dedup_corpus(songs)
    report.rejected["duplicate"] += len(songs) - len(unique)
    report.retained = len(unique)
    return unique, report

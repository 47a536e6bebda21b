"""Musical phrase boundary recognition.

Lyrics with enough punctuation are split at punctuated words; otherwise the
melody is split at long notes and notes followed by a rest, after thinning
out adjacent candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .errors import CapacityError, InvalidInput
from .representation import MAX_PHRASES, AlignedSong, Note

_MARKS = frozenset(",.:;?!\"")


@dataclass(frozen=True)
class PhraseConfig:
    long_note_ticks: int = 480
    rest_gap_ticks: int = 240
    duration_gap_ticks: int = 240
    punctuation_ratio: float = 0.1


@dataclass(frozen=True)
class PhraseSegmentation:
    """Note indices that end each phrase; the last always ends the song."""

    ends: tuple[int, ...]
    source: str  # "lyrics" or "melody"

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.ends, self.ends[1:])):
            raise InvalidInput("phrase endings must strictly increase")


def has_punctuation(word: str) -> bool:
    """True if the word carries a phrase-marking punctuation mark.

    Apostrophes count only at the edges of a word (quotes), never inside a
    contraction such as "don't".
    """
    if any(c in _MARKS for c in word):
        return True
    return word.startswith("'") or word.endswith("'")


def lyrics_based_recognition(words: Sequence[str]) -> list[int]:
    return [i for i, w in enumerate(words) if has_punctuation(w)]


def phrase_end_candidates(notes: Sequence[Note], config: PhraseConfig = PhraseConfig()) -> list[int]:
    long_notes = {i for i, n in enumerate(notes) if n.duration >= config.long_note_ticks}
    rest_notes = {
        i for i in range(len(notes) - 1)
        if notes[i + 1].onset - notes[i].end >= config.rest_gap_ticks
    }
    return sorted(long_notes | rest_notes)


def melody_based_recognition(notes: Sequence[Note], config: PhraseConfig = PhraseConfig()) -> list[int]:
    """Candidate phrase endings with adjacent pairs resolved left to right.

    For two candidates on consecutive notes, the later one is dropped when
    their durations differ by more than ``duration_gap_ticks``, else the
    earlier one. Adjacency is re-checked after every removal.
    """
    ends = phrase_end_candidates(notes, config)
    i = 1
    while i < len(ends):
        a, b = ends[i - 1], ends[i]
        if b - a == 1:
            if abs(notes[a].duration - notes[b].duration) > config.duration_gap_ticks:
                del ends[i]
            else:
                del ends[i - 1]
        else:
            i += 1
    return ends


def recognize_phrases(song: AlignedSong, config: PhraseConfig = PhraseConfig()) -> PhraseSegmentation:
    lyric_ends = lyrics_based_recognition(song.words)
    ratio = len(lyric_ends) / len(song.words)
    if ratio < config.punctuation_ratio:
        ends = melody_based_recognition(song.notes, config)
        source = "melody"
    else:
        ranges = song.word_note_ranges()
        ends = [ranges[w].stop - 1 for w in lyric_ends]
        source = "lyrics"
    last = len(song.notes) - 1
    if not ends or ends[-1] != last:
        ends.append(last)
    return PhraseSegmentation(tuple(ends), source)


def assign_phrase_ids(song: AlignedSong, seg: PhraseSegmentation) -> AlignedSong:
    """Notes take the phrase containing them; words take the phrase of their first note."""
    if not seg.ends or seg.ends[-1] != len(song.notes) - 1 or seg.ends[0] < 0:
        raise InvalidInput("segmentation does not end at the song's last note")
    if len(seg.ends) > MAX_PHRASES:
        raise CapacityError(f"{len(seg.ends)} phrases exceeds the cap of {MAX_PHRASES}")
    phrase_of_note = []
    p = 0
    for k in range(len(song.notes)):
        phrase_of_note.append(p)
        if k == seg.ends[p]:
            p += 1
    ranges = song.word_note_ranges()
    phrase_of_word = tuple(phrase_of_note[r.start] for r in ranges)
    return replace(song, phrase_of_word=phrase_of_word, phrase_of_note=tuple(phrase_of_note))

"""Lyric and melodic features used to pair words with notes.

Three extractors: syllable stress (per word), melodic peaks and rhythm
skeleton (per note). The rhythm skeleton for 4/4 is the union of

* metrical accents: onsets on beat 1 or beat 3 (in-bar position 0 or 960);
* agogic accents on metrical accents: metrical notes strictly longer than
  both temporal neighbours (a subset of the previous set);
* agogic accents on syncopations: notes with an off-beat onset whose sound
  carries across the next strong beat and that are strictly longer than both
  neighbours.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .dictionary import PronouncingDictionary
from .representation import TICKS_PER_BAR, TICKS_PER_QUARTER, AlignedSong, Note

STRONG_BEATS = (0, 2 * TICKS_PER_QUARTER)
BEATS = tuple(b * TICKS_PER_QUARTER for b in range(4))


class Family(enum.Enum):
    """Lyric-melody relationship: stress with melodic peak, or with rhythm skeleton."""

    SMR = "SMR"
    SRR = "SRR"


def syllable_stress(word: str, dictionary: PronouncingDictionary) -> tuple[int, ...]:
    return dictionary.stress(word)


def melodic_peaks(pitches: Sequence[int]) -> tuple[int, ...]:
    n = len(pitches)
    return tuple(
        int(0 < i < n - 1 and pitches[i] > pitches[i - 1] and pitches[i] > pitches[i + 1])
        for i in range(n)
    )


def _longer_than_neighbours(durations: Sequence[int], i: int) -> bool:
    d = durations[i]
    left = i == 0 or d > durations[i - 1]
    right = i == len(durations) - 1 or d > durations[i + 1]
    return left and right


def rhythm_accents(notes: Sequence[Note]) -> dict[str, frozenset[int]]:
    """The three accent sets, keyed ``metrical``, ``agogic_metrical``, ``agogic_syncopation``."""
    durations = [n.duration for n in notes]
    metrical = {i for i, n in enumerate(notes) if n.position in STRONG_BEATS}
    agogic_metrical = {i for i in metrical if _longer_than_neighbours(durations, i)}
    syncopated = set()
    half_bar = TICKS_PER_BAR // 2
    for i, n in enumerate(notes):
        if n.position in BEATS:
            continue
        next_strong = (n.onset // half_bar + 1) * half_bar
        if n.end > next_strong and _longer_than_neighbours(durations, i):
            syncopated.add(i)
    return {
        "metrical": frozenset(metrical),
        "agogic_metrical": frozenset(agogic_metrical),
        "agogic_syncopation": frozenset(syncopated),
    }


def rhythm_skeleton(notes: Sequence[Note]) -> tuple[int, ...]:
    accents = rhythm_accents(notes)
    skeleton = accents["metrical"] | accents["agogic_metrical"] | accents["agogic_syncopation"]
    return tuple(int(i in skeleton) for i in range(len(notes)))


Segment = tuple[int, ...]


@dataclass(frozen=True)
class SongFeatures:
    """Per-word feature segments of one song.

    ``stress[w]`` is the stress vector of word ``w``; ``segments[family][w]``
    holds the note flags of the notes aligned to word ``w``.
    """

    stress: tuple[Segment, ...]
    note_ranges: tuple[range, ...]
    segments: dict[Family, tuple[Segment, ...]]
    n_notes: int

    def melodic_pattern(self, family: Family, start: int, n: int) -> tuple[Segment, ...]:
        return self.segments[family][start:start + n]

    def lyric_pattern(self, start: int, n: int) -> tuple[Segment, ...]:
        return self.stress[start:start + n]

    def note_span(self, start: int, n: int) -> tuple[int, int]:
        """(first note index, note count) covered by words ``start .. start+n-1``."""
        lo = self.note_ranges[start].start
        hi = self.note_ranges[start + n - 1].stop
        return lo, hi - lo


def song_features(song: AlignedSong, dictionary: PronouncingDictionary) -> SongFeatures:
    ranges = song.word_note_ranges()
    flags = {
        Family.SMR: melodic_peaks([n.pitch for n in song.notes]),
        Family.SRR: rhythm_skeleton(song.notes),
    }
    segments = {f: tuple(tuple(v[r.start:r.stop]) for r in ranges) for f, v in flags.items()}
    stress = tuple(syllable_stress(w, dictionary) for w in song.words)
    return SongFeatures(stress, ranges, segments, len(song.notes))

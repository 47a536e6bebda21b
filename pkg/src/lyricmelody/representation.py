"""Compound-token song representation.

A song is a word sequence followed by a note sequence. Every token carries
nine attributes; the two alignment attributes (``word_id`` and ``phrase_id``)
tie each note to its lyric word and musical phrase.

Time is measured in ticks at 480 per quarter note (1920 per 4/4 bar), which
makes both the 64th-note (30 tick) and triplet (40 tick) grids integral.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CapacityError, InvalidInput, ParseError

TICKS_PER_QUARTER = 480
TICKS_PER_BAR = 4 * TICKS_PER_QUARTER

MAX_BARS = 128
MAX_WORDS = 256
MAX_PHRASES = 128
MAX_PITCH = 127

POSITIONS: tuple[int, ...] = tuple(
    sorted(set(range(0, TICKS_PER_BAR, 30)) | set(range(0, TICKS_PER_BAR, 40)))
)
DURATIONS: tuple[int, ...] = tuple(
    sorted(set(range(30, TICKS_PER_BAR + 1, 30)) | {40, 80, 160, 320, 640})
)
_POSITION_SET = frozenset(POSITIONS)
_DURATION_SET = frozenset(DURATIONS)


class TokenType(enum.Enum):
    WORD = "Word"
    NOTE = "Note"
    SPECIAL = "Special"


class SpecialKind(enum.Enum):
    BOS = "<BOS>"
    EOS = "<EOS>"
    MASK = "<MASK>"
    PAD = "<PAD>"
    SEP = "<SEP>"


class Tempo(enum.Enum):
    LARGE = "Large"
    LARGHETTO = "Larghetto"
    ADAGIO = "Adagio"
    ANDANTE = "Andante"
    MODERATO = "Moderato"
    ALLEGRO = "Allegro"
    PRESTO = "Presto"


# Lower bounds (inclusive) of each tempo class, in beats per minute.
_TEMPO_BOUNDS = (60.0, 66.0, 76.0, 108.0, 120.0, 168.0)
_TEMPO_ORDER = tuple(Tempo)


def tempo_class(bpm: float) -> Tempo:
    """Map a tempo in BPM to its half-open tempo class."""
    if not bpm > 0:
        raise InvalidInput(f"tempo must be positive, got {bpm!r}")
    return _TEMPO_ORDER[bisect.bisect_right(_TEMPO_BOUNDS, bpm)]


ATTRIBUTES = (
    "bar",
    "position",
    "pitch",
    "duration",
    "tempo",
    "text",
    "word_id",
    "phrase_id",
    "token_type",
)

_FIXED_VOCABS: dict[str, tuple] = {
    "bar": tuple(range(MAX_BARS)),
    "position": POSITIONS,
    "pitch": tuple(range(MAX_PITCH + 1)),
    "duration": DURATIONS,
    "tempo": tuple(t.value for t in Tempo),
    "word_id": tuple(range(MAX_WORDS)),
    "phrase_id": tuple(range(MAX_PHRASES)),
    "token_type": (TokenType.WORD.value, TokenType.NOTE.value),
}


def _canonical_attribute(name: str) -> str:
    key = name.strip().lower().replace(" ", "_").replace("-", "_")
    if key not in ATTRIBUTES:
        raise InvalidInput(f"unknown attribute {name!r}")
    return key


def attribute_vocab_size(name: str, text_vocab: Sequence[str] | None = None) -> int:
    """Cardinality of an attribute's value vocabulary (specials excluded).

    The text vocabulary is corpus-dependent, so its size is only defined when
    ``text_vocab`` is supplied.
    """
    key = _canonical_attribute(name)
    if key == "text":
        if text_vocab is None:
            raise InvalidInput("text vocabulary size depends on the corpus; pass text_vocab")
        return len(text_vocab)
    return len(_FIXED_VOCABS[key])


@dataclass(frozen=True)
class Note:
    bar: int
    position: int
    pitch: int
    duration: int
    tempo: Tempo

    @property
    def onset(self) -> int:
        return self.bar * TICKS_PER_BAR + self.position

    @property
    def end(self) -> int:
        return self.onset + self.duration

    def validate(self) -> None:
        if not 0 <= self.bar < MAX_BARS:
            raise CapacityError(f"bar {self.bar} outside [0, {MAX_BARS - 1}]")
        if self.position not in _POSITION_SET:
            raise InvalidInput(f"position {self.position} not on the position grid")
        if not 0 <= self.pitch <= MAX_PITCH:
            raise InvalidInput(f"pitch {self.pitch} outside [0, 127]")
        if self.duration not in _DURATION_SET:
            raise InvalidInput(f"duration {self.duration} not in the duration vocabulary")
        if not isinstance(self.tempo, Tempo):
            raise InvalidInput(f"tempo must be a Tempo, got {self.tempo!r}")


@dataclass(frozen=True)
class AlignedSong:
    """Words, notes, and the word- and phrase-level alignment between them.

    ``word_of_note[k]`` is the index of the word sung on note ``k``.
    ``phrase_of_word`` and ``phrase_of_note`` give phrase indices; a freshly
    aligned song has every phrase index at 0 until phrases are assigned.
    """

    words: tuple[str, ...]
    notes: tuple[Note, ...]
    word_of_note: tuple[int, ...]
    phrase_of_word: tuple[int, ...]
    phrase_of_note: tuple[int, ...]

    def __post_init__(self) -> None:
        for name in ("words", "notes", "word_of_note", "phrase_of_word", "phrase_of_note"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    @classmethod
    def single_phrase(cls, words: Iterable[str], notes: Iterable[Note],
                      word_of_note: Iterable[int]) -> "AlignedSong":
        words = tuple(words)
        notes = tuple(notes)
        return cls(words, notes, tuple(word_of_note), (0,) * len(words), (0,) * len(notes))

    @property
    def n_phrases(self) -> int:
        return max(self.phrase_of_note) + 1

    def notes_of_word(self, w: int) -> range:
        lo = bisect.bisect_left(self.word_of_note, w)
        hi = bisect.bisect_right(self.word_of_note, w)
        return range(lo, hi)

    def word_note_ranges(self) -> tuple[range, ...]:
        return tuple(self.notes_of_word(w) for w in range(len(self.words)))

    def validate(self) -> None:
        n_words, n_notes = len(self.words), len(self.notes)
        if n_words == 0 or n_notes == 0:
            raise InvalidInput("a song needs at least one word and one note")
        if n_words > MAX_WORDS:
            raise CapacityError(f"{n_words} words exceeds the cap of {MAX_WORDS}")
        if len(self.word_of_note) != n_notes:
            raise InvalidInput("word_of_note must have one entry per note")
        if len(self.phrase_of_word) != n_words or len(self.phrase_of_note) != n_notes:
            raise InvalidInput("phrase maps must cover every word and note")
        prev = 0
        for k, w in enumerate(self.word_of_note):
            if not 0 <= w < n_words:
                raise InvalidInput(f"note {k} aligned to missing word {w}")
            if w < prev:
                raise InvalidInput(f"word_of_note decreases at note {k}")
            if w > prev + 1 or (k == 0 and w != 0):
                raise InvalidInput(f"word {prev + 1} has no aligned note")
            prev = w
        if prev != n_words - 1:
            raise InvalidInput(f"word {prev + 1} has no aligned note")
        for seq_name in ("phrase_of_word", "phrase_of_note"):
            seq = getattr(self, seq_name)
            if any(b < a for a, b in zip(seq, seq[1:])):
                raise InvalidInput(f"{seq_name} must be non-decreasing")
        used = set(self.phrase_of_note) | set(self.phrase_of_word)
        if used != set(range(len(used))):
            raise InvalidInput("phrase indices must be contiguous from 0")
        if len(used) > MAX_PHRASES:
            raise CapacityError(f"{len(used)} phrases exceeds the cap of {MAX_PHRASES}")
        last_onset = -1
        for k, note in enumerate(self.notes):
            note.validate()
            if note.onset <= last_onset:
                raise InvalidInput(f"note onsets must strictly increase (note {k})")
            last_onset = note.onset


@dataclass(frozen=True)
class Token:
    """One compound token.

    Word tokens leave the five musical attributes as ``None``; note tokens
    leave ``text`` as ``None``. Special tokens carry their own
    :class:`SpecialKind` in every attribute.
    """

    bar: object
    position: object
    pitch: object
    duration: object
    tempo: object
    text: object
    word_id: object
    phrase_id: object
    token_type: TokenType

    @classmethod
    def word(cls, text: str, word_id: int, phrase_id: int) -> "Token":
        return cls(None, None, None, None, None, text, word_id, phrase_id, TokenType.WORD)

    @classmethod
    def note(cls, note: Note, word_id: int, phrase_id: int) -> "Token":
        return cls(note.bar, note.position, note.pitch, note.duration, note.tempo,
                   None, word_id, phrase_id, TokenType.NOTE)

    @classmethod
    def special(cls, kind: SpecialKind) -> "Token":
        return cls(kind, kind, kind, kind, kind, kind, kind, kind, TokenType.SPECIAL)

    @property
    def kind(self) -> SpecialKind | None:
        return self.text if self.token_type is TokenType.SPECIAL else None

    def as_note(self) -> Note:
        if self.token_type is not TokenType.NOTE:
            raise InvalidInput(f"{self.token_type.value} token is not a note")
        return Note(self.bar, self.position, self.pitch, self.duration, self.tempo)

    def check(self) -> None:
        """Raise if the None-fill rule for this token's type is violated."""
        musical = (self.bar, self.position, self.pitch, self.duration, self.tempo)
        if self.token_type is TokenType.NOTE:
            if self.text is not None or any(v is None for v in musical):
                raise InvalidInput("note tokens carry musical attributes and no text")
        elif self.token_type is TokenType.WORD:
            if any(v is not None for v in musical) or not isinstance(self.text, str):
                raise InvalidInput("word tokens carry text and no musical attributes")
        else:
            kind = self.text
            if not isinstance(kind, SpecialKind) or any(
                getattr(self, a) is not kind for a in ATTRIBUTES[:-1]
            ):
                raise InvalidInput("special tokens carry their own symbol in every attribute")


SPECIAL = {kind: Token.special(kind) for kind in SpecialKind}


def encode_song(song: AlignedSong) -> tuple[Token, ...]:
    """All word tokens in order, then all note tokens in order."""
    song.validate()
    words = tuple(
        Token.word(text, i, song.phrase_of_word[i]) for i, text in enumerate(song.words)
    )
    notes = tuple(
        Token.note(note, song.word_of_note[k], song.phrase_of_note[k])
        for k, note in enumerate(song.notes)
    )
    return words + notes


def decode_song(tokens: Sequence[Token]) -> AlignedSong:
    words: list[str] = []
    phrase_of_word: list[int] = []
    notes: list[Note] = []
    word_of_note: list[int] = []
    phrase_of_note: list[int] = []
    for i, tok in enumerate(tokens):
        try:
            tok.check()
        except InvalidInput as exc:
            raise ParseError(str(exc), i) from None
        if tok.token_type is TokenType.WORD:
            if notes:
                raise ParseError("word token after the first note token", i)
            if tok.word_id != len(words):
                raise ParseError(f"word token has word_id {tok.word_id}, expected {len(words)}", i)
            words.append(tok.text)
            phrase_of_word.append(tok.phrase_id)
        elif tok.token_type is TokenType.NOTE:
            if not words:
                raise ParseError("note token before any word token", i)
            if not 0 <= tok.word_id < len(words):
                raise ParseError(f"note word_id {tok.word_id} outside [0, {len(words) - 1}]", i)
            notes.append(tok.as_note())
            word_of_note.append(tok.word_id)
            phrase_of_note.append(tok.phrase_id)
        else:
            raise ParseError(f"unexpected special token {tok.kind.value}", i)
    try:
        return AlignedSong(tuple(words), tuple(notes), tuple(word_of_note),
                           tuple(phrase_of_word), tuple(phrase_of_note))
    except InvalidInput as exc:
        raise ParseError(f"decoded song is invalid: {exc}", len(tokens)) from None


# ---------------------------------------------------------------------------
# Index tables for the fixed-width serialized form.
#
# Every attribute table starts with the five specials and a None sentinel,
# followed by the attribute's values in vocabulary order.

_RESERVED: tuple[object, ...] = (
    SpecialKind.PAD, SpecialKind.BOS, SpecialKind.EOS, SpecialKind.MASK, SpecialKind.SEP, None,
)
NONE_INDEX = _RESERVED.index(None)


def _symbol(value: object) -> str:
    if value is None:
        return "<None>"
    if isinstance(value, (SpecialKind,)):
        return value.value
    return str(value)


@dataclass
class Vocabulary:
    """Attribute index tables. ``text`` is built per corpus."""

    text: tuple[str, ...]
    _index: dict[str, dict[object, int]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.text = tuple(self.text)
        self._index = {a: {v: i for i, v in enumerate(self.table(a))} for a in ATTRIBUTES}

    @classmethod
    def from_songs(cls, songs: Iterable[AlignedSong]) -> "Vocabulary":
        """Word strings sorted by descending frequency, ties alphabetical."""
        counts: dict[str, int] = {}
        for song in songs:
            for w in song.words:
                counts[w] = counts.get(w, 0) + 1
        return cls(tuple(sorted(counts, key=lambda w: (-counts[w], w))))

    def table(self, attribute: str) -> tuple[object, ...]:
        key = _canonical_attribute(attribute)
        if key == "text":
            values: tuple = self.text
        elif key == "tempo":
            values = tuple(Tempo)
        elif key == "token_type":
            values = (TokenType.WORD, TokenType.NOTE)
        else:
            values = _FIXED_VOCABS[key]
        return _RESERVED + values

    def encode(self, token: Token) -> tuple[int, ...]:
        out = []
        for a in ATTRIBUTES:
            value = getattr(token, a)
            if a == "token_type" and value is TokenType.SPECIAL:
                value = token.kind
            try:
                out.append(self._index[a][value])
            except KeyError:
                raise InvalidInput(f"{a} value {value!r} is not in the vocabulary") from None
        return tuple(out)

    def decode(self, record: Sequence[int]) -> Token:
        if len(record) != len(ATTRIBUTES):
            raise ParseError(f"token record needs {len(ATTRIBUTES)} fields, got {len(record)}")
        values = []
        for a, idx in zip(ATTRIBUTES, record):
            table = self.table(a)
            if not 0 <= idx < len(table):
                raise ParseError(f"{a} index {idx} out of range")
            values.append(table[idx])
        if isinstance(values[-1], SpecialKind):
            return Token.special(values[-1])
        return Token(*values)

    def to_json(self) -> dict:
        return {
            "fields": list(ATTRIBUTES),
            "none_index": NONE_INDEX,
            "tables": {a: [_symbol(v) for v in self.table(a)] for a in ATTRIBUTES},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Vocabulary":
        text = data["tables"]["text"][len(_RESERVED):]
        return cls(tuple(text))

"""Blank-infilling sample construction.

A sample concatenates three parts:

* Part A, the word tokens;
* Part B, the note tokens with sampled spans corrupted (a masked span
  collapses to a single MASK token);
* Part C, every sampled span's original notes, each span preceded by SEP,
  in a shuffled span order.

A and B attend to each other freely; C attends to A, B and causally to
itself. The fine-tuning layout is the degenerate case with A = words,
B = BOS and C = the whole melody followed by EOS.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import InvalidInput, InvalidMaskError, SampleRejected
from .features import Family, SongFeatures
from .ngram import NGramLexicon, max_match_sample
from .representation import SPECIAL, AlignedSong, Note, SpecialKind, Token

log = logging.getLogger(__name__)

MAX_LEN = 768
WORD_BUDGET = 0.15
PHRASE_BUDGET = 0.5
SONG_BUDGET = 0.5
ACTION_PROBS = (0.8, 0.1, 0.1)


class Objective(enum.Enum):
    WORD_SMR = "word-smr"
    WORD_SRR = "word-srr"
    WORD = "word"
    PHRASE = "phrase"
    SONG = "song"
    CLM = "clm"


PRETRAIN_OBJECTIVES = (Objective.WORD_SMR, Objective.WORD_SRR, Objective.PHRASE, Objective.SONG)


class Action(enum.Enum):
    MASK_OUT = "mask"
    RANDOM_REPLACE = "random"
    KEEP_ORIGINAL = "keep"


@dataclass(frozen=True)
class Span:
    start: int
    length: int
    action: Action = Action.MASK_OUT
    family: Family | None = None
    # (pitch, duration) pairs substituted for a RANDOM_REPLACE span
    replacement: tuple[tuple[int, int], ...] | None = None

    @property
    def stop(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class SpanSet:
    objective: Objective
    spans: tuple[Span, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "spans", tuple(self.spans))
        for a, b in zip(self.spans, self.spans[1:]):
            if b.start < a.stop:
                raise InvalidInput("spans must be sorted and disjoint")
        for s in self.spans:
            if s.length < 1 or s.start < 0:
                raise InvalidInput(f"bad span {s}")
            if s.action is Action.RANDOM_REPLACE and (
                s.replacement is None or len(s.replacement) != s.length
            ):
                raise InvalidInput("a random-replace span needs a same-length replacement")

    @property
    def covered(self) -> int:
        return sum(s.length for s in self.spans)

    def __len__(self) -> int:
        return len(self.spans)


# ---------------------------------------------------------------------------
# Span sampling


def draw_action(rng: np.random.Generator, probs: Sequence[float] = ACTION_PROBS) -> Action:
    u = rng.random()
    if u < probs[0]:
        return Action.MASK_OUT
    if u < probs[0] + probs[1]:
        return Action.RANDOM_REPLACE
    return Action.KEEP_ORIGINAL


def _replacement(song: AlignedSong, lexicon: NGramLexicon, family: Family, length: int,
                 rng: np.random.Generator) -> tuple[tuple[int, int], ...]:
    pool = [e.exemplar for e in lexicon[family].entries if e.note_length == length]
    if pool:
        return pool[int(rng.integers(len(pool)))]
    # no lexicon n-gram of this note length: borrow a window of the same song
    start = int(rng.integers(len(song.notes) - length + 1))
    return tuple((n.pitch, n.duration) for n in song.notes[start:start + length])


def sample_word_level(song: AlignedSong, features: SongFeatures, lexicon: NGramLexicon,
                      rng: np.random.Generator,
                      families: Sequence[Family] = (Family.SMR, Family.SRR),
                      budget: float = WORD_BUDGET,
                      action_probs: Sequence[float] = ACTION_PROBS) -> SpanSet:
    families = tuple(families)
    objective = {(Family.SMR,): Objective.WORD_SMR,
                 (Family.SRR,): Objective.WORD_SRR}.get(families, Objective.WORD)
    matches = max_match_sample(features, lexicon, budget, rng, families)
    spans = []
    for m in matches:
        action = draw_action(rng, action_probs)
        replacement = None
        if action is Action.RANDOM_REPLACE:
            replacement = _replacement(song, lexicon, m.family, m.length, rng)
        spans.append(Span(m.start, m.length, action, m.family, replacement))
    return SpanSet(objective, tuple(spans))


def phrase_extents(song: AlignedSong) -> list[tuple[int, int]]:
    """(first note, note count) of every phrase."""
    extents: list[tuple[int, int]] = []
    for k, p in enumerate(song.phrase_of_note):
        if p == len(extents):
            extents.append((k, 0))
        start, length = extents[-1]
        extents[-1] = (start, length + 1)
    return extents


def sample_phrase_level(song: AlignedSong, rng: np.random.Generator,
                        budget: float = PHRASE_BUDGET) -> SpanSet:
    """Whole phrases in random order until at least ``budget`` of the notes are covered."""
    extents = phrase_extents(song)
    target = budget * len(song.notes)
    chosen = []
    covered = 0
    for idx in rng.permutation(len(extents)):
        start, length = extents[int(idx)]
        chosen.append(Span(start, length))
        covered += length
        if covered >= target:
            break
    return SpanSet(Objective.PHRASE, tuple(sorted(chosen, key=lambda s: s.start)))


def sample_song_level(song: AlignedSong, rng: np.random.Generator,
                      budget: float = SONG_BUDGET) -> SpanSet:
    n = len(song.notes)
    if n < 2:
        raise InvalidInput("song-level sampling needs at least two notes")
    length = math.ceil(budget * n)
    start = int(rng.integers(n - length + 1))
    return SpanSet(Objective.SONG, (Span(start, length),))


# ---------------------------------------------------------------------------
# Sample layout


@dataclass(frozen=True)
class PretrainSample:
    """One training example; alignment IDs are given for every position."""

    objective: Objective
    part_a: tuple[Token, ...]
    part_b: tuple[Token, ...]
    part_c: tuple[Token, ...]
    word_ids: tuple[int, ...]
    phrase_ids: tuple[int, ...]
    spans: SpanSet | None = None
    span_order: tuple[int, ...] = ()

    @property
    def tokens(self) -> tuple[Token, ...]:
        return self.part_a + self.part_b + self.part_c

    @property
    def lengths(self) -> tuple[int, int, int]:
        return len(self.part_a), len(self.part_b), len(self.part_c)

    def __len__(self) -> int:
        return len(self.part_a) + len(self.part_b) + len(self.part_c)

    @property
    def target_positions(self) -> tuple[int, ...]:
        """Positions predicted by the model: every Part C token except SEP."""
        offset = len(self.part_a) + len(self.part_b)
        return tuple(offset + j for j, tok in enumerate(self.part_c)
                     if tok.kind is not SpecialKind.SEP)

    def span_contents(self) -> list[tuple[Token, ...]]:
        """Part C split at SEP, in Part C order."""
        out: list[list[Token]] = []
        for tok in self.part_c:
            if tok.kind is SpecialKind.SEP:
                out.append([])
            elif out:
                out[-1].append(tok)
        return [tuple(s) for s in out]


def _note_token(song: AlignedSong, k: int, note: Note | None = None) -> Token:
    return Token.note(note or song.notes[k], song.word_of_note[k], song.phrase_of_note[k])


def _word_part(song: AlignedSong) -> tuple[list[Token], list[int], list[int]]:
    tokens = [Token.word(w, i, song.phrase_of_word[i]) for i, w in enumerate(song.words)]
    return tokens, list(range(len(song.words))), list(song.phrase_of_word)


def build_sample(song: AlignedSong, spans: SpanSet, rng: np.random.Generator,
                 max_len: int = MAX_LEN) -> PretrainSample:
    if not spans.spans:
        raise SampleRejected("empty objective")
    if spans.spans[-1].stop > len(song.notes):
        raise InvalidInput("span runs past the last note")
    a, wid, pid = _word_part(song)
    b: list[Token] = []
    starts = {s.start: s for s in spans.spans}
    k = 0
    while k < len(song.notes):
        span = starts.get(k)
        if span is None or span.action is Action.KEEP_ORIGINAL:
            b.append(_note_token(song, k))
            wid.append(song.word_of_note[k])
            pid.append(song.phrase_of_note[k])
            k += 1
            continue
        if span.action is Action.MASK_OUT:
            b.append(SPECIAL[SpecialKind.MASK])
            wid.append(song.word_of_note[k])
            pid.append(song.phrase_of_note[k])
        else:
            for j, (pitch, duration) in enumerate(span.replacement):
                orig = song.notes[k + j]
                note = Note(orig.bar, orig.position, pitch, duration, orig.tempo)
                b.append(_note_token(song, k + j, note))
                wid.append(song.word_of_note[k + j])
                pid.append(song.phrase_of_note[k + j])
        k = span.stop
    order = tuple(int(i) for i in rng.permutation(len(spans.spans)))
    c: list[Token] = []
    for i in order:
        span = spans.spans[i]
        c.append(SPECIAL[SpecialKind.SEP])
        wid.append(song.word_of_note[span.start])
        pid.append(song.phrase_of_note[span.start])
        for k in range(span.start, span.stop):
            c.append(_note_token(song, k))
            wid.append(song.word_of_note[k])
            pid.append(song.phrase_of_note[k])
    total = len(a) + len(b) + len(c)
    if total > max_len:
        raise SampleRejected(f"length {total} exceeds {max_len}")
    return PretrainSample(spans.objective, tuple(a), tuple(b), tuple(c),
                          tuple(wid), tuple(pid), spans, order)


def build_clm_sample(song: AlignedSong, max_len: int = MAX_LEN) -> PretrainSample:
    """Words, then BOS, then the whole melody and EOS as targets."""
    if not song.notes:
        raise InvalidInput("a causal sample needs notes")
    a, wid, pid = _word_part(song)
    b = [SPECIAL[SpecialKind.BOS]]
    wid.append(song.word_of_note[0])
    pid.append(song.phrase_of_note[0])
    c = [_note_token(song, k) for k in range(len(song.notes))]
    wid.extend(song.word_of_note)
    pid.extend(song.phrase_of_note)
    c.append(SPECIAL[SpecialKind.EOS])
    wid.append(song.word_of_note[-1])
    pid.append(song.phrase_of_note[-1])
    total = len(a) + len(b) + len(c)
    if total > max_len:
        raise SampleRejected(f"length {total} exceeds {max_len}")
    return PretrainSample(Objective.CLM, tuple(a), tuple(b), tuple(c), tuple(wid), tuple(pid))


# ---------------------------------------------------------------------------
# Attention


@dataclass(frozen=True)
class AttentionMaskSpec:
    allowed: np.ndarray  # bool, [query, key]

    @property
    def bias(self) -> np.ndarray:
        """Additive form: 0 where attention is allowed, -inf elsewhere."""
        return np.where(self.allowed, 0.0, -np.inf)


def context_causal_mask(n_context: int, n_causal: int) -> AttentionMaskSpec:
    size = n_context + n_causal
    allowed = np.zeros((size, size), dtype=bool)
    allowed[:, :n_context] = True
    allowed[n_context:, n_context:] = np.tril(np.ones((n_causal, n_causal), dtype=bool))
    return AttentionMaskSpec(allowed)


def attention_mask(sample: PretrainSample) -> AttentionMaskSpec:
    n_a, n_b, n_c = sample.lengths
    return context_causal_mask(n_a + n_b, n_c)


def masked_attention_weights(scores: np.ndarray, mask: AttentionMaskSpec) -> np.ndarray:
    """Row-wise softmax of ``scores + bias``; forbidden entries get exactly 0."""
    scores = np.asarray(scores, dtype=float)
    allowed = mask.allowed
    if scores.shape != allowed.shape:
        raise InvalidInput(f"scores {scores.shape} do not match mask {allowed.shape}")
    empty = ~allowed.any(axis=1)
    if empty.any():
        raise InvalidMaskError(f"row {int(np.argmax(empty))} may attend to nothing")
    shifted = np.where(allowed, scores, -np.inf)
    shifted = shifted - shifted.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Loss over externally supplied probabilities


def span_nll(probs: Sequence[float], sample: PretrainSample) -> float:
    """Negative log-likelihood of the sample's targets, one probability per target."""
    n_targets = len(sample.target_positions)
    if len(probs) != n_targets:
        raise InvalidInput(f"expected {n_targets} probabilities, got {len(probs)}")
    for p in probs:
        if not 0 < p <= 1:
            raise InvalidInput(f"probability {p!r} outside (0, 1]")
    return 0.0 - math.fsum(math.log(p) for p in probs)


def multitask_loss(losses: Mapping[Objective, float]) -> float:
    """Sum of the four pre-training objective losses."""
    missing = [o.value for o in PRETRAIN_OBJECTIVES if o not in losses]
    if missing:
        raise InvalidInput(f"missing objective losses: {', '.join(missing)}")
    return math.fsum(losses[o] for o in PRETRAIN_OBJECTIVES)


# ---------------------------------------------------------------------------
# Batch assembly


_OBJECTIVE_CODE = {o: i for i, o in enumerate(Objective)}


def song_rng(master_seed: int, song_index: int, objective: Objective) -> np.random.Generator:
    """Independent stream per (song, objective), derived from the master seed."""
    seq = np.random.SeedSequence([master_seed, song_index, _OBJECTIVE_CODE[objective]])
    return np.random.default_rng(seq)


@dataclass(frozen=True)
class BatchRecord:
    song_index: int
    sample: PretrainSample | None
    reason: str = ""


def make_sample(song: AlignedSong, features: SongFeatures | None, lexicon: NGramLexicon | None,
                objective: Objective, rng: np.random.Generator, max_len: int = MAX_LEN,
                word_budget: float = WORD_BUDGET, phrase_budget: float = PHRASE_BUDGET,
                song_budget: float = SONG_BUDGET,
                action_probs: Sequence[float] = ACTION_PROBS) -> PretrainSample:
    if objective is Objective.CLM:
        return build_clm_sample(song, max_len)
    if objective in (Objective.WORD_SMR, Objective.WORD_SRR, Objective.WORD):
        if lexicon is None or features is None:
            raise InvalidInput("word-level objectives need features and a lexicon")
        families = {Objective.WORD_SMR: (Family.SMR,), Objective.WORD_SRR: (Family.SRR,)}.get(
            objective, (Family.SMR, Family.SRR))
        spans = sample_word_level(song, features, lexicon, rng, families, word_budget, action_probs)
    elif objective is Objective.PHRASE:
        spans = sample_phrase_level(song, rng, phrase_budget)
    else:
        spans = sample_song_level(song, rng, song_budget)
    return build_sample(song, spans, rng, max_len)


def make_batch(songs: Sequence[AlignedSong], features: Sequence[SongFeatures] | None,
               lexicon: NGramLexicon | None, objectives: Sequence[Objective], seed: int,
               **kwargs) -> Iterator[BatchRecord]:
    """One record per (song, objective), song-major, each from its own seeded stream."""
    for i, song in enumerate(songs):
        for objective in objectives:
            rng = song_rng(seed, i, objective)
            feats = features[i] if features is not None else None
            try:
                sample = make_sample(song, feats, lexicon, objective, rng, **kwargs)
            except (SampleRejected, InvalidInput) as exc:
                log.info("song %d, %s: skipped (%s)", i, objective.value, exc)
                yield BatchRecord(i, None, str(exc))
                continue
            yield BatchRecord(i, sample)

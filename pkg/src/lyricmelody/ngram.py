"""Harmonized joint n-gram lexicons.

A joint uni-gram pairs a word's stress vector with the feature flags of the
notes sung on it. Windows of ``n`` consecutive words (2 <= n <= 12) give joint
n-grams. Each distinct melodic pattern is scored as

    s = s_m + s_lm,   s_lm = C * mean(s_l over the m associated lyric patterns)

where ``s_m``/``s_l`` are collocation t-scores against an independence null
built from same-family uni-gram frequencies, and ``C`` is one minus the
normalized entropy of the lyric patterns seen with the melodic pattern.
The top quarter of melodic patterns per family forms the lexicon.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dictionary import PronouncingDictionary
from .errors import EmptyLexiconError, InvalidInput
from .features import Family, Segment, SongFeatures, song_features
from .representation import AlignedSong

N_MIN = 2
N_MAX = 12
TOP_FRACTION = 0.25

Pattern = tuple[Segment, ...]


def pattern_str(pattern: Pattern) -> str:
    """``((0, 1), (1,))`` -> ``"01|1"``; the canonical sort and file key."""
    return "|".join("".join(str(v) for v in seg) for seg in pattern)


def parse_pattern(text: str) -> Pattern:
    return tuple(tuple(int(c) for c in seg) for seg in text.split("|"))


@dataclass(frozen=True)
class JointNGram:
    n: int
    lyric_pattern: Pattern
    melodic_pattern: Pattern
    family: Family
    count: int


def enumerate_joint_ngrams(corpus: Sequence[SongFeatures], family: Family,
                           n_min: int = N_MIN, n_max: int = N_MAX) -> list[JointNGram]:
    """Every joint n-gram of the corpus with its occurrence count.

    Ordered by first occurrence (song, n, start word).
    """
    counts: Counter = Counter()
    for feats in corpus:
        segments = feats.segments[family]
        n_words = len(feats.stress)
        for n in range(n_min, min(n_max, n_words) + 1):
            for start in range(n_words - n + 1):
                key = (n, feats.stress[start:start + n], segments[start:start + n])
                counts[key] += 1
    return [JointNGram(n, lyr, mel, family, c) for (n, lyr, mel), c in counts.items()]


def t_statistic(count: int, total: int, unigram_probs: Sequence[float]) -> float:
    """Collocation t-score of an n-gram against the independence null.

    ``t = (p_hat - p0) / sqrt(p_hat (1 - p_hat) / total)`` with
    ``p_hat = count / total`` and ``p0`` the product of uni-gram
    probabilities. When ``p_hat`` is 1 the sample variance vanishes and the
    null variance ``p0 (1 - p0)`` is used instead; if that is 0 too, the
    n-gram is exactly as frequent as expected and t is 0.
    """
    if total <= 0:
        raise InvalidInput("window total must be positive")
    if count < 1 or count > total:
        raise InvalidInput(f"count {count} outside [1, {total}]")
    if any(not 0 < p <= 1 for p in unigram_probs):
        raise InvalidInput("uni-gram probabilities must lie in (0, 1]")
    return _t(count, total, math.prod(unigram_probs))


def _t(count: int, total: int, p0: float) -> float:
    p_hat = count / total
    variance = p_hat * (1 - p_hat)
    if variance == 0:
        variance = p0 * (1 - p0)
        if variance == 0:
            return 0.0
    return (p_hat - p0) / math.sqrt(variance / total)


def normalized_entropy(probs: Sequence[float]) -> float:
    m = len(probs)
    if m < 2:
        return 0.0
    if all(p == probs[0] for p in probs):
        return 1.0  # a uniform distribution is the entropy maximum; avoid rounding below 1
    h = -sum(p * math.log(p) for p in probs if p > 0)
    return min(1.0, max(0.0, h / math.log(m)))


def relationship_score(lyric_scores: Sequence[float],
                       probs: Sequence[float]) -> tuple[float, float, float]:
    """``(s_lm, C, H_norm)`` for one melodic pattern's lyric associations."""
    m = len(lyric_scores)
    if m == 0 or len(probs) != m:
        raise InvalidInput("need equally long, non-empty score and probability lists")
    if abs(sum(probs) - 1.0) > 1e-6:
        raise InvalidInput(f"probabilities sum to {sum(probs)!r}, not 1")
    if any(p < 0 for p in probs):
        raise InvalidInput("probabilities must be non-negative")
    if m == 1:
        return float(lyric_scores[0]), 1.0, 0.0
    h_norm = normalized_entropy(probs)
    concentration = 1.0 - h_norm
    return concentration * (sum(lyric_scores) / m), concentration, h_norm


@dataclass(frozen=True)
class LexiconEntry:
    pattern: Pattern
    n: int
    count: int
    s_l_mean: float
    s_m: float
    s_lm: float
    s: float
    concentration: float
    h_norm: float
    m: int
    # (pitch, duration) of the notes at the pattern's first corpus occurrence
    exemplar: tuple[tuple[int, int], ...]

    @property
    def note_length(self) -> int:
        return len(self.exemplar)

    @property
    def key(self) -> str:
        return pattern_str(self.pattern)


@dataclass
class FamilyLexicon:
    family: Family
    entries: tuple[LexiconEntry, ...]
    candidates: int
    cutoff: float = TOP_FRACTION
    corpus_hash: str = ""
    _index: dict[Pattern, LexiconEntry] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.entries = tuple(self.entries)
        self._index = {e.pattern: e for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, pattern: object) -> bool:
        return pattern in self._index

    def get(self, pattern: Pattern) -> LexiconEntry | None:
        return self._index.get(pattern)


@dataclass
class NGramLexicon:
    smr: FamilyLexicon
    srr: FamilyLexicon

    def __getitem__(self, family: Family) -> FamilyLexicon:
        return self.smr if family is Family.SMR else self.srr

    @classmethod
    def empty(cls) -> "NGramLexicon":
        return cls(FamilyLexicon(Family.SMR, (), 0), FamilyLexicon(Family.SRR, (), 0))


@dataclass(frozen=True)
class ScoredCandidate:
    entry: LexiconEntry
    lyric_scores: tuple[float, ...]
    lyric_probs: tuple[float, ...]


def _intern(segments: Sequence[Segment], table: dict[Segment, int]) -> list[int]:
    return [table.setdefault(seg, len(table)) for seg in segments]


def score_candidates(corpus: Sequence[SongFeatures], family: Family,
                     exemplar_notes: Sequence[Sequence[tuple[int, int]]] | None = None,
                     n_min: int = N_MIN, n_max: int = N_MAX) -> list[ScoredCandidate]:
    """Score every distinct melodic n-gram of ``family``, in first-occurrence order.

    Segments are interned to small integers so that window keys are flat
    integer tuples; patterns are rebuilt only for the returned entries.
    """
    lyric_ids: dict[Segment, int] = {}
    melodic_ids: dict[Segment, int] = {}
    songs = [(_intern(f.stress, lyric_ids), _intern(f.segments[family], melodic_ids))
             for f in corpus]
    word_total = sum(len(lyr) for lyr, _ in songs)
    lyric_uni = Counter(i for lyr, _ in songs for i in lyr)
    melodic_uni = Counter(i for _, mel in songs for i in mel)
    lyric_p = {i: c / word_total for i, c in lyric_uni.items()}
    melodic_p = {i: c / word_total for i, c in melodic_uni.items()}

    window_total: Counter = Counter()
    lyric_count: Counter = Counter()
    joint: Counter = Counter()
    first_seen: dict[tuple[int, ...], tuple[int, int, int]] = {}
    for song_idx, (lyr_ids, mel_ids) in enumerate(songs):
        n_words = len(lyr_ids)
        for n in range(n_min, min(n_max, n_words) + 1):
            window_total[n] += n_words - n + 1
            for start in range(n_words - n + 1):
                lyr = tuple(lyr_ids[start:start + n])
                mel = tuple(mel_ids[start:start + n])
                lyric_count[lyr] += 1
                joint[mel, lyr] += 1
                if mel not in first_seen:
                    first_seen[mel] = (song_idx, start, n)

    by_melody: dict[tuple[int, ...], list[tuple[tuple[int, ...], int]]] = defaultdict(list)
    for (mel, lyr), c in joint.items():
        by_melody[mel].append((lyr, c))

    def t_score(key: tuple[int, ...], count: int, probs: dict[int, float]) -> float:
        return _t(count, window_total[len(key)], math.prod(probs[i] for i in key))

    lyric_t = {lyr: t_score(lyr, c, lyric_p) for lyr, c in lyric_count.items()}
    lyric_segs = list(lyric_ids)
    melodic_segs = list(melodic_ids)
    out = []
    for mel in first_seen:
        associated = sorted(by_melody[mel])
        count = sum(c for _, c in associated)
        scores = tuple(lyric_t[lyr] for lyr, _ in associated)
        probs = tuple(c / count for _, c in associated)
        s_lm, conc, h_norm = relationship_score(scores, probs)
        s_m = t_score(mel, count, melodic_p)
        exemplar: tuple[tuple[int, int], ...] = ()
        if exemplar_notes is not None:
            song_idx, start, n = first_seen[mel]
            lo, length = corpus[song_idx].note_span(start, n)
            exemplar = tuple(exemplar_notes[song_idx][lo:lo + length])
        pattern = tuple(melodic_segs[i] for i in mel)
        entry = LexiconEntry(pattern, len(mel), count, sum(scores) / len(scores), s_m, s_lm,
                             s_m + s_lm, conc, h_norm, len(associated), exemplar)
        out.append(ScoredCandidate(entry, scores, probs))
    return out


def select_top(entries: Iterable[LexiconEntry], fraction: float = TOP_FRACTION) -> list[LexiconEntry]:
    """Highest ``s`` first; ties by higher count, then pattern string.

    Pattern strings are only built for the kept entries and for those tied
    with the last kept one.
    """
    ranked = sorted(entries, key=lambda e: (-e.s, -e.count))
    k = math.ceil(fraction * len(ranked))
    if k == 0:
        return []
    boundary = (ranked[k - 1].s, ranked[k - 1].count)
    head = [e for e in ranked[:k] if (e.s, e.count) != boundary]
    tied = sorted((e for e in ranked if (e.s, e.count) == boundary), key=lambda e: e.key)
    return sorted(head + tied[:k - len(head)], key=lambda e: (-e.s, -e.count, e.key))


def corpus_hash(songs: Sequence[AlignedSong]) -> str:
    h = hashlib.sha256()
    for song in songs:
        h.update(repr((song.words, [(n.bar, n.position, n.pitch, n.duration, n.tempo.value)
                                    for n in song.notes], song.word_of_note)).encode())
    return h.hexdigest()


def build_family_lexicon(features: Sequence[SongFeatures], family: Family,
                         exemplar_notes: Sequence[Sequence[tuple[int, int]]] | None = None,
                         fraction: float = TOP_FRACTION, n_min: int = N_MIN, n_max: int = N_MAX,
                         digest: str = "") -> FamilyLexicon:
    scored = score_candidates(features, family, exemplar_notes, n_min, n_max)
    kept = select_top((c.entry for c in scored), fraction)
    return FamilyLexicon(family, tuple(kept), len(scored), fraction, digest)


def build_lexicon(corpus: Sequence[AlignedSong], dictionary: PronouncingDictionary,
                  fraction: float = TOP_FRACTION, n_min: int = N_MIN,
                  n_max: int = N_MAX) -> NGramLexicon:
    if not corpus:
        raise EmptyLexiconError("cannot build a lexicon from an empty corpus")
    features = [song_features(s, dictionary) for s in corpus]
    notes = [[(n.pitch, n.duration) for n in s.notes] for s in corpus]
    digest = corpus_hash(corpus)
    smr = build_family_lexicon(features, Family.SMR, notes, fraction, n_min, n_max, digest)
    srr = build_family_lexicon(features, Family.SRR, notes, fraction, n_min, n_max, digest)
    if smr.candidates == 0 and srr.candidates == 0:
        raise EmptyLexiconError("corpus yields no joint n-gram of at least two words")
    return NGramLexicon(smr, srr)


# ---------------------------------------------------------------------------
# Maximum-matching sampling


@dataclass(frozen=True)
class MatchedSpan:
    start: int  # first note index
    length: int  # note count
    family: Family
    first_word: int
    n_words: int


def _matches_at(features: SongFeatures, lexicon: NGramLexicon, start: int,
                families: Sequence[Family], covered: np.ndarray) -> list[MatchedSpan]:
    """All lexicon matches beginning at word ``start``, longest first, SMR first."""
    out = []
    n_words = len(features.stress)
    for n in range(min(N_MAX, n_words - start), N_MIN - 1, -1):
        lo, length = features.note_span(start, n)
        if covered[lo:lo + length].any():
            continue
        for family in families:
            if features.melodic_pattern(family, start, n) in lexicon[family]:
                out.append(MatchedSpan(lo, length, family, start, n))
    return out


def max_match_sample(features: SongFeatures, lexicon: NGramLexicon, budget: float,
                     rng: np.random.Generator,
                     families: Sequence[Family] = (Family.SMR, Family.SRR)) -> list[MatchedSpan]:
    """Greedy longest-match sampling of lexicon n-grams up to a note budget.

    Start words are drawn uniformly among those not yet tried and not yet
    covered. At each start the longest match that keeps the total within the
    budget is taken. Matches that would overshoot are set aside; once every
    start has been tried, if the budget is still not met, the shortest
    set-aside match that does not overlap accepted spans is taken, so the
    total reaches the budget with the least overshoot.
    """
    if not 0 < budget <= 1:
        raise InvalidInput(f"budget must lie in (0, 1], got {budget}")
    families = [f for f in (Family.SMR, Family.SRR) if f in families]
    target = budget * features.n_notes
    covered = np.zeros(features.n_notes, dtype=bool)
    tried = np.zeros(len(features.stress), dtype=bool)
    total = 0
    spans: list[MatchedSpan] = []
    overshooting: list[MatchedSpan] = []
    while total < target:
        open_starts = [w for w in range(len(features.stress))
                       if not tried[w] and not covered[features.note_ranges[w].start]]
        if not open_starts:
            break
        start = open_starts[int(rng.integers(len(open_starts)))]
        tried[start] = True
        matches = _matches_at(features, lexicon, start, families, covered)
        fitting = [m for m in matches if total + m.length <= target]
        if not fitting:
            overshooting.extend(matches)
            continue
        choice = fitting[0]
        covered[choice.start:choice.start + choice.length] = True
        total += choice.length
        spans.append(choice)
    if total < target:
        free = [m for m in overshooting if not covered[m.start:m.start + m.length].any()]
        if free:
            spans.append(min(free, key=lambda m: m.length))
    spans.sort(key=lambda m: m.start)
    return spans

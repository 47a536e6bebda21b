"""Slow, literal reference implementations used as independent test oracles."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from lyricmelody.features import Family
from lyricmelody.representation import TICKS_PER_BAR, Note, Tempo


def _seg(values) -> str:
    return "".join(map(str, values))


def brute_force_lexicon(features, family: Family, n_min=2, n_max=12, fraction=0.25):
    """Score every melodic pattern by scanning the corpus once per quantity.

    Patterns are handled as strings (``"01|1"``), counts are recomputed by
    rescanning every window, entropy uses base-2 logarithms, and ranking is a
    single sort. Returns ``(scores, retained)`` where ``scores`` maps pattern
    string to ``(s, count)`` and ``retained`` is the list of kept patterns.
    """
    windows = []  # (n, lyric string, melodic string)
    words_lyr, words_mel = [], []
    for f in features:
        lyr = [_seg(s) for s in f.stress]
        mel = [_seg(s) for s in f.segments[family]]
        words_lyr += lyr
        words_mel += mel
        for n in range(n_min, n_max + 1):
            for i in range(len(lyr) - n + 1):
                windows.append((n, "|".join(lyr[i:i + n]), "|".join(mel[i:i + n])))

    def unigram_p(seq, token):
        return seq.count(token) / len(seq)

    def t(pattern, n, is_lyric):
        total = sum(1 for w in windows if w[0] == n)
        count = sum(1 for w in windows if w[0] == n and w[1 if is_lyric else 2] == pattern)
        p0 = 1.0
        for tok in pattern.split("|"):
            p0 *= unigram_p(words_lyr if is_lyric else words_mel, tok)
        p_hat = count / total
        var = p_hat * (1 - p_hat) or p0 * (1 - p0)
        return 0.0 if var == 0 else (p_hat - p0) / math.sqrt(var / total)

    scores = {}
    for n, _, mel in windows:
        if mel in scores:
            continue
        with_mel = [w[1] for w in windows if w[2] == mel]
        count = len(with_mel)
        lyric_patterns = sorted(set(with_mel))
        m = len(lyric_patterns)
        s_l = [t(lp, n, True) for lp in lyric_patterns]
        if m == 1:
            conc = 1.0
        else:
            probs = [with_mel.count(lp) / count for lp in lyric_patterns]
            h = -sum(p * math.log2(p) for p in probs) / math.log2(m)
            conc = 1.0 - min(1.0, h)
        s_lm = conc * sum(s_l) / m
        scores[mel] = (t(mel, n, False) + s_lm, count)

    ranked = sorted(scores, key=lambda k: (-scores[k][0], -scores[k][1], k))
    return scores, ranked[:math.ceil(fraction * len(ranked))]


def dtw_by_paths(x, y) -> float:
    """Exhaustive DTW over every monotone warping path of two pitch series.

    Each series is centred on its own exact (rational) mean. The cost of a
    path is the sum of squared differences; among minimum-cost paths the
    shortest is kept, and the result is ``sqrt(cost / length)``.
    """
    mx, my = Fraction(sum(x), len(x)), Fraction(sum(y), len(y))
    a = [v - mx for v in x]
    b = [v - my for v in y]
    n, m = len(a), len(b)
    best = None

    def walk(i, j, cost, length):
        nonlocal best
        cost += (a[i] - b[j]) ** 2
        length += 1
        if (i, j) == (n - 1, m - 1):
            if best is None or (cost, length) < best:
                best = (cost, length)
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            if i + di < n and j + dj < m:
                walk(i + di, j + dj, cost, length)

    walk(0, 0, Fraction(0), 0)
    return math.sqrt(best[0] / best[1])


def all_melodies(length: int, alphabet):
    return list(itertools.product(alphabet, repeat=length))


def _notes(spec):
    return tuple(Note(o // TICKS_PER_BAR, o % TICKS_PER_BAR, p, d, Tempo.MODERATO) for o, p, d in spec)


def oracle_melody_ends(notes):
    """Resolve the leftmost adjacent candidate pair until none remain."""
    cands = []
    for i, n in enumerate(notes):
        long_note = n.duration >= 480
        rest_after = i + 1 < len(notes) and notes[i + 1].onset - (n.onset + n.duration) >= 240
        if long_note or rest_after:
            cands.append(i)
    while True:
        pairs = [j for j in range(len(cands) - 1) if cands[j + 1] == cands[j] + 1]
        if not pairs:
            return cands
        j = pairs[0]
        d = abs(notes[cands[j]].duration - notes[cands[j + 1]].duration)
        del cands[j + 1 if d > 240 else j]


def oracle_phrases(words, notes, word_of_note):
    marked = [w for w, text in enumerate(words) if any(c in ",.:;?!\"" for c in text)
              or text.startswith("'") or text.endswith("'")]
    if Fraction(len(marked), len(words)) < Fraction(1, 10):
        ends, source = oracle_melody_ends(notes), "melody"
    else:
        ends = [max(k for k, w in enumerate(word_of_note) if w == m) for m in marked]
        source = "lyrics"
    if not ends or ends[-1] != len(notes) - 1:
        ends.append(len(notes) - 1)
    return tuple(ends), source


def constructed_phrase_cases(n_cases=80, seed=0):
    rng = np.random.default_rng(seed)
    vocab = ["love", "night", "rain", "home", "sky", "dream", "fire", "blue"]
    cases = []
    for _ in range(n_cases):
        n_words = int(rng.integers(3, 25))
        per_word = rng.integers(1, 4, size=n_words)
        words = []
        punct_rate = rng.choice([0.0, 0.05, 0.1, 0.3])
        for _ in range(n_words):
            w = vocab[int(rng.integers(len(vocab)))]
            if rng.random() < punct_rate:
                w += str(rng.choice([",", ".", "?", "!"]))
            words.append(w)
        spec, tick = [], 0
        for _ in range(int(per_word.sum())):
            dur = int(rng.choice([120, 240, 360, 480, 720, 960]))
            spec.append((tick, 60 + int(rng.integers(12)), dur))
            tick += dur + int(rng.choice([0, 0, 0, 120, 240, 480]))
        word_of_note = [w for w, k in enumerate(per_word) for _ in range(int(k))]
        cases.append((words, _notes(spec), word_of_note))
    return cases

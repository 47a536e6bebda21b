"""Objective similarity metrics between generated and reference songs.

Four distribution similarities (pitch class, duration, inter-onset interval,
notes-per-word alignment) are overlapped areas of normalized histograms;
the melody distance is a dynamic-time-warping distance between mean-centred
pitch time series sampled every 10 ticks.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import InvalidInput
from .representation import DURATIONS, POSITIONS, TICKS_PER_BAR, AlignedSong, Note

MD_STEP = 10
ALIGNMENT_CAP = 16
IOI_GRID: tuple[int, ...] = tuple(p for p in POSITIONS if p > 0) + (TICKS_PER_BAR,)


@dataclass(frozen=True)
class Histogram:
    bins: tuple
    masses: np.ndarray
    normalized: bool = True
    # integer bin counts behind normalized masses, when known
    counts: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.bins) != len(self.masses):
            raise InvalidInput("one mass per bin")
        if (self.masses < 0).any():
            raise InvalidInput("masses must be non-negative")
        if self.normalized and abs(self.masses.sum() - 1.0) > 1e-9:
            raise InvalidInput(f"normalized masses sum to {self.masses.sum()!r}")

    def mass(self, bin_label) -> float:
        return float(self.masses[self.bins.index(bin_label)])


def _normalized(bins: tuple, counts: np.ndarray) -> Histogram:
    return Histogram(bins, counts / counts.sum(), True, tuple(int(c) for c in counts))


def pitch_class_histogram(melody: Sequence[Note]) -> Histogram:
    if not melody:
        raise InvalidInput("pitch class histogram of an empty melody")
    counts = np.zeros(12)
    for n in melody:
        counts[n.pitch % 12] += 1
    return _normalized(tuple(range(12)), counts)


_DURATION_INDEX = {d: i for i, d in enumerate(DURATIONS)}


def duration_histogram(melody: Sequence[Note]) -> Histogram:
    if not melody:
        raise InvalidInput("duration histogram of an empty melody")
    counts = np.zeros(len(DURATIONS))
    for n in melody:
        try:
            counts[_DURATION_INDEX[n.duration]] += 1
        except KeyError:
            raise InvalidInput(f"duration {n.duration} is off the duration grid") from None
    return _normalized(DURATIONS, counts)


def _ioi_bin(ioi: int) -> int:
    """Index of the nearest grid value; ties prefer multiples of 30; past one bar, overflow."""
    if ioi > TICKS_PER_BAR:
        return len(IOI_GRID)
    i = bisect.bisect_left(IOI_GRID, ioi)
    candidates = [j for j in (i - 1, i) if 0 <= j < len(IOI_GRID)]
    return min(candidates, key=lambda j: (abs(IOI_GRID[j] - ioi), IOI_GRID[j] % 30 != 0, j))


def ioi_histogram(melody: Sequence[Note]) -> Histogram:
    if len(melody) < 2:
        raise InvalidInput("inter-onset intervals need at least two notes")
    counts = np.zeros(len(IOI_GRID) + 1)
    for a, b in zip(melody, melody[1:]):
        counts[_ioi_bin(b.onset - a.onset)] += 1
    return _normalized(IOI_GRID + ("overflow",), counts)


def alignment_histogram(song: AlignedSong) -> Histogram:
    """Share of words sung on N notes, N = 1..16, with a final bin for more."""
    counts = np.zeros(ALIGNMENT_CAP + 1)
    for r in song.word_note_ranges():
        counts[min(len(r), ALIGNMENT_CAP + 1) - 1] += 1
    return _normalized(tuple(range(1, ALIGNMENT_CAP + 1)) + ("overflow",), counts)


def overlapped_area(h1: Histogram, h2: Histogram) -> float:
    if h1.bins != h2.bins:
        raise InvalidInput("histograms have different bins")
    if not (h1.normalized and h2.normalized):
        raise InvalidInput("overlapped area needs normalized histograms")
    if h1.counts is not None and h2.counts is not None:
        # sum of min(a/n1, b/n2) as one integer ratio: identical shapes give exactly 1
        n1, n2 = sum(h1.counts), sum(h2.counts)
        return sum(min(a * n2, b * n1) for a, b in zip(h1.counts, h2.counts)) / (n1 * n2)
    return float(np.minimum(h1.masses, h2.masses).sum())


# ---------------------------------------------------------------------------
# Melody distance


def pitch_series(melody: Sequence[Note], step: int = MD_STEP) -> np.ndarray:
    """Pitch sampled every ``step`` ticks from the first onset to the last note end.

    During rests the previous note's pitch is held.
    """
    if not melody:
        raise InvalidInput("melody distance of an empty melody")
    onsets = np.array([n.onset for n in melody], dtype=np.int64)
    pitches = np.array([n.pitch for n in melody], dtype=np.int64)
    end = max(n.end for n in melody)
    times = np.arange(onsets[0], end, step)
    return pitches[np.searchsorted(onsets, times, side="right") - 1]


@njit(cache=True)
def _dtw_scaled(x, y, offset):
    """Minimal accumulated squared cost and, among minimal paths, the shortest length.

    Local distance is ``x[i] - y[j] - offset`` (integers, so ties are exact
    while the products stay below 2**53). Moves: right, down, diagonal.
    """
    n = x.shape[0]
    m = y.shape[0]
    prev_cost = np.empty(m)
    prev_len = np.empty(m, dtype=np.int64)
    cur_cost = np.empty(m)
    cur_len = np.empty(m, dtype=np.int64)
    for i in range(n):
        for j in range(m):
            d = float(x[i] - y[j] - offset)
            c = d * d
            if i == 0 and j == 0:
                cur_cost[j] = c
                cur_len[j] = 1
                continue
            best = np.inf
            best_len = 0
            if i > 0 and j > 0:
                best = prev_cost[j - 1]
                best_len = prev_len[j - 1]
            if i > 0:
                if prev_cost[j] < best or (prev_cost[j] == best and prev_len[j] < best_len):
                    best = prev_cost[j]
                    best_len = prev_len[j]
            if j > 0:
                if cur_cost[j - 1] < best or (cur_cost[j - 1] == best and cur_len[j - 1] < best_len):
                    best = cur_cost[j - 1]
                    best_len = cur_len[j - 1]
            cur_cost[j] = best + c
            cur_len[j] = best_len + 1
        prev_cost, cur_cost = cur_cost, prev_cost
        prev_len, cur_len = cur_len, prev_len
    return prev_cost[m - 1], prev_len[m - 1]


def dtw_series_distance(x: Sequence[int], y: Sequence[int]) -> float:
    """RMS of the mean-centred pitch difference along the optimal warping path."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if len(x) == 0 or len(y) == 0:
        raise InvalidInput("empty series")
    lx, ly = len(x), len(y)
    scale = lx * ly
    # (x_i - mean x) - (y_j - mean y), multiplied through by lx * ly
    offset = int(x.sum()) * ly - int(y.sum()) * lx
    cost, length = _dtw_scaled(x * scale, y * scale, offset)
    return math.sqrt(cost / length) / scale


def melody_distance(generated: Sequence[Note], reference: Sequence[Note]) -> float:
    return dtw_series_distance(pitch_series(generated), pitch_series(reference))


# ---------------------------------------------------------------------------
# Reports

METRIC_NAMES = ("D_A", "D_P", "D_D", "D_IOI", "MD")
PERCENT_METRICS = frozenset({"D_A", "D_P", "D_D", "D_IOI"})


def pair_metrics(generated: AlignedSong, reference: AlignedSong) -> dict[str, float]:
    g, r = generated.notes, reference.notes
    return {
        "D_A": overlapped_area(alignment_histogram(generated), alignment_histogram(reference)),
        "D_P": overlapped_area(pitch_class_histogram(g), pitch_class_histogram(r)),
        "D_D": overlapped_area(duration_histogram(g), duration_histogram(r)),
        "D_IOI": overlapped_area(ioi_histogram(g), ioi_histogram(r)),
        "MD": melody_distance(g, r),
    }


@dataclass(frozen=True)
class MetricReport:
    per_pair: tuple[dict[str, float], ...]
    means: dict[str, float]
    sds: dict[str, float]

    def __getattr__(self, name: str) -> float:
        if name in METRIC_NAMES:
            return self.means[name]
        raise AttributeError(name)

    def rows(self) -> list[tuple[str, str]]:
        """Column name and ``mean ± SD``, similarities as percentages."""
        out = []
        for name in METRIC_NAMES:
            scale = 100.0 if name in PERCENT_METRICS else 1.0
            label = f"{name}(%)" if name in PERCENT_METRICS else name
            out.append((label, f"{self.means[name] * scale:.2f} ± {self.sds[name] * scale:.2f}"))
        return out

    def to_text(self) -> str:
        rows = self.rows()
        return "\t".join(r[0] for r in rows) + "\n" + "\t".join(r[1] for r in rows) + "\n"

    def to_json(self) -> dict:
        return {"means": self.means, "sds": self.sds, "pairs": list(self.per_pair)}


class PairingError(InvalidInput):
    pass


def _summarize(values: Sequence[dict[str, float]]) -> tuple[dict[str, float], dict[str, float]]:
    means = {k: float(np.mean([v[k] for v in values])) for k in METRIC_NAMES}
    sds = {k: float(np.std([v[k] for v in values])) for k in METRIC_NAMES}
    return means, sds


def evaluate(generated: Sequence[AlignedSong], reference: Sequence[AlignedSong]) -> MetricReport:
    """Per-pair metrics, their means, and standard deviations across pairs."""
    if not generated or not reference:
        raise InvalidInput("evaluation needs non-empty song sets")
    if len(generated) != len(reference):
        raise PairingError(f"{len(generated)} generated songs vs {len(reference)} references")
    for i, (g, r) in enumerate(zip(generated, reference)):
        if g.words != r.words:
            raise PairingError(f"pair {i} has different lyrics")
    per_pair = tuple(pair_metrics(g, r) for g, r in zip(generated, reference))
    means, sds = _summarize(per_pair)
    return MetricReport(per_pair, means, sds)


def aggregate_runs(reports: Sequence[MetricReport]) -> MetricReport:
    """Repeated generation runs: mean of per-run means, SD across runs."""
    if not reports:
        raise InvalidInput("no runs to aggregate")
    run_means = tuple(r.means for r in reports)
    means, sds = _summarize(run_means)
    return MetricReport(run_means, means, sds)

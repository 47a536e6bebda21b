"""Run configuration shared by every CLI command.

Values come from the dataclass defaults, then an optional YAML file, then
command-line flags (last wins). Unknown keys in the file are an error so
typos do not silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import InvalidInput
from .ingestion import IngestConfig
from .ngram import N_MAX, N_MIN, TOP_FRACTION
from .phrase import PhraseConfig
from .pretraining import ACTION_PROBS, MAX_LEN, PHRASE_BUDGET, SONG_BUDGET, WORD_BUDGET


@dataclass
class RunConfig:
    seed: int = 0
    threads: int = 1
    # ingestion
    dictionary: str | None = None
    max_repetition: float = 0.2
    max_long_short: float = 0.5
    short_word_max: int = 2
    long_word_min: int = 10
    min_bars: int = 8
    pitch_low: int = 48
    pitch_high: int = 72
    # phrases
    long_note_ticks: int = 480
    rest_gap_ticks: int = 240
    duration_gap_ticks: int = 240
    punctuation_ratio: float = 0.1
    # lexicon
    n_min: int = N_MIN
    n_max: int = N_MAX
    lexicon_cutoff: float = TOP_FRACTION
    # pretraining samples
    objective: str = "all"
    max_len: int = MAX_LEN
    word_budget: float = WORD_BUDGET
    phrase_budget: float = PHRASE_BUDGET
    song_budget: float = SONG_BUDGET
    action_probs: list[float] = field(default_factory=lambda: list(ACTION_PROBS))

    def __post_init__(self) -> None:
        if not 2 <= self.n_min <= self.n_max:
            raise InvalidInput(f"need 2 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        if len(self.action_probs) != 3 or abs(sum(self.action_probs) - 1) > 1e-9:
            raise InvalidInput("action_probs must be three probabilities summing to 1")
        for name in ("word_budget", "phrase_budget", "song_budget", "lexicon_cutoff"):
            if not 0 < getattr(self, name) <= 1:
                raise InvalidInput(f"{name} must lie in (0, 1]")
        if self.threads < 1:
            raise InvalidInput("threads must be at least 1")

    @property
    def ingest(self) -> IngestConfig:
        return IngestConfig(self.max_repetition, self.max_long_short, self.short_word_max,
                            self.long_word_min, self.min_bars, self.pitch_low, self.pitch_high)

    @property
    def phrase(self) -> PhraseConfig:
        return PhraseConfig(self.long_note_ticks, self.rest_gap_ticks, self.duration_gap_ticks,
                            self.punctuation_ratio)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "RunConfig":
        values: dict = {}
        if path is not None:
            loaded = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
            if not isinstance(loaded, dict):
                raise InvalidInput(f"{path}: expected a mapping at top level")
            unknown = set(loaded) - set(cls.field_names())
            if unknown:
                raise InvalidInput(f"{path}: unknown config keys {sorted(unknown)}")
            values.update(loaded)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_yaml(self) -> str:
        return yaml.safe_dump(dataclasses.asdict(self), sort_keys=False)

"""Reader for pronouncing dictionaries in the CMU text format.

Each entry line is ``WORD  PH1 PH2 ...``; vowel phonemes end in a stress digit
(0 unstressed, 1 primary, 2 secondary). Alternate pronunciations appear as
``WORD(2)`` and are ignored: the first listed entry wins.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import InvalidInput

_VARIANT = re.compile(r"\(\d+\)$")
_EDGE_PUNCT = "\"',.:;?!"


def lookup_key(word: str) -> str:
    """Normalize a lyric word (possibly carrying punctuation) for lookup."""
    return word.strip().strip(_EDGE_PUNCT).lower()


class PronouncingDictionary:
    def __init__(self, entries: dict[str, tuple[str, ...]]):
        self._entries = entries

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "PronouncingDictionary":
        entries: dict[str, tuple[str, ...]] = {}
        for line in lines:
            line = line.strip()
            if not line or line.startswith(";;;") or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                continue
            head = parts[0].lower()
            if _VARIANT.search(head):
                continue
            entries.setdefault(head, tuple(parts[1:]))
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path) -> "PronouncingDictionary":
        with open(path, encoding="latin-1") as fh:
            return cls.from_lines(fh)

    @classmethod
    def bundled(cls) -> "PronouncingDictionary":
        """The small dictionary shipped for the toy corpus and the tests."""
        text = resources.files("lyricmelody").joinpath("data/toy_cmudict.txt").read_text("latin-1")
        return cls.from_lines(text.splitlines())

    def __contains__(self, word: object) -> bool:
        return isinstance(word, str) and lookup_key(word) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def words(self) -> list[str]:
        return sorted(self._entries)

    def phonemes(self, word: str) -> tuple[str, ...]:
        try:
            return self._entries[lookup_key(word)]
        except KeyError:
            raise KeyError(f"{word!r} is not in the pronouncing dictionary") from None

    def stress(self, word: str) -> tuple[int, ...]:
        """Stress level of each syllable, in order."""
        levels = []
        for ph in self.phonemes(word):
            if ph[-1] in "012":
                levels.append(int(ph[-1]))
        if not levels:
            raise InvalidInput(f"{word!r} has no stress-bearing phoneme")
        return tuple(levels)

"""On-disk formats.

* Corpus: JSON lines, one :class:`AlignedSong` per line, with a header line.
* Token file: one song per block of 9-integer token records, blocks separated
  by a blank line; the attribute index tables go to a JSON sidecar.
* Lexicon: one tab-separated file per family, with a ``#`` header carrying the
  format version, family, cutoff and corpus hash.
* Batches: JSON lines, a header line then one record per sample.

All writers sort keys and use fixed float formatting so equal inputs give
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .errors import ParseError
from .features import Family
from .ngram import FamilyLexicon, LexiconEntry, NGramLexicon, parse_pattern, pattern_str
from .pretraining import BatchRecord, PretrainSample
from .representation import AlignedSong, Note, Tempo, Vocabulary, encode_song

CORPUS_FORMAT = "lyricmelody-corpus/1"
BATCH_FORMAT = "lyricmelody-batch/1"
LEXICON_VERSION = "v1"
LEXICON_COLUMNS = ("pattern", "n", "count", "s_l_mean", "s_m", "s_lm", "s",
                   "concentration", "h_norm", "m", "exemplar")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Corpus


def song_to_dict(song: AlignedSong) -> dict:
    return {
        "words": list(song.words),
        "notes": [[n.bar, n.position, n.pitch, n.duration, n.tempo.value] for n in song.notes],
        "word_of_note": list(song.word_of_note),
        "phrase_of_word": list(song.phrase_of_word),
        "phrase_of_note": list(song.phrase_of_note),
    }


def song_from_dict(data: dict) -> AlignedSong:
    notes = tuple(Note(b, p, pi, d, Tempo(t)) for b, p, pi, d, t in data["notes"])
    return AlignedSong(tuple(data["words"]), notes, tuple(data["word_of_note"]),
                       tuple(data["phrase_of_word"]), tuple(data["phrase_of_note"]))


def write_corpus(path: str | Path, songs: Sequence[AlignedSong]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps({"format": CORPUS_FORMAT, "songs": len(songs)}) + "\n")
        for song in songs:
            fh.write(_dumps(song_to_dict(song)) + "\n")


def read_corpus(path: str | Path) -> list[AlignedSong]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file, expected a corpus header")
    try:
        header = json.loads(lines[0])
    except ValueError:
        header = None
    if not isinstance(header, dict) or header.get("format") != CORPUS_FORMAT:
        raise ParseError(f"{path}: not a corpus file (bad header line)")
    songs = []
    for i, line in enumerate(lines[1:], start=2):
        try:
            songs.append(song_from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"{path}:{i}: {exc}") from None
    if len(songs) != header["songs"]:
        raise ParseError(f"{path}: header announces {header['songs']} songs, found {len(songs)}")
    return songs


# ---------------------------------------------------------------------------
# Token records


def write_tokens(path: str | Path, songs: Sequence[AlignedSong],
                 vocab: Vocabulary | None = None) -> Vocabulary:
    """Write token records and the ``<path>.vocab.json`` sidecar; returns the vocabulary."""
    vocab = vocab or Vocabulary.from_songs(songs)
    blocks = []
    for song in songs:
        blocks.append("\n".join(" ".join(map(str, vocab.encode(t))) for t in encode_song(song)))
    Path(path).write_text("\n\n".join(blocks) + ("\n" if blocks else ""), encoding="utf-8")
    Path(str(path) + ".vocab.json").write_text(_dumps(vocab.to_json()) + "\n", encoding="utf-8")
    return vocab


def read_tokens(path: str | Path) -> list[list[tuple[int, ...]]]:
    songs: list[list[tuple[int, ...]]] = [[]]
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            songs[-1].append(tuple(int(v) for v in line.split()))
        elif songs[-1]:
            songs.append([])
    return [s for s in songs if s]


# ---------------------------------------------------------------------------
# Lexicon


def _fmt(x: float) -> str:
    return repr(float(x))


def write_family_lexicon(fh: TextIO, lex: FamilyLexicon) -> None:
    fh.write(f"# lexicon {LEXICON_VERSION} family={lex.family.value} corpus={lex.corpus_hash} "
             f"cutoff={_fmt(lex.cutoff)} candidates={lex.candidates} retained={len(lex)}\n")
    fh.write("\t".join(LEXICON_COLUMNS) + "\n")
    for e in lex.entries:
        exemplar = ",".join(f"{p}:{d}" for p, d in e.exemplar)
        fh.write("\t".join([pattern_str(e.pattern), str(e.n), str(e.count), _fmt(e.s_l_mean),
                            _fmt(e.s_m), _fmt(e.s_lm), _fmt(e.s), _fmt(e.concentration),
                            _fmt(e.h_norm), str(e.m), exemplar]) + "\n")


def parse_family_lexicon(text: str, source: str = "<lexicon>") -> FamilyLexicon:
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith(f"# lexicon {LEXICON_VERSION} "):
        raise ParseError(f"{source}: missing lexicon header")
    meta = dict(item.split("=", 1) for item in lines[0].split()[3:])
    if tuple(lines[1].split("\t")) != LEXICON_COLUMNS:
        raise ParseError(f"{source}: unexpected column header")
    entries = []
    for i, line in enumerate(lines[2:], start=3):
        f = line.split("\t")
        if len(f) != len(LEXICON_COLUMNS):
            raise ParseError(f"{source}:{i}: expected {len(LEXICON_COLUMNS)} fields")
        exemplar = tuple(tuple(int(v) for v in pair.split(":")) for pair in f[10].split(",") if pair)
        entries.append(LexiconEntry(parse_pattern(f[0]), int(f[1]), int(f[2]), float(f[3]),
                                    float(f[4]), float(f[5]), float(f[6]), float(f[7]),
                                    float(f[8]), int(f[9]), exemplar))
    if len(entries) != int(meta["retained"]):
        raise ParseError(f"{source}: header announces {meta['retained']} entries, found {len(entries)}")
    return FamilyLexicon(Family(meta["family"]), tuple(entries), int(meta["candidates"]),
                         float(meta["cutoff"]), meta["corpus"])


def lexicon_paths(prefix: str | Path) -> dict[Family, Path]:
    return {f: Path(f"{prefix}.{f.value.lower()}.tsv") for f in Family}


def write_lexicon(prefix: str | Path, lexicon: NGramLexicon) -> list[Path]:
    paths = lexicon_paths(prefix)
    for family, path in paths.items():
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            write_family_lexicon(fh, lexicon[family])
    return list(paths.values())


def read_lexicon(prefix: str | Path) -> NGramLexicon:
    paths = lexicon_paths(prefix)
    fams = {f: parse_family_lexicon(p.read_text(encoding="utf-8"), str(p)) for f, p in paths.items()}
    return NGramLexicon(fams[Family.SMR], fams[Family.SRR])


# ---------------------------------------------------------------------------
# Batches


def sample_to_dict(sample: PretrainSample, vocab: Vocabulary) -> dict:
    spans = []
    if sample.spans is not None:
        for s in sample.spans.spans:
            spans.append({
                "start": s.start, "length": s.length, "action": s.action.value,
                "family": s.family.value if s.family else None,
                "replacement": [list(p) for p in s.replacement] if s.replacement else None,
            })
    return {
        "objective": sample.objective.value,
        "lengths": list(sample.lengths),
        "tokens": [list(vocab.encode(t)) for t in sample.tokens],
        "word_ids": list(sample.word_ids),
        "phrase_ids": list(sample.phrase_ids),
        "spans": spans,
        "span_order": list(sample.span_order),
    }


def write_batches(path: str | Path, records: Iterable[BatchRecord], vocab: Vocabulary,
                  seed: int, objectives: Sequence[str], max_len: int) -> dict[str, int]:
    """Write header + records; returns counts of written and skipped samples."""
    counts = {"written": 0, "skipped": 0}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps({"format": BATCH_FORMAT, "seed": seed, "objectives": list(objectives),
                         "max_len": max_len, "vocab": vocab.to_json()}) + "\n")
        for rec in records:
            if rec.sample is None:
                fh.write(_dumps({"song": rec.song_index, "skipped": rec.reason}) + "\n")
                counts["skipped"] += 1
            else:
                fh.write(_dumps({"song": rec.song_index, "seed": seed,
                                 **sample_to_dict(rec.sample, vocab)}) + "\n")
                counts["written"] += 1
    return counts


def read_batches(path: str | Path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty batch file")
    try:
        header = json.loads(lines[0])
    except ValueError:
        header = None
    if not isinstance(header, dict) or header.get("format") != BATCH_FORMAT:
        raise ParseError(f"{path}: not a batch file")
    return header, [json.loads(line) for line in lines[1:]]

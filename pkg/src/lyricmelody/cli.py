"""Command-line interface.

Exit codes:
    0  success
    2  usage error (bad flags)
    3  unreadable or malformed input
    4  empty input where content is required
    5  evaluation pairing mismatch
    6  lexicon missing for a word-level objective
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import serialize
from .config import RunConfig
from .dictionary import PronouncingDictionary
from .errors import EmptyLexiconError, InvalidInput, ParseError
from .features import song_features
from .ingestion import ingest_files
from .metrics import PairingError, evaluate
from .ngram import build_lexicon
from .phrase import recognize_phrases
from .pretraining import PRETRAIN_OBJECTIVES, Objective, make_batch
from .representation import Vocabulary

log = logging.getLogger("lyricmelody")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_EMPTY = 4
EXIT_PAIRING = 5
EXIT_NO_LEXICON = 6

OBJECTIVE_CHOICES = ("word-smr", "word-srr", "phrase", "song", "clm", "all")
WORD_OBJECTIVES = (Objective.WORD_SMR, Objective.WORD_SRR, Objective.WORD)


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _dictionary(cfg: RunConfig) -> PronouncingDictionary:
    if cfg.dictionary is None:
        return PronouncingDictionary.bundled()
    return PronouncingDictionary.load(cfg.dictionary)


def _read_corpus(path: str) -> list:
    try:
        return serialize.read_corpus(path)
    except OSError as exc:
        raise CommandError(EXIT_INPUT, f"cannot read corpus {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def objectives_for(name: str) -> tuple[Objective, ...]:
    return PRETRAIN_OBJECTIVES if name == "all" else (Objective(name),)


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(args, cfg: RunConfig) -> int:
    root = Path(args.input)
    if not root.is_dir():
        raise CommandError(EXIT_INPUT, f"input directory {root} does not exist")
    paths = sorted(p for p in root.rglob("*") if p.suffix.lower() in (".mid", ".midi"))
    songs, report = ingest_files(paths, _dictionary(cfg), cfg.ingest, cfg.phrase, cfg.threads)
    serialize.write_corpus(args.output, songs)
    if args.tokens:
        serialize.write_tokens(args.tokens, songs)
    summary = json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    _emit(summary, args.report)
    return EXIT_OK


def cmd_build_lexicon(args, cfg: RunConfig) -> int:
    songs = _read_corpus(args.corpus)
    try:
        lexicon = build_lexicon(songs, _dictionary(cfg), cfg.lexicon_cutoff, cfg.n_min, cfg.n_max)
    except EmptyLexiconError as exc:
        raise CommandError(EXIT_EMPTY, str(exc)) from None
    for path in serialize.write_lexicon(args.output, lexicon):
        print(path)
    for fam in (lexicon.smr, lexicon.srr):
        print(f"{fam.family.value}: {len(fam)} of {fam.candidates} candidates kept")
    return EXIT_OK


def cmd_phrases(args, cfg: RunConfig) -> int:
    songs = _read_corpus(args.corpus)
    lines = []
    for i, song in enumerate(songs):
        seg = recognize_phrases(song, cfg.phrase)
        lines.append(json.dumps({"song": i, "source": seg.source, "ends": list(seg.ends)}))
    _emit("".join(line + "\n" for line in lines), args.output)
    return EXIT_OK


def cmd_make_batches(args, cfg: RunConfig) -> int:
    songs = _read_corpus(args.corpus)
    if not songs:
        raise CommandError(EXIT_EMPTY, f"{args.corpus} holds no songs")
    objectives = objectives_for(cfg.objective)
    lexicon = features = None
    if any(o in WORD_OBJECTIVES for o in objectives):
        if not args.lexicon:
            raise CommandError(EXIT_NO_LEXICON, "word-level objectives need --lexicon PREFIX")
        try:
            lexicon = serialize.read_lexicon(args.lexicon)
        except FileNotFoundError as exc:
            raise CommandError(EXIT_NO_LEXICON, f"lexicon file missing: {exc.filename}") from None
        dictionary = _dictionary(cfg)
        features = [song_features(s, dictionary) for s in songs]
    vocab = Vocabulary.from_songs(songs)
    covered: Counter = Counter()
    notes: Counter = Counter()
    actions: Counter = Counter()

    def tally(records):
        for rec in records:
            if rec.sample is not None and rec.sample.spans is not None:
                obj = rec.sample.objective.value
                covered[obj] += rec.sample.spans.covered
                notes[obj] += len(songs[rec.song_index].notes)
                actions.update(s.action.value for s in rec.sample.spans.spans)
            yield rec

    records = make_batch(songs, features, lexicon, objectives, cfg.seed, max_len=cfg.max_len,
                         word_budget=cfg.word_budget, phrase_budget=cfg.phrase_budget,
                         song_budget=cfg.song_budget, action_probs=tuple(cfg.action_probs))
    counts = serialize.write_batches(args.output, tally(records), vocab, cfg.seed,
                                     [o.value for o in objectives], cfg.max_len)
    print(f"samples written: {counts['written']}, skipped: {counts['skipped']}")
    for obj in sorted(covered):
        print(f"{obj}: covered {covered[obj] / notes[obj]:.4f} of notes")
    total = sum(actions.values())
    if total:
        shares = ", ".join(f"{a} {actions[a] / total:.3f}" for a in ("mask", "random", "keep"))
        print(f"span actions over {total} spans: {shares}")
    return EXIT_OK


def cmd_evaluate(args, cfg: RunConfig) -> int:
    generated = _read_corpus(args.generated)
    reference = _read_corpus(args.reference)
    if not generated or not reference:
        raise CommandError(EXIT_EMPTY, "evaluation needs non-empty corpora")
    try:
        report = evaluate(generated, reference)
    except PairingError as exc:
        raise CommandError(EXIT_PAIRING, str(exc)) from None
    _emit(report.to_text(), None)
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_json(), sort_keys=True) + "\n",
                                   encoding="utf-8")
    return EXIT_OK


def cmd_stats(args, cfg: RunConfig) -> int:
    songs = _read_corpus(args.corpus)
    if not songs:
        raise CommandError(EXIT_EMPTY, f"{args.corpus} holds no songs")
    n_notes = np.array([len(s.notes) for s in songs])
    n_words = np.array([len(s.words) for s in songs])
    n_phrases = np.array([s.n_phrases for s in songs])
    stats = {
        "songs": len(songs),
        "notes": int(n_notes.sum()),
        "words": int(n_words.sum()),
        "vocabulary": len(Vocabulary.from_songs(songs).text),
        "notes_per_song": round(float(n_notes.mean()), 4),
        "words_per_song": round(float(n_words.mean()), 4),
        "phrases_per_song": round(float(n_phrases.mean()), 4),
        "notes_per_word": round(float(n_notes.sum() / n_words.sum()), 4),
        "multi_note_words": round(float(np.mean(
            [len(r) > 1 for s in songs for r in s.word_note_ranges()])), 4),
    }
    _emit(json.dumps(stats, indent=2) + "\n", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _global_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("run")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed")
    g.add_argument("--config", default=argparse.SUPPRESS, help="YAML run configuration")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes")
    g.add_argument("--dictionary", default=argparse.SUPPRESS,
                   help="CMU-format pronouncing dictionary (default: bundled toy dictionary)")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def _phrase_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--long-note-ticks", type=int, dest="long_note_ticks")
    parser.add_argument("--rest-gap-ticks", type=int, dest="rest_gap_ticks")
    parser.add_argument("--duration-gap-ticks", type=int, dest="duration_gap_ticks")
    parser.add_argument("--punctuation-ratio", type=float, dest="punctuation_ratio")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyricmelody", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="MIDI directory -> corpus file and pipeline report")
    _global_flags(p)
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="corpus file (JSON lines)")
    p.add_argument("--report", help="write the pipeline report here instead of stdout")
    p.add_argument("--tokens", help="also write 9-integer token records (plus .vocab.json)")
    p.add_argument("--max-repetition", type=float, dest="max_repetition")
    p.add_argument("--max-long-short", type=float, dest="max_long_short")
    p.add_argument("--short-word-max", type=int, dest="short_word_max")
    p.add_argument("--long-word-min", type=int, dest="long_word_min")
    p.add_argument("--min-bars", type=int, dest="min_bars")
    p.add_argument("--pitch-low", type=int, dest="pitch_low")
    p.add_argument("--pitch-high", type=int, dest="pitch_high")
    _phrase_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-lexicon", help="corpus -> SMR and SRR lexicon files")
    _global_flags(p)
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True,
                   help="path prefix; writes PREFIX.smr.tsv and PREFIX.srr.tsv")
    p.add_argument("--cutoff", type=float, dest="lexicon_cutoff")
    p.add_argument("--n-min", type=int, dest="n_min")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.set_defaults(func=cmd_build_lexicon)

    p = sub.add_parser("phrases", help="per-song phrase boundaries (last note of each phrase)")
    _global_flags(p)
    p.add_argument("corpus")
    p.add_argument("-o", "--output")
    _phrase_flags(p)
    p.set_defaults(func=cmd_phrases)

    p = sub.add_parser("make-batches", help="corpus + lexicon -> pretraining samples")
    _global_flags(p)
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True, help="batch file (JSON lines)")
    p.add_argument("--lexicon", help="lexicon path prefix given to build-lexicon")
    p.add_argument("--objective", choices=OBJECTIVE_CHOICES, dest="objective")
    p.add_argument("--max-len", type=int, dest="max_len")
    p.add_argument("--word-budget", type=float, dest="word_budget")
    p.add_argument("--phrase-budget", type=float, dest="phrase_budget")
    p.add_argument("--song-budget", type=float, dest="song_budget")
    p.set_defaults(func=cmd_make_batches)

    p = sub.add_parser("evaluate", help="objective metrics of generated vs reference songs")
    _global_flags(p)
    p.add_argument("generated")
    p.add_argument("reference")
    p.add_argument("--json", help="also write per-pair values and summary as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="corpus summary statistics")
    _global_flags(p)
    p.add_argument("corpus")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k in RunConfig.field_names()}
    try:
        cfg = RunConfig.load(getattr(args, "config", None), **overrides)
        return args.func(args, cfg)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, InvalidInput, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

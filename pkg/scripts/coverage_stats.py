"""Span coverage and corruption-action shares on a synthetic corpus.

Prints, per objective, the share of notes covered by sampled spans, plus
the action shares over all word-level spans.
"""

import argparse
import time
from collections import Counter

from lyricmelody.dictionary import PronouncingDictionary
from lyricmelody.features import Family, song_features
from lyricmelody.ngram import build_lexicon
from lyricmelody.pretraining import (
    Objective,
    sample_phrase_level,
    sample_song_level,
    sample_word_level,
    song_rng,
)
from lyricmelody.synth import random_corpus

WORD_FAMILIES = {
    Objective.WORD_SMR: (Family.SMR,),
    Objective.WORD_SRR: (Family.SRR,),
    Objective.WORD: (Family.SMR, Family.SRR),
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-n", type=int, default=1000, help="synthetic songs")
    parser.add_argument("--lexicon-songs", type=int, default=300,
                        help="songs (from the start of the corpus) used to build the lexicon")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    start = time.perf_counter()
    dictionary = PronouncingDictionary.bundled()
    songs = random_corpus(args.n, seed=args.seed, dictionary=dictionary)
    lexicon = build_lexicon(songs[:args.lexicon_songs], dictionary)
    feats = [song_features(s, dictionary) for s in songs]
    n_notes = sum(len(s.notes) for s in songs)
    actions: Counter = Counter()

    for objective, families in WORD_FAMILIES.items():
        covered = 0
        for i, song in enumerate(songs):
            spans = sample_word_level(song, feats[i], lexicon, song_rng(args.seed, i, objective),
                                      families)
            covered += spans.covered
            actions.update(s.action.value for s in spans.spans)
        print(f"{objective.value:9s} covered {covered / n_notes:.4f}")
    phrase = sum(sample_phrase_level(s, song_rng(args.seed, i, Objective.PHRASE)).covered
                 for i, s in enumerate(songs))
    song = sum(sample_song_level(s, song_rng(args.seed, i, Objective.SONG)).covered
               for i, s in enumerate(songs))
    print(f"{'phrase':9s} covered {phrase / n_notes:.4f}")
    print(f"{'song':9s} covered {song / n_notes:.4f}")
    total = sum(actions.values())
    shares = ", ".join(f"{a} {actions[a] / total:.4f}" for a in ("mask", "random", "keep"))
    print(f"actions over {total} word-level spans: {shares}")
    print(f"elapsed {time.perf_counter() - start:.1f} s")


if __name__ == "__main__":
    main()

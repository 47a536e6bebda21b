import io
import json

import pytest
from hypothesis import given, settings

from conftest import songs
from lyricmelody import serialize
from lyricmelody.errors import ParseError
from lyricmelody.features import song_features
from lyricmelody.ngram import build_lexicon
from lyricmelody.pretraining import PRETRAIN_OBJECTIVES, make_batch
from lyricmelody.representation import Vocabulary, decode_song


@settings(max_examples=40, deadline=None)
@given(songs())
def test_song_dict_round_trip(song):
    assert serialize.song_from_dict(json.loads(json.dumps(serialize.song_to_dict(song)))) == song


def test_corpus_round_trip(tmp_path, corpus):
    path = tmp_path / "c.jsonl"
    serialize.write_corpus(path, corpus[:5])
    assert serialize.read_corpus(path) == corpus[:5]
    first = json.loads(path.read_text().splitlines()[0])
    assert first == {"format": "lyricmelody-corpus/1", "songs": 5}


def test_empty_corpus(tmp_path):
    path = tmp_path / "c.jsonl"
    serialize.write_corpus(path, [])
    assert serialize.read_corpus(path) == []


@pytest.mark.parametrize("text", ["", '{"format": "other"}\n',
                                  '{"format": "lyricmelody-corpus/1", "songs": 2}\n'])
def test_corpus_bad_header_or_count(tmp_path, text):
    path = tmp_path / "c.jsonl"
    path.write_text(text)
    with pytest.raises(ParseError):
        serialize.read_corpus(path)


def test_tokens(tmp_path, corpus):
    path = tmp_path / "t.txt"
    vocab = serialize.write_tokens(path, corpus[:3])
    records = serialize.read_tokens(path)
    assert len(records) == 3 and all(len(r) == 9 for song in records for r in song)
    again = Vocabulary.from_json(json.loads((tmp_path / "t.txt.vocab.json").read_text()))
    for song, recs in zip(corpus[:3], records):
        assert decode_song([again.decode(r) for r in recs]) == song
    assert again.text == vocab.text


def test_lexicon_round_trip(tmp_path, corpus, dictionary):
    lex = build_lexicon(corpus[:10], dictionary)
    paths = serialize.write_lexicon(tmp_path / "lex", lex)
    assert sorted(p.name for p in paths) == ["lex.smr.tsv", "lex.srr.tsv"]
    back = serialize.read_lexicon(tmp_path / "lex")
    assert back.smr.entries == lex.smr.entries and back.srr.entries == lex.srr.entries
    assert back.smr.candidates == lex.smr.candidates
    buf = io.StringIO()
    serialize.write_family_lexicon(buf, back.smr)
    assert buf.getvalue() == paths[0].read_text()


def test_lexicon_truncated(tmp_path, corpus, dictionary):
    lex = build_lexicon(corpus[:4], dictionary)
    path = serialize.write_lexicon(tmp_path / "lex", lex)[0]
    lines = path.read_text().splitlines()
    with pytest.raises(ParseError):
        serialize.parse_family_lexicon("\n".join(lines[:-1]))
    with pytest.raises(ParseError):
        serialize.parse_family_lexicon("pattern\tn\n")


def test_batches(tmp_path, corpus, dictionary):
    lex = build_lexicon(corpus[:6], dictionary)
    feats = [song_features(s, dictionary) for s in corpus[:6]]
    vocab = Vocabulary.from_songs(corpus[:6])
    path = tmp_path / "b.jsonl"
    counts = serialize.write_batches(path, make_batch(corpus[:6], feats, lex, PRETRAIN_OBJECTIVES, 1),
                                     vocab, 1, [o.value for o in PRETRAIN_OBJECTIVES], 768)
    header, records = serialize.read_batches(path)
    assert header["seed"] == 1 and header["max_len"] == 768
    assert counts["written"] + counts["skipped"] == len(records) == 24
    for rec in records:
        if "skipped" in rec:
            continue
        assert sum(rec["lengths"]) == len(rec["tokens"]) == len(rec["word_ids"])
        assert rec["seed"] == 1
    first = path.read_bytes()
    serialize.write_batches(path, make_batch(corpus[:6], feats, lex, PRETRAIN_OBJECTIVES, 1),
                            vocab, 1, [o.value for o in PRETRAIN_OBJECTIVES], 768)
    assert path.read_bytes() == first


def test_batch_header_checked(tmp_path):
    path = tmp_path / "b.jsonl"
    path.write_text('{"format": "nope"}\n')
    with pytest.raises(ParseError):
        serialize.read_batches(path)

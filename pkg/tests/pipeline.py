"""Run the full command-line pipeline into a directory, capturing every output."""

from __future__ import annotations

import contextlib
import io
from importlib import resources
from pathlib import Path

from lyricmelody.cli import main

TOY_MIDI = Path(str(resources.files("lyricmelody").joinpath("data/toy_midi")))


def run(argv) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def run_pipeline(workdir: Path, seed: int = 0, midi_dir: Path = TOY_MIDI) -> dict[str, bytes]:
    """ingest -> build-lexicon -> phrases -> make-batches (all objectives + clm) -> evaluate -> stats.

    Returns the bytes of every file written and of every command's stdout,
    keyed by a short name. Raises AssertionError if any command fails.
    """
    w = Path(workdir)
    steps = {
        "ingest": ["ingest", midi_dir, "-o", w / "corpus.jsonl", "--tokens", w / "tokens.txt"],
        "lexicon": ["build-lexicon", w / "corpus.jsonl", "-o", w / "lex"],
        "phrases": ["phrases", w / "corpus.jsonl", "-o", w / "phrases.jsonl"],
        "batches": ["make-batches", w / "corpus.jsonl", "--lexicon", w / "lex",
                    "--objective", "all", "-o", w / "batches.jsonl"],
        "clm": ["make-batches", w / "corpus.jsonl", "--objective", "clm", "-o", w / "clm.jsonl"],
        "evaluate": ["evaluate", w / "corpus.jsonl", w / "corpus.jsonl", "--json", w / "eval.json"],
        "stats": ["stats", w / "corpus.jsonl"],
    }
    outputs: dict[str, bytes] = {}
    for name, argv in steps.items():
        code, out, err = run(["--seed", seed, *argv])
        assert code == 0, f"{name} exited {code}: {err}"
        # paths echoed on stdout depend on the working directory
        outputs[f"{name}.stdout"] = out.replace(str(w), "<dir>").encode()
    for path in sorted(w.iterdir()):
        outputs[path.name] = path.read_bytes()
    return outputs

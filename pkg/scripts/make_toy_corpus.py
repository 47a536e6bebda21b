"""Write the bundled toy MIDI corpus (synthetic songs, rendered with mido).

Files cycle through three resolutions (480, 960 and 192 ticks per quarter)
so the parser's rescaling gets exercised.
"""

import argparse
from pathlib import Path

import numpy as np

from lyricmelody.dictionary import PronouncingDictionary
from lyricmelody.synth import SynthConfig, random_song, render_midi

PPQ_CYCLE = (480, 960, 192)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parents[1] / "src/lyricmelody/data/toy_midi")
    parser.add_argument("-n", type=int, default=50)
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    dictionary = PronouncingDictionary.bundled()
    rng = np.random.default_rng(args.seed)
    config = SynthConfig(min_words=24, max_words=60)
    for i in range(args.n):
        song = random_song(rng, dictionary, config)
        data = render_midi(song, ppq=PPQ_CYCLE[i % len(PPQ_CYCLE)])
        (args.out / f"toy_{i:03d}.mid").write_bytes(data)
    print(f"wrote {args.n} files to {args.out}")


if __name__ == "__main__":
    main()

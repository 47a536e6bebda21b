"""Write the small CMU-format dictionary bundled with the package.

Needs the ``cmudict`` distribution (dev dependency); the output is committed,
so this only has to be re-run when the word list changes.
"""

import argparse
from pathlib import Path

import cmudict

WORDS = """
a i me my we you he she it in on to of so no oh be by do go up us
the and you're don't can't i'm it's love heart night light day way time
dream dreams sky blue rain home away again alone along always never ever
forever tonight today tomorrow yesterday morning evening summer winter
river ocean mountain valley city highway window garden silver golden
fire water shadow moment memory memories story stories song songs sing
singing dance dancing hold holding fall falling feel feeling know knowing
believe remember forget together apart inside outside under over
beautiful wonderful everything nothing something someone somebody
nobody every little baby darling honey sweet slowly softly gently
open closing broken better hungry lonely happy simple yellow purple
morning shine shining bright brighter higher deeper colder warmer
whisper whispers thunder wonder wander follow hollow tender letter
promise believe answer question carry marry hurry worry sorry
have apple banana watermelon hello world la
running calling waiting moving turning burning flying crying trying
saying playing staying praying dreaming leaving breathing
believer dreamer lover stranger danger angel candle table paper
""".split()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parents[1] / "src/lyricmelody/data/toy_cmudict.txt")
    args = parser.parse_args()
    entries = cmudict.dict()
    lines = [";;; subset of the CMU Pronouncing Dictionary (BSD license), first pronunciation only"]
    for word in sorted(set(WORDS)):
        if word not in entries:
            raise SystemExit(f"{word!r} missing from cmudict")
        lines.append(f"{word.upper()}  {' '.join(entries[word][0])}")
    args.out.write_text("\n".join(lines) + "\n", encoding="latin-1")
    print(f"wrote {len(lines) - 1} entries to {args.out}")


if __name__ == "__main__":
    main()

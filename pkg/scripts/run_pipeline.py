#!/usr/bin/env python3
"""Run the full pipeline end to end on a fresh synthetic corpus.

Usage: python scripts/run_pipeline.py [workdir] [--seed N]
"""

import argparse
import sys
from pathlib import Path

from theftdetect import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("workdir", nargs="?", default="work")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    work = Path(args.workdir)
    corpus, models, out = work / "corpus", work / "models", work / "out"
    seed = str(args.seed)

    steps = [
        ["synth", "--data", str(corpus), "--seed", seed],
        ["ingest", "--data", str(corpus), "--out", str(models), "--seed", seed],
        ["train", "--data", str(corpus), "--out", str(models), "--seed", seed],
        ["evaluate", "--data", str(corpus), "--models", str(models), "--out", str(out), "--seed", seed],
        ["report", "--out", str(out), "--report", str(out / "report.json")],
    ]
    for step in steps:
        print(f"--- theftdetect {' '.join(step)}")
        code = cli.main(step)
        if code != 0:
            return code
    print(f"done; see {out / 'report.md'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

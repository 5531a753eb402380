#!/usr/bin/env python3
"""Dataset generation presets.

`--preset act4-paper` and `--preset kit4-paper` reproduce the documented
training-set sizes (4,096 and 15,360 pairs); `--preset kit4-desk` is a
2,048-pair set for desk-scale training runs; `--preset smoke` writes 8 pairs
for a quick look.  All presets are resumable: rerunning continues where the
previous run stopped and rewrites nothing.
"""

import argparse

from eitdbar.cli import main as cli_main

PRESETS = {
    "act4-paper": ["--style", "act4", "--count", "4096"],
    "kit4-paper": ["--style", "kit4", "--count", "15360"],
    "kit4-desk": ["--style", "kit4", "--count", "2048"],
    "smoke": ["--style", "kit4", "--count", "8"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", choices=sorted(PRESETS), required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    argv = ["generate-dataset", *PRESETS[args.preset], "--seed", str(args.seed),
            "--out", args.out, "--resume"]
    raise SystemExit(cli_main(argv))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Run every config under configs/ and write outputs to runs/<config name>/."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from levy_ssk.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help="config stems to run (default: all but smoke)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default=str(ROOT / "runs"))
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    configs = sorted((ROOT / "configs").glob("*.json"))
    if args.names:
        configs = [c for c in configs if c.stem in args.names]
    else:
        configs = [c for c in configs if c.stem != "smoke"]
    worst = 0
    for cfg in configs:
        print(f"== {cfg.stem}")
        argv = ["experiment", "--config", str(cfg), "--out", str(Path(args.out) / cfg.stem),
                "--threads", str(args.threads)]
        worst = max(worst, cli_main(argv + (["--plot"] if args.plot else [])))
    return worst


if __name__ == "__main__":
    sys.exit(main())

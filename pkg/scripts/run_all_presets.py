#!/usr/bin/env python3
"""Run every built-in preset and print a verdict table.

The bessel preset is expected to report a statistical failure at its pinned
window (the normalized sum keeps an atom at zero there); bessel-wide is the
same field at a window where the atom is negligible.

Usage: python3 scripts/run_all_presets.py [--out DIR] [--threads N] [--only NAME ...]
"""

import argparse
import sys
import time
from pathlib import Path

from fieldclt.cli import main as cli_main
from fieldclt.presets import preset_names


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="preset-runs", help="base output directory")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", nargs="*", default=None, help="subset of preset names")
    return ap.parse_args()


def main():
    args = parse_args()
    names = args.only if args.only else list(preset_names())
    base = Path(args.out)
    rows = []
    for name in names:
        out = base / name
        t0 = time.time()
        code = cli_main(
            ["run", "--preset", name, "--out", str(out), "--threads", str(args.threads)]
        )
        rows.append((name, code, time.time() - t0, out))
    print()
    print(f"{'preset':18s} {'exit':>4s} {'secs':>7s}  output")
    for name, code, secs, out in rows:
        print(f"{name:18s} {code:>4d} {secs:>7.1f}  {out}")
    usage_errors = [r for r in rows if r[1] == 1]
    return 1 if usage_errors else 0


if __name__ == "__main__":
    sys.exit(main())

"""Run every config in configs/ through the CLI and print one line per run.

    python scripts/run_all.py [--out results] [--reference] [--only spectrum,agmon]
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from btspheres.cli import load_config, run

ROOT = Path(__file__).resolve().parents[1]

# config file stem -> subcommand
SUBCOMMANDS = {
    "kernel_decay": "kernel-decay",
    "conjecture_scan": "conjecture-scan",
    "spectrum": "spectrum",
    "spectrum_one": "spectrum",
    "concentration": "concentration",
    "ground_state": "ground-state",
    "agmon": "agmon",
    "commutator": "commutator",
    "spin_weighted": "spin-weighted",
    "free_energy": "free-energy",
    "free_energy_zero": "free-energy",
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--reference", action="store_true")
    ap.add_argument("--only", default="", help="comma separated config stems")
    args = ap.parse_args()
    only = {s for s in args.only.split(",") if s}
    worst = 0
    for path in sorted((ROOT / "configs").iterdir()):
        stem = path.stem
        if stem not in SUBCOMMANDS or (only and stem not in only):
            continue
        t0 = time.perf_counter()
        code = run(SUBCOMMANDS[stem], load_config(path), Path(args.out) / stem, args.reference)
        print(f"{stem:18s} exit {code}  {time.perf_counter() - t0:7.1f} s")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())

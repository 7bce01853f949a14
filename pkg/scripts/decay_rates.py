"""Fitted Gaussian decay rates c = -log(norm)/(N D^2) of restricted
projectors for both cap-pair shapes, on one and two spheres.

    python scripts/decay_rates.py [configs/decay_rates.json]
"""
from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from btspheres.szego import conjecture_scan, scan_summary, write_scan_csv


@dataclass
class DecayStudy:
    Ns: list[int] = field(default_factory=lambda: [10, 20, 30, 40])
    ds: list[int] = field(default_factory=lambda: [1, 2])
    radius: float = 0.5
    Ds: list[float] = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])
    kinds: list[str] = field(default_factory=lambda: ["complement", "caps"])
    out: str = "results/decay_rates"


def main(argv: list[str]) -> int:
    cfg = DecayStudy(**json.loads(Path(argv[0]).read_text())) if argv else DecayStudy()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(asdict(cfg), indent=2))
    for kind in cfg.kinds:
        rows = conjecture_scan(cfg.Ns, cfg.ds, [(cfg.radius, D, kind) for D in cfg.Ds])
        write_scan_csv(rows, out / f"{kind}.csv", {"kind": kind})
        for d in cfg.ds:
            sub = [r for r in rows if r.d == d]
            print(f"{kind:10s} d={d}: min fitted c = {scan_summary(sub):.4f} over {len(sub)} rows")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

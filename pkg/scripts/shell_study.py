"""Husimi masses on the nested shells U_0 > U_1 > ... for x3 eigenstates.

At desk-scale N the natural shell count floor(eps/(6a)) is often below 2,
so the study passes an explicit shell count and records that it did.

    python scripts/shell_study.py [configs/shell_study.json]
"""
from __future__ import annotations

import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from btspheres.concentration import diagonalize, select_eigenpair, shell_count, shell_masses
from btspheres.quantization import HoloBasis
from btspheres.symbols import parse_symbol


@dataclass
class ShellStudy:
    symbol: str = "x3"
    Ns: list[int] = field(default_factory=lambda: [50, 100, 200])
    epsilons: list[float] = field(default_factory=lambda: [0.3, 0.4])
    alpha_reg: float = 1.0
    n_shells: int = 3
    which: str = "mid"
    out: str = "results/shell_study"


def main(argv: list[str]) -> int:
    cfg = ShellStudy(**json.loads(Path(argv[0]).read_text())) if argv else ShellStudy()
    f = parse_symbol(cfg.symbol, 1)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(asdict(cfg), indent=2))
    with open(out / "shells.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "epsilon", "width", "natural_count", "count", "override", "k", "mass"])
        for N in cfg.Ns:
            basis = HoloBasis(N)
            pair = select_eigenpair(diagonalize(basis, f), cfg.which)
            for eps in cfg.epsilons:
                natural = shell_count(N, eps, cfg.alpha_reg)
                rep = shell_masses(basis, f, pair, eps, cfg.alpha_reg, n_shells=None if natural >= 2 else cfg.n_shells)
                for k, m in enumerate(rep.masses):
                    w.writerow([N, eps, repr(rep.width), natural, rep.count, rep.override, k, repr(m)])
                print(f"N={N:4d} eps={eps:.2f} a={rep.width:.4f} shells={rep.count} (natural {natural}) "
                      f"first={rep.masses[0]:.3e} last={rep.masses[-1]:.3e} nonincreasing={rep.nonincreasing}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

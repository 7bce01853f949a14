"""Szego kernel modulus on (S^2)^d, closed-form decay bounds, and exact
norms of projectors restricted to pairs of regions.

All bounds are evaluated in log space, so 4^d / sqrt(2 pi d) does not
overflow for large d. Distances are in full-angle units.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import NORTH, CapProduct, Complement, Region, set_distance
from .quantization import BUDGET, BudgetError, HoloBasis, indicator_toeplitz
from .spectral import psd_sqrt


def kernel_modulus(N: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|S_N(x, y)| = ((N+1)/pi)^d prod_j cos(theta_j/2)^N for points (..., d, 3)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-2:] != y.shape[-2:]:
        raise ValueError("points live on different products")
    d = x.shape[-2]
    half = np.linalg.norm(x + y, axis=-1) / 2.0  # cos(theta/2), accurate near antipodes
    with np.errstate(divide="ignore"):
        logk = d * math.log((N + 1) / math.pi) + N * np.sum(np.log(np.clip(half, 0.0, None)), axis=-1)
    return np.exp(logk)


def cos_bound_margin(theta) -> np.ndarray:
    """exp(-theta^2/2) - cos(theta); nonnegative on [0, pi/2]."""
    t = np.asarray(theta, dtype=float)
    if np.any(t < 0) or np.any(t > np.pi / 2):
        raise ValueError("theta must lie in [0, pi/2]")
    return np.exp(-(t**2) / 2.0) - np.cos(t)


def log_schur_bound(N: int, d: int, D: float) -> float:
    return math.log(4.0) - 0.5 * math.log(2 * math.pi * d) + d * math.log(4.0) - (N + 1) * D**2 / 16.0


def schur_bound(N: int, d: int, D: float) -> float:
    """4/sqrt(2 pi d) 4^d exp(-(N+1) D^2/16)."""
    if N < 1 or d < 1:
        raise ValueError("need N >= 1 and d >= 1")
    log_b = log_schur_bound(N, d, D)
    return math.inf if log_b > 709.0 else math.exp(log_b)


def op_dec_gate(N: int, d: int, D: float) -> bool:
    return d >= 3 and D >= 10.0 * math.sqrt(d / (N + 1))


def op_dec_bound(N: int, d: int, D: float) -> float | None:
    """exp(-(N+1) D^2/21) when d >= 3 and D >= 10 sqrt(d/(N+1)), else None."""
    if not op_dec_gate(N, d, D):
        return None
    return math.exp(-(N + 1) * D**2 / 21.0)


@dataclass(frozen=True)
class DecayBoundReport:
    N: int
    d: int
    D: float
    schur_bound: float
    op_dec_bound: float | None
    exact_norm: float | None = None

    @property
    def op_dec_applicable(self) -> bool:
        return self.op_dec_bound is not None

    @property
    def schur_informative(self) -> bool:
        return self.schur_bound <= 1.0


def decay_report(N: int, d: int, D: float, exact_norm: float | None = None) -> DecayBoundReport:
    return DecayBoundReport(N, d, D, schur_bound(N, d, D), op_dec_bound(N, d, D), exact_norm)


def restricted_projector_norm(N: int, d: int, U: Region, V: Region, grid=None) -> float:
    """||1_U S_N 1_V|| computed exactly in the (N+1)^d dimensional space.

    The nonzero spectrum of 1_V S_N 1_U S_N 1_V coincides with that of
    T_N(1_U) T_N(1_V), so the norm is ||T_N(1_U)^{1/2} T_N(1_V)^{1/2}||.
    """
    if (N + 1) ** d > BUDGET:
        raise BudgetError(f"(N+1)^d = {(N + 1) ** d} exceeds the exact-norm budget {BUDGET}")
    basis = HoloBasis(N, d)
    TU, _ = indicator_toeplitz(basis, U, grid)
    TV, _ = indicator_toeplitz(basis, V, grid)
    A = psd_sqrt(TU) @ psd_sqrt(TV)
    s = np.linalg.svd(A, compute_uv=False)
    return float(np.clip(s[0], 0.0, 1.0))


def cap_pair(d: int, radius: float, D: float, kind: str = "complement") -> tuple[CapProduct, Region]:
    """Two regions at distance D around the north poles.

    ``complement``: U = caps of radius ``radius``, V = complement of the caps
    of radius ``radius + D`` (distance D reached by leaving on one sphere).
    ``caps``: V = caps of radius ``radius`` around the south poles with the
    per-sphere separation chosen so that the l2 distance is D.
    """
    axes = np.tile(NORTH, (d, 1))
    U = CapProduct(axes, np.full(d, radius))
    if kind == "complement":
        V = Complement(CapProduct(axes, np.full(d, radius + D)))
    elif kind == "caps":
        sep = D / math.sqrt(d)
        rv = math.pi - radius - sep
        if rv < 0:
            raise ValueError("separation too large for the chosen radius")
        V = CapProduct(-axes, np.full(d, rv))
    else:
        raise ValueError(f"unknown cap-pair kind {kind!r}")
    return U, V


@dataclass(frozen=True)
class ScanRow:
    N: int
    d: int
    D: float
    exact_norm: float
    schur_bound: float
    op_dec_bound: float | None
    fitted_c: float

    @property
    def op_dec_holds(self) -> bool | None:
        return None if self.op_dec_bound is None else self.exact_norm <= self.op_dec_bound


SCAN_HEADER = ["N", "d", "D", "exact_norm", "schur_bound", "op_dec_bound", "fitted_c"]


def conjecture_scan(
    Ns: Iterable[int],
    ds: Iterable[int],
    schedule: Sequence[tuple[float, float, str]] = ((0.5, 1.0, "complement"), (0.5, 2.0, "complement")),
) -> list[ScanRow]:
    """Exact norms over cap pairs; ``schedule`` holds (radius, D, kind).

    fitted_c = -log(norm) / (N D^2) is the rate in exp(-c N D^2).
    """
    rows = []
    for d in ds:
        for N in Ns:
            if (N + 1) ** d > BUDGET:
                raise BudgetError(f"(N+1)^d = {(N + 1) ** d} exceeds the exact-norm budget {BUDGET}")
            for radius, D, kind in schedule:
                U, V = cap_pair(d, radius, D, kind)
                D_true = set_distance(U, V)
                norm = restricted_projector_norm(N, d, U, V)
                c = -math.log(max(norm, 1e-300)) / (N * D_true**2) if D_true > 0 else float("nan")
                rows.append(ScanRow(N, d, D_true, norm, schur_bound(N, d, D_true), op_dec_bound(N, d, D_true), c))
    return rows


def scan_summary(rows: Sequence[ScanRow]) -> float:
    cs = [r.fitted_c for r in rows if np.isfinite(r.fitted_c)]
    return min(cs) if cs else float("nan")


def write_scan_csv(rows: Sequence[ScanRow], path: str | Path, extra: dict | None = None) -> None:
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCAN_HEADER + list(extra))
        for r in rows:
            rec = asdict(r)
            w.writerow([repr(rec[k]) if isinstance(rec[k], float) else ("" if rec[k] is None else rec[k]) for k in SCAN_HEADER] + list(extra.values()))

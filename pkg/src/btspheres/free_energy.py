"""Quantum and classical free energies of tame spin systems.

    f_Q = -1/(beta d) log Tr exp(-beta T_N(g))
    f_C = -1/(beta d) log[((N+1)/pi)^d int exp(-beta g)]

with each sphere of area pi, so both partition functions equal (N+1)^d at
beta = 0. The classical integral has two independent routes: a transfer
operator for chains and rings with isotropic kernels, and Monte Carlo.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import eval_legendre, logsumexp

from .geometry import sample_uniform
from .quantization import HoloBasis, toeplitz_matrix
from .spectral import eigvalsh
from .spin_systems import TameSpinSystem, spin_json

TRANSFER_NODES = 64
MC_BUDGET = 10_000_000


class UnsupportedIntegrator(ValueError):
    pass


# ---------------------------------------------------------------- quantum


@lru_cache(maxsize=16)
def _spectrum_cached(key: str, N: int) -> np.ndarray:
    g = TameSpinSystem.from_json(json.loads(key))
    basis = HoloBasis(N, g.d)
    return eigvalsh(toeplitz_matrix(basis, g.to_symbol()).matrix)


def quantum_spectrum(g: TameSpinSystem, N: int) -> np.ndarray:
    """Eigenvalues of T_N(g), cached per (system, N)."""
    return _spectrum_cached(spin_json(g), N)


def _log_mean_exp(a: np.ndarray) -> float:
    # exactly 0 for a == 0, which keeps the g = 0 gap exactly zero
    shift = float(a.max())
    return shift + math.log(float(np.mean(np.exp(a - shift))))


def log_mean_quantum(g: TameSpinSystem, N: int, beta: float) -> float:
    """log of Tr exp(-beta T_N(g)) / (N+1)^d."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return _log_mean_exp(-beta * quantum_spectrum(g, N))


def log_partition_quantum(g: TameSpinSystem, N: int, beta: float) -> float:
    return g.d * math.log(N + 1) + log_mean_quantum(g, N, beta)


def quantum_free_energy(g: TameSpinSystem, N: int, beta: float) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    return -log_partition_quantum(g, N, beta) / (beta * g.d)


# ---------------------------------------------------------------- classical


def _transfer_kernel(g: TameSpinSystem) -> float:
    topo = g.graph.topology
    if topo not in ("chain", "ring") or len(g.kernels) != 1:
        raise UnsupportedIntegrator(f"the transfer integrator needs a chain or ring, got {topo!r}")
    J = g.kernels[0].isotropic
    if J is None:
        raise UnsupportedIntegrator("the transfer integrator needs an isotropic kernel w = J x.y")
    return J


def transfer_eigenvalues(J: float, beta: float, n: int = TRANSFER_NODES, l_max: int | None = None) -> np.ndarray:
    """Eigenvalues of (K h)(x) = int exp(-beta J x.y) h(y) dmu(y) on the
    degree-l harmonics (Funk-Hecke): (pi/2) int_{-1}^{1} K(t) P_l(t) dt,
    by n-point Gauss-Legendre."""
    l_max = n // 2 if l_max is None else l_max
    t, w = np.polynomial.legendre.leggauss(n)
    K = np.exp(-beta * J * t)
    ls = np.arange(l_max + 1)
    P = eval_legendre(ls[:, None], t[None, :])
    return 0.5 * math.pi * (P * (K * w)).sum(axis=1)


def log_partition_transfer(g: TameSpinSystem, beta: float, n: int = TRANSFER_NODES) -> float:
    """log int exp(-beta g) over (S^2)^d (area pi per sphere)."""
    J = _transfer_kernel(g)
    L = g.graph.n_sites
    lam = transfer_eigenvalues(J, beta, n)
    if g.graph.topology == "chain":
        return math.log(math.pi) + (L - 1) * math.log(lam[0])
    ls = np.arange(len(lam))
    # lambda_l alternates in sign for J > 0; the trace is a signed sum
    terms = (2 * ls + 1) * np.sign(lam) ** L * np.exp(L * np.log(np.abs(np.where(lam == 0, 1e-300, lam))))
    return math.log(float(np.sum(terms)))


@dataclass(frozen=True)
class ClassicalEstimate:
    log_mean: float  # log of the average of exp(-beta g) over (S^2)^d
    stderr: float  # standard error of log_mean
    method: str
    d_log_pi: float = 0.0

    @property
    def log_integral(self) -> float:
        """log int exp(-beta g) for the area-pi measure."""
        return self.log_mean + self.d_log_pi


def classical_integral(
    g: TameSpinSystem, beta: float, integrator: str = "transfer", samples: int = 1_000_000, seed: int = 0, n: int = TRANSFER_NODES
) -> ClassicalEstimate:
    dlp = g.d * math.log(math.pi)
    if all(not np.any(k.A) for k in g.kernels) or beta == 0:
        return ClassicalEstimate(0.0, 0.0, "exact(constant)", dlp)
    if integrator == "transfer":
        return ClassicalEstimate(log_partition_transfer(g, beta, n) - dlp, 0.0, f"transfer(n={n})", dlp)
    if integrator == "mc":
        if samples > MC_BUDGET:
            raise ValueError(f"Monte Carlo budget {samples} exceeds {MC_BUDGET}")
        rng = np.random.default_rng(seed)
        chunk = 200_000
        vals_all = []
        for lo in range(0, samples, chunk):
            m = min(chunk, samples - lo)
            vals_all.append(-beta * g(sample_uniform(g.d, m, rng)))
        e = np.concatenate(vals_all)
        shift = float(e.max())
        v = np.exp(e - shift)
        mean = float(v.mean())
        se = float(v.std(ddof=1) / math.sqrt(len(v)))
        return ClassicalEstimate(shift + math.log(mean), se / mean, f"mc(m={samples},seed={seed})", dlp)
    raise ValueError(f"unknown integrator {integrator!r}")


def log_partition_classical(g: TameSpinSystem, N: int, beta: float, **kw) -> tuple[float, float]:
    est = classical_integral(g, beta, **kw)
    return g.d * math.log(N + 1) + est.log_mean, est.stderr


def classical_free_energy(g: TameSpinSystem, N: int, beta: float, integrator: str = "transfer", **kw) -> tuple[float, float]:
    """(f_C, error estimate)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    logZ, err = log_partition_classical(g, N, beta, integrator=integrator, **kw)
    return -logZ / (beta * g.d), err / (beta * g.d)


def transfer_self_convergence(g: TameSpinSystem, N: int, beta: float, n: int = TRANSFER_NODES) -> float:
    """|f_C(2n) - f_C(n)| for the transfer integrator."""
    a, _ = classical_free_energy(g, N, beta, "transfer", n=n)
    b, _ = classical_free_energy(g, N, beta, "transfer", n=2 * n)
    return abs(a - b)


# ---------------------------------------------------------------- sweeps


def lieb_multiplier(N: int, d: int, C_ord: int = 1) -> float:
    """log of ((N + 1 + 2C)/(N + 1))^d."""
    return d * math.log((N + 1 + 2 * C_ord) / (N + 1))


@dataclass(frozen=True)
class FreeEnergyRow:
    N: int
    d: int
    beta: float
    b: float
    f_Q: float
    f_C: float
    gap: float
    gap_sqrtN: float
    classical_method: str
    classical_err: float
    lieb_bound: float
    log_ratio: float
    fitted_Cprime: float
    in_regime: bool = True

    @property
    def lieb_holds(self) -> bool:
        return self.log_ratio <= self.lieb_bound


CSV_HEADER = ["N", "d", "beta", "b", "f_Q", "f_C", "gap", "gap_sqrtN", "classical_err", "lieb_bound", "fitted_Cprime"]


def free_energy_row(
    g: TameSpinSystem, N: int, b: float, integrator: str = "transfer", C_ord: int = 1, b_max: float = 1.0, **kw
) -> FreeEnergyRow:
    d = g.d
    beta = b * math.sqrt(N) / d
    est = classical_integral(g, beta, integrator, **kw)
    lmq = log_mean_quantum(g, N, beta)
    base = d * math.log(N + 1)
    fQ = -(base + lmq) / (beta * d)
    fC = -(base + est.log_mean) / (beta * d)
    err = est.stderr / (beta * d)
    log_ratio = abs(lmq - est.log_mean)  # |log Z_Q - log Z_C|
    gap = log_ratio / (beta * d)
    Cp = log_ratio / (beta * d / math.sqrt(N))
    return FreeEnergyRow(
        N, d, beta, b, fQ, fC, gap, gap * math.sqrt(N), integrator, err, lieb_multiplier(N, d, C_ord), log_ratio, Cp, b <= b_max
    )


def free_energy_sweep(
    g: TameSpinSystem, Ns: Sequence[int], b: float = 0.5, integrator: str = "transfer", **kw
) -> list[FreeEnergyRow]:
    """Rows at beta = b sqrt(N)/d along an N-sweep."""
    return [free_energy_row(g, N, b, integrator, **kw) for N in Ns]


@dataclass(frozen=True)
class LiebComparison:
    lieb_multiplier: float
    fitted_multiplier: float  # fitted C' in exp(C' beta d N^(-1/2))
    actual: float  # |log Z_Q - log Z_C|

    @property
    def holds(self) -> bool:
        return self.actual <= self.lieb_multiplier


def lieb_comparison(g: TameSpinSystem, N: int, beta: float, C_ord: int = 1, integrator: str = "transfer") -> LiebComparison:
    actual = abs(log_mean_quantum(g, N, beta) - classical_integral(g, beta, integrator).log_mean)
    fitted = actual / (beta * g.d / math.sqrt(N)) if beta > 0 else 0.0
    return LiebComparison(lieb_multiplier(N, g.d, C_ord), fitted, actual)


def write_rows_csv(rows: Sequence[FreeEnergyRow], path: str | Path, extra: dict | None = None) -> None:
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER + list(extra))
        for r in rows:
            rec = asdict(r)
            w.writerow([repr(rec[k]) if isinstance(rec[k], float) else rec[k] for k in CSV_HEADER] + list(extra.values()))

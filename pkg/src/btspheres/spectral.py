"""Dense Hermitian eigendecomposition, operator norms and spectral sums.

``eigh`` delegates the factorization to LAPACK (via numpy) and adds the
checks the rest of the package relies on: Hermiticity rejection, residuals,
and a reproducible eigenvector basis inside degenerate clusters.
``jacobi_eigh`` is an independent cyclic Jacobi solver, used as a
cross-check on small matrices.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, orthonormal
    residuals: np.ndarray  # ||H v - lam v|| per column

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.dim else 0.0

    def pair(self, i: int) -> "EigenPair":
        return EigenPair(float(self.eigenvalues[i]), self.eigenvectors[:, i], float(self.residuals[i]))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue", "residual"])
            for i, (lam, res) in enumerate(zip(self.eigenvalues, self.residuals)):
                w.writerow([i, repr(float(lam)), repr(float(res))])


@dataclass(frozen=True)
class EigenPair:
    eigenvalue: float
    vector: np.ndarray
    residual: float = 0.0


def _check_hermitian(H: np.ndarray, tol: float) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    skew = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if skew > tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian: max |H - H*| = {skew:.3e}")
    H = 0.5 * (H + H.conj().T)
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real
    return H


def _canonical_cluster(V: np.ndarray) -> np.ndarray:
    """Reproducible orthonormal basis of span(V): pivots are picked greedily
    in basis order, the pivot block is inverted, then Gram-Schmidt."""
    n, m = V.shape
    if m == 1:
        v = V[:, 0]
        i = int(np.argmax(np.abs(v) > 1e-8 * np.max(np.abs(v))))
        return (V * (np.abs(v[i]) / v[i]))
    if m == n:
        return np.eye(n, dtype=V.dtype)
    basis = np.zeros((m, m), dtype=V.dtype)
    pivots = []
    for i in range(n):
        r = V[i].conj().copy()
        if pivots:
            B = basis[: len(pivots)]
            r = r - B.T @ (B.conj() @ r)
        nr = np.linalg.norm(r)
        if nr > 0.5 * np.linalg.norm(V[i]) and nr > 1e-6:
            basis[len(pivots)] = r / nr
            pivots.append(i)
            if len(pivots) == m:
                break
    if len(pivots) < m:
        return V
    W = V @ np.linalg.inv(V[pivots])
    Q, R = np.linalg.qr(W)
    phase = np.diag(R) / np.abs(np.diag(R))
    return Q * phase


def eigh(H: np.ndarray, tol: float = 1e-10, cluster_tol: float = 1e-9, canonical: bool = True) -> Spectrum:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    H = _check_hermitian(H, tol)
    lam, V = np.linalg.eigh(H)
    if canonical and len(lam) > 1:
        scale = max(1.0, float(np.max(np.abs(lam))))
        gaps = np.flatnonzero(np.diff(lam) > cluster_tol * scale) + 1
        bounds = np.concatenate([[0], gaps, [len(lam)]])
        V = V.copy()
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi - lo > 1:
                V[:, lo:hi] = _canonical_cluster(V[:, lo:hi])
    res = np.linalg.norm(H @ V - V * lam, axis=0)
    return Spectrum(lam, V, res)


def eigvalsh(H: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    return np.linalg.eigvalsh(_check_hermitian(H, tol))


def jacobi_eigh(H: np.ndarray, tol: float = 1e-12, max_sweeps: int = 30) -> Spectrum:
    """Cyclic Jacobi eigensolver for Hermitian matrices.

    Each rotation first removes the phase of the pivot element, then applies
    the real symmetric Jacobi rotation. Sweeps stop once the off-diagonal
    Frobenius mass is below ``tol * ||H||_F``.
    """
    A = np.array(_check_hermitian(H, 1e-10), dtype=complex)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    fro = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * max(fro, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                ph = apq / abs(apq)
                app, aqq = A[p, p].real, A[q, q].real
                tau = (aqq - app) / (2 * abs(apq))
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1 / np.sqrt(1 + t * t)
                s = t * c
                # columns p, q  <-  [c, s*ph; -s*conj(ph), c] applied from the right
                G = np.array([[c, s * ph], [-s * np.conj(ph), c]])
                A[:, [p, q]] = A[:, [p, q]] @ G
                A[[p, q], :] = G.conj().T @ A[[p, q], :]
                V[:, [p, q]] = V[:, [p, q]] @ G
                A[p, q] = A[q, p] = 0.0
    lam = np.diag(A).real
    order = np.argsort(lam, kind="stable")
    lam, V = lam[order], V[:, order]
    Hs = np.asarray(H)
    res = np.linalg.norm(Hs @ V - V * lam, axis=0)
    return Spectrum(lam, V, res)


def op_norm(A: np.ndarray) -> float:
    """Largest singular value, via the spectrum of A* A."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    G = A.conj().T @ A
    top = float(np.linalg.eigvalsh(0.5 * (G + G.conj().T))[-1])
    return float(np.sqrt(max(top, 0.0)))


def psd_sqrt(H: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    return (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.conj().T


def _eigenvalues_of(H) -> np.ndarray:
    if isinstance(H, Spectrum):
        return H.eigenvalues
    H = np.asarray(H)
    if H.ndim == 1:
        return H.astype(float)
    return eigvalsh(H)


def log_trace_exp(H, beta: float) -> float:
    """log Tr exp(-beta H), computed with a max shift."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    lam = _eigenvalues_of(H)
    return float(logsumexp(-beta * lam))


def trace_exp(H, beta: float) -> float:
    """Tr exp(-beta H) for a Hermitian matrix, a Spectrum, or an eigenvalue array."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    e = -beta * _eigenvalues_of(H)
    shift = float(e.max()) if e.size else 0.0
    return float(np.exp(shift) * np.sum(np.exp(e - shift)))

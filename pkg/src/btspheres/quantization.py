"""Holomorphic sections of L^N over (S^2)^d in the monomial basis.

Orthonormal basis functions on one sphere, written through the pointwise
norm of the section (so no stereographic chart ever appears):

    psi_k(x) = sqrt((N+1)/pi * binom(N, k)) cos(theta/2)^(N-k) sin(theta/2)^k e^{i k phi}

for k = 0..N. On (S^2)^d the basis is the tensor product, ordered as
``np.kron`` orders it (first sphere slowest). In the monomial chart this is
z^k divided by its norm sqrt(pi k!(N-k)!/(N+1)!).

Toeplitz matrices are ``T_jk = int conj(psi_j) psi_k f``. Husimi densities
are ``|sum_k u_k psi_k(x)|^2``, which integrate to ||u||^2.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.linalg import expm
from scipy.special import betainc, gammaln, xlogy

from .geometry import (
    NORTH,
    CapProduct,
    Complement,
    QuadratureGrid,
    Region,
    WholeSpace,
    gauss_grid,
    sample_uniform,
    sphere_rule,
)
from .spectral import EigenPair, psd_sqrt
from .symbols import Symbol, SphereFactor, coordinate

BUDGET = 20_000


class GridTooCoarseError(ValueError):
    pass


class BudgetError(ValueError):
    pass


@dataclass(frozen=True)
class HoloBasis:
    N: int
    d: int = 1

    def __post_init__(self):
        if self.N < 0 or self.d < 1:
            raise ValueError("need N >= 0 and d >= 1")
        if self.dim > BUDGET:
            raise BudgetError(f"(N+1)^d = {self.dim} exceeds the dense budget {BUDGET}")

    @property
    def dim(self) -> int:
        return (self.N + 1) ** self.d

    @property
    def multi_indices(self) -> np.ndarray:
        return np.indices((self.N + 1,) * self.d).reshape(self.d, -1).T

    @property
    def squared_norms(self) -> np.ndarray:
        """||z^k||^2 in the area-pi convention, tensored over spheres."""
        N = self.N
        k = np.arange(N + 1)
        one = np.pi * np.exp(gammaln(k + 1) + gammaln(N - k + 1) - gammaln(N + 2))
        out = one
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, one).ravel()
        return out

    @property
    def peak(self) -> float:
        """Diagonal of the reproducing kernel, ((N+1)/pi)^d."""
        return ((self.N + 1) / np.pi) ** self.d


# ---------------------------------------------------------------- per sphere


def sphere_psi(N: int, v: np.ndarray) -> np.ndarray:
    """Basis functions at unit vectors ``v`` of shape (m, 3) -> (m, N+1)."""
    v = np.asarray(v, dtype=float)
    k = np.arange(N + 1)
    c = np.sqrt(np.clip((1.0 + v[..., 2]) / 2.0, 0.0, 1.0))
    s = np.sqrt(np.clip((1.0 - v[..., 2]) / 2.0, 0.0, 1.0))
    logc = 0.5 * (np.log((N + 1) / np.pi) + gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1))
    logmod = logc + xlogy((N - k), c[..., None]) + xlogy(k, s[..., None])
    phi = np.arctan2(v[..., 1], v[..., 0])
    return np.exp(logmod) * np.exp(1j * phi[..., None] * k)


def sphere_coherent(N: int, v: np.ndarray) -> np.ndarray:
    """Unit coherent vectors at ``v`` (m, 3) -> (m, N+1)."""
    return np.conj(sphere_psi(N, v)) * np.sqrt(np.pi / (N + 1))


def _snap(M: np.ndarray, rel: float = 1e-14) -> np.ndarray:
    """Zero real/imaginary parts that are pure roundoff."""
    scale = max(float(np.max(np.abs(M))), 1e-300)
    re = np.where(np.abs(M.real) < rel * scale, 0.0, M.real)
    im = np.where(np.abs(M.imag) < rel * scale, 0.0, M.imag)
    return re + 1j * im


def sphere_toeplitz(N: int, factor: SphereFactor, n: int | None = None, rule=None) -> np.ndarray:
    """(N+1) x (N+1) Toeplitz matrix of a single-sphere function."""
    if rule is None:
        if n is None:
            if factor.degree is None:
                raise ValueError(f"non-polynomial factor {factor.label!r} needs an explicit rule")
            n = N + factor.degree + 2
        rule = sphere_rule(n)
    psi = sphere_psi(N, rule.points)
    vals = factor(rule.points) * rule.weights
    T = (psi.conj().T * vals) @ psi
    T = 0.5 * (T + T.conj().T)
    return _snap(T) if factor.degree is not None else T


@lru_cache(maxsize=64)
def spin_matrices(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """S_c = (N+2)/2 T_N(x_c): spin-N/2 matrices in the monomial basis.

    In this basis they satisfy [S_x, S_y] = -i S_z.
    """
    return tuple((N + 2) / 2.0 * sphere_toeplitz(N, coordinate(c)) for c in range(3))


def rotation_unitary(N: int, axis: np.ndarray, omega: float) -> np.ndarray:
    """Unitary U with U T_N(f) U* = T_N(f o R^{-1}), R the rotation by
    ``omega`` about ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    S = spin_matrices(N)
    gen = axis[0] * S[0] + axis[1] * S[1] + axis[2] * S[2]
    return expm(1j * omega * gen)


def _rotation_to(p: np.ndarray) -> tuple[np.ndarray, float]:
    p = np.asarray(p, dtype=float) / np.linalg.norm(p)
    ax = np.cross(NORTH, p)
    s = np.linalg.norm(ax)
    omega = float(np.arctan2(s, p[2]))
    if s < 1e-15:
        return np.array([1.0, 0.0, 0.0]), omega
    return ax / s, omega


def cap_toeplitz(N: int, axis: np.ndarray, radius: float) -> np.ndarray:
    """Exact Toeplitz matrix of the indicator of a cap on one sphere.

    Around the north pole it is diagonal with regularized incomplete beta
    entries; other axes are reached by the spin rotation.
    """
    k = np.arange(N + 1)
    t = np.sin(min(float(radius), np.pi) / 2.0) ** 2
    D = np.diag(betainc(k + 1, N - k + 1, t)).astype(complex)
    rot_axis, omega = _rotation_to(axis)
    if omega < 1e-15:
        return D
    if np.pi - omega < 1e-15:
        # antipodal axis: theta -> pi - theta swaps k and N - k, no rotation roundoff
        return np.diag(betainc(N - k + 1, k + 1, t)).astype(complex)
    U = rotation_unitary(N, rot_axis, omega)
    T = U @ D @ U.conj().T
    return 0.5 * (T + T.conj().T)


# ---------------------------------------------------------------- Toeplitz


@dataclass(frozen=True)
class ToeplitzMatrix:
    N: int
    d: int
    matrix: np.ndarray
    label: str = "f"
    convention: str = "area-pi, full-angle distances, monomial ONB"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def save(self, path: str | Path) -> None:
        """Row-major little-endian float64 (re, im) pairs plus JSON metadata."""
        path = Path(path)
        M = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        M.astype("<c16").tofile(path.with_suffix(".bin"))
        meta = {"N": self.N, "d": self.d, "dim": self.dim, "label": self.label, "convention": self.convention,
                "layout": "row-major little-endian float64 pairs (re, im)"}
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "ToeplitzMatrix":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        n = meta["dim"]
        M = np.fromfile(path.with_suffix(".bin"), dtype="<c16").reshape(n, n)
        return cls(meta["N"], meta["d"], M, meta["label"], meta["convention"])


def kron_all(mats: list[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _full_psi(N: int, points: np.ndarray) -> np.ndarray:
    """Tensor-product basis values at points (m, d, 3) -> (m, (N+1)^d)."""
    m, d, _ = points.shape
    out = sphere_psi(N, points[:, 0])
    for j in range(1, d):
        pj = sphere_psi(N, points[:, j])
        out = (out[:, :, None] * pj[:, None, :]).reshape(m, -1)
    return out


def _quadrature_toeplitz(basis: HoloBasis, func, grid: QuadratureGrid, chunk: int = 20_000) -> np.ndarray:
    pts, w = grid.points, grid.weights
    T = np.zeros((basis.dim, basis.dim), dtype=complex)
    for lo in range(0, len(w), chunk):
        p = pts[lo : lo + chunk]
        psi = _full_psi(basis.N, p)
        vals = np.asarray(func(p), dtype=float) * w[lo : lo + chunk]
        T += (psi.conj().T * vals) @ psi
    return T


def toeplitz_matrix(basis: HoloBasis, f: Symbol, grid: QuadratureGrid | None = None, exact: bool = True) -> ToeplitzMatrix:
    """Toeplitz matrix of a real symbol by quadrature.

    Separable terms are assembled as Kronecker products of single-sphere
    matrices; general terms use full quadrature on ``grid``. For polynomial
    symbols of per-sphere degree p, a grid with n >= N + p + 2 nodes makes
    every entry exact, and a coarser grid is refused when ``exact`` is set.
    """
    if f.d != basis.d:
        raise ValueError(f"symbol lives on d={f.d}, basis on d={basis.d}")
    N, d = basis.N, basis.d
    p = f.degree
    if grid is None:
        if p is None:
            raise ValueError(f"symbol {f.label!r} is not polynomial; pass an explicit grid")
        n = N + p + 2
        grid_rule = sphere_rule(n)
    else:
        if exact and p is not None and grid.n < N + p + 2:
            raise GridTooCoarseError(
                f"grid with n={grid.n} cannot integrate degree {p} symbols exactly at N={N}; need n >= {N + p + 2}"
            )
        n = grid.n
        grid_rule = grid.rule
    eye = np.eye(N + 1, dtype=complex)
    T = np.zeros((basis.dim, basis.dim), dtype=complex)
    cache: dict[int, np.ndarray] = {}
    for coef, factors in f.terms:
        if coef == 0.0:
            continue
        mats = []
        for j in range(d):
            fac = factors.get(j)
            if fac is None:
                mats.append(eye)
                continue
            key = id(fac)
            if key not in cache:
                cache[key] = sphere_toeplitz(N, fac, rule=grid_rule)
            mats.append(cache[key])
        T += coef * kron_all(mats)
    if f.extra:
        full = grid if grid is not None else QuadratureGrid(d, n, grid_rule)
        for func, _ in f.extra:
            T += _quadrature_toeplitz(basis, func, full)
    T = 0.5 * (T + T.conj().T)
    return ToeplitzMatrix(N, d, T, f.label)


def indicator_toeplitz(
    basis: HoloBasis, region: Region, grid: QuadratureGrid | None = None, tol: float = 1e-6
) -> tuple[np.ndarray, float]:
    """Toeplitz matrix of an indicator and an error estimate.

    Cap products, their complements and the whole space are exact (error 0).
    Other regions use quadrature on ``grid`` and on a grid 1.5x finer; their
    difference is the error estimate, with a warning above ``tol``.
    """
    N, d = basis.N, basis.d
    if region.d != d:
        raise ValueError("region and basis live on different products")
    if isinstance(region, WholeSpace):
        return np.eye(basis.dim, dtype=complex), 0.0
    if isinstance(region, CapProduct):
        return kron_all([cap_toeplitz(N, region.axes[j], region.radii[j]) for j in range(d)]), 0.0
    if isinstance(region, Complement) and isinstance(region.base, (CapProduct, WholeSpace)):
        inner, _ = indicator_toeplitz(basis, region.base)
        return np.eye(basis.dim, dtype=complex) - inner, 0.0
    n = grid.n if grid is not None else max(2 * N + 4, 32)
    func = lambda x: region.indicator(x).astype(float)
    coarse = _quadrature_toeplitz(basis, func, grid if grid is not None else gauss_grid(d, n))
    fine = _quadrature_toeplitz(basis, func, gauss_grid(d, int(np.ceil(1.5 * n))))
    err = float(np.max(np.abs(fine - coarse)))
    if err > tol:
        warnings.warn(
            f"indicator quadrature for {region.label} not converged: estimated entry error {err:.2e}",
            RuntimeWarning,
            stacklevel=2,
        )
    fine = 0.5 * (fine + fine.conj().T)
    return fine, err


# ---------------------------------------------------------------- states


def coherent_state(basis: HoloBasis, x: np.ndarray) -> np.ndarray:
    """Unit coherent vector at a product point ``x`` of shape (d, 3)."""
    x = np.asarray(x, dtype=float).reshape(basis.d, 3)
    return kron_all([sphere_coherent(basis.N, x[j][None])[0] for j in range(basis.d)])


def amplitude(basis: HoloBasis, u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """sum_k u_k psi_k(x) at points (m, d, 3); ``u`` may carry a trailing
    column axis."""
    x = np.asarray(x, dtype=float).reshape(-1, basis.d, 3)
    u = np.asarray(u)
    cols = u.shape[1:]
    A = u.reshape((basis.N + 1,) * basis.d + cols)
    psi0 = sphere_psi(basis.N, x[:, 0])
    out = np.tensordot(psi0, A, axes=([1], [0]))  # (m, N+1, ..., cols)
    for j in range(1, basis.d):
        pj = sphere_psi(basis.N, x[:, j])
        out = np.einsum("mk,mk...->m...", pj, out)
    return out


def amplitude_on_grid(basis: HoloBasis, u: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """Amplitudes on every grid point, using the tensor structure."""
    psi = sphere_psi(basis.N, grid.rule.points)  # (s, N+1)
    u = np.asarray(u)
    cols = u.shape[1:]
    out = u.reshape((basis.N + 1,) * basis.d + cols)
    for j in range(basis.d):
        # contract axis j (a basis axis) and put the grid axis in its place
        out = np.moveaxis(np.tensordot(psi, out, axes=([1], [j])), 0, j)
    return out.reshape((grid.size,) + cols)


def husimi(basis: HoloBasis, u, x: np.ndarray) -> np.ndarray:
    """((N+1)/pi)^d |<Phi_x, u>|^2 at points x (..., d, 3)."""
    vec = u.vector if isinstance(u, EigenPair) else np.asarray(u)
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-2]
    return (np.abs(amplitude(basis, vec, x)) ** 2).reshape(shape + vec.shape[1:])


def husimi_on_grid(basis: HoloBasis, u, grid: QuadratureGrid, chunk: int = 20_000) -> np.ndarray:
    vec = u.vector if isinstance(u, EigenPair) else np.asarray(u)
    if basis.d > 1:
        return np.abs(amplitude_on_grid(basis, vec, grid)) ** 2
    pts = grid.rule.points
    out = np.empty((len(pts),) + vec.shape[1:])
    for lo in range(0, len(pts), chunk):
        out[lo : lo + chunk] = np.abs(sphere_psi(basis.N, pts[lo : lo + chunk]) @ vec) ** 2
    return out


def berezin_transform(basis: HoloBasis, f, x: np.ndarray) -> float:
    """<Phi_x, T_N(f) Phi_x>; ``f`` is a Symbol or a ToeplitzMatrix."""
    T = f if isinstance(f, ToeplitzMatrix) else toeplitz_matrix(basis, f)
    phi = coherent_state(basis, x)
    return float(np.real(phi.conj() @ T.matrix @ phi))


# ---------------------------------------------------------------- masses


@dataclass(frozen=True)
class MassEstimate:
    value: float
    stderr: float
    method: str
    flagged: bool = False


def default_mass_grid(basis: HoloBasis) -> QuadratureGrid:
    return gauss_grid(basis.d, max(2 * basis.N + 2, 48))


def region_mass(
    basis: HoloBasis,
    u,
    W: Region,
    grid: QuadratureGrid | None = None,
    samples: int = 100_000,
    seed: int = 0,
    tol: float = 1e-2,
) -> MassEstimate:
    """Husimi mass of ``u`` on ``W``: quadrature for d <= 2, Monte Carlo
    (uniform sampling, standard error reported) for d >= 3."""
    if basis.d <= 2 or grid is not None:
        grid = grid or default_mass_grid(basis)
        h = husimi_on_grid(basis, u, grid)
        ind = W.indicator(grid.points)
        return MassEstimate(float(np.dot(grid.weights, h * ind)), 0.0, f"quadrature(n={grid.n})")
    x = sample_uniform(basis.d, samples, seed)
    vals = husimi(basis, u, x) * W.indicator(x) * np.pi**basis.d
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(len(vals)))
    flagged = se > tol
    if flagged:
        warnings.warn(f"Monte Carlo mass standard error {se:.2e} above tolerance {tol:.2e}", RuntimeWarning, stacklevel=2)
    return MassEstimate(mean, se, f"monte-carlo(m={samples})", flagged)


# ---------------------------------------------------------------- sampling


def _sample_sphere_from_states(N: int, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One point per sample from the normalized Husimi density of the mixed
    state sum_r v_r v_r^*; ``states`` has shape (m, N+1, r). Exact rejection
    sampling against the uniform proposal."""
    m = states.shape[0]
    norm2 = np.sum(np.abs(states) ** 2, axis=(1, 2))
    out = np.empty((m, 3))
    pending = np.arange(m)
    while len(pending):
        prop = sample_uniform(1, len(pending), rng)[:, 0]
        c = sphere_coherent(N, prop)  # (p, N+1)
        overlap = np.einsum("pk,pkr->pr", c.conj(), states[pending])
        q = np.sum(np.abs(overlap) ** 2, axis=1) / norm2[pending]
        acc = rng.uniform(size=len(pending)) < q
        out[pending[acc]] = prop[acc]
        pending = pending[~acc]
    return out


def sample_husimi(basis: HoloBasis, u, m: int, seed: int | np.random.Generator = 0) -> np.ndarray:
    """Exact i.i.d. samples (m, d, 3) from the Husimi density of a unit vector.

    Spheres are drawn one at a time: the marginal of sphere j given the
    earlier ones is the Husimi density of the conditional reduced state.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    vec = u.vector if isinstance(u, EigenPair) else np.asarray(u)
    N, d = basis.N, basis.d
    n1 = N + 1
    # state[i] has shape (n1, rest) for the remaining spheres
    state = np.broadcast_to(vec.reshape(1, n1, -1), (m, n1, n1 ** (d - 1)))
    out = np.empty((m, d, 3))
    for j in range(d):
        out[:, j] = _sample_sphere_from_states(N, state, rng)
        if j < d - 1:
            c = sphere_coherent(N, out[:, j])
            cond = np.einsum("mk,mkr->mr", c.conj(), state)
            state = cond.reshape(m, n1, -1)
    return out


def restricted_norm_from_matrices(TU: np.ndarray, TV: np.ndarray) -> float:
    """sqrt of the spectral radius of T_U T_V for positive semidefinite
    Toeplitz matrices, i.e. ||T_U^{1/2} T_V^{1/2}||."""
    A = psd_sqrt(TU) @ psd_sqrt(TV)
    s = np.linalg.svd(A, compute_uv=False)
    return float(min(max(s[0], 0.0), 1.0)) if len(s) else 0.0

"""Localization of Toeplitz eigenfunctions: masses far from level sets,
shell decompositions, Agmon weighted integrals and weighted commutators.

The theorems behind these checks carry unspecified constants, so the
harness fits decay rates over N-sweeps and reports whether they are
positive or bounded, never a specific value.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    NORTH,
    CapProduct,
    Complement,
    DistanceResolver,
    QuadratureGrid,
    Region,
    SubLevel,
    SuperLevel,
    WholeSpace,
    diameter,
    far_from,
    gauss_grid,
    region_distance,
    sphere_rule,
)
from .quantization import HoloBasis, husimi, husimi_on_grid, sphere_psi, toeplitz_matrix
from .spectral import EigenPair, Spectrum, eigh
from .symbols import Symbol

MASS_FLOOR = 1e-300
ALPHA_CAP = 0.25


# ---------------------------------------------------------------- helpers


def mass_grid(basis: HoloBasis, n: int | None = None) -> QuadratureGrid:
    """Default grid for Husimi integrals: exact for polynomial weights of
    per-sphere degree <= 2 and fine enough to resolve indicator edges."""
    if n is None:
        n = max(2 * basis.N + 4, 64) if basis.d == 1 else basis.N + 4
    return gauss_grid(basis.d, n)


def _axial_breaks(region: Region) -> tuple[float, ...] | None:
    """Colatitudes where the indicator of a north-centred region jumps."""
    from .geometry import DistanceShell

    if isinstance(region, WholeSpace):
        return ()
    if isinstance(region, CapProduct) and region.d == 1 and np.allclose(region.axes[0], NORTH):
        return (float(region.radii[0]),)
    if isinstance(region, Complement):
        return _axial_breaks(region.base)
    if isinstance(region, DistanceShell) and np.isinf(region.outer):
        base = region.base
        inner = _axial_breaks(base)
        if inner is None or not inner:
            return inner
        shift = region.inner if isinstance(base, CapProduct) else -region.inner
        return tuple(t for t in (inner[0] + shift,) if 0.0 < t < np.pi)
    return None


def region_grid(basis: HoloBasis, region: Region, n: int | None = None) -> QuadratureGrid:
    """Mass grid, split at the indicator's jump when it is a known colatitude."""
    grid = mass_grid(basis, n)
    if basis.d != 1:
        return grid
    br = _axial_breaks(region)
    if not br:
        return grid
    return QuadratureGrid(1, grid.n, sphere_rule(grid.n, grid.n, br))


def select_eigenpair(spec: Spectrum, which: str | int = "mid", target: float = 0.0) -> EigenPair:
    """``ground``, ``top``, ``mid`` (eigenvalue nearest ``target``; ties go
    to the smaller eigenvalue) or an explicit index."""
    lam = spec.eigenvalues
    if isinstance(which, (int, np.integer)):
        return spec.pair(int(which))
    if which == "ground":
        return spec.pair(0)
    if which == "top":
        return spec.pair(spec.dim - 1)
    if which == "mid":
        gap = np.abs(lam - target)
        close = np.flatnonzero(gap <= gap.min() + 1e-9)
        return spec.pair(int(close[np.argmin(lam[close])]))
    raise ValueError(f"unknown eigenpair selector {which!r}")


def diagonalize(basis: HoloBasis, f: Symbol) -> Spectrum:
    return eigh(toeplitz_matrix(basis, f).matrix)


_AXIAL = {"x3": (1.0, 0.0), "-x3": (-1.0, 0.0), "1-x3": (-1.0, 1.0), "-(1-x3)": (1.0, -1.0)}


def level_region(f: Symbol, threshold: float, side: str = ">=") -> Region:
    """``{f >= t}`` or ``{f <= t}``.

    On one sphere, symbols affine in x3 have caps as level sets and get the
    exact cap (or cap complement) so distances are closed form; everything
    else is a generic level region with sampled distances.
    """
    if side not in (">=", "<="):
        raise ValueError("side must be '>=' or '<='")
    if f.d == 1 and f.spec in _AXIAL:
        s, b = _AXIAL[f.spec]
        # f = s x3 + b; f >= t  <=>  s x3 >= t - b
        t = (threshold - b) / s
        north = (side == ">=") == (s > 0)  # region of the form {x3 >= t}
        if north:
            if t <= -1:
                return WholeSpace(1)
            if t <= 1:
                return CapProduct(NORTH[None], [math.acos(t)])
        else:
            if t >= 1:
                return WholeSpace(1)
            if t >= -1:
                return Complement(CapProduct(NORTH[None], [math.acos(t)]))
    return SuperLevel(f, threshold) if side == ">=" else SubLevel(f, threshold)


def weighted_integrals(
    basis: HoloBasis, vec: np.ndarray, grid: QuadratureGrid, weights: Sequence[np.ndarray]
) -> list[float]:
    h = husimi_on_grid(basis, vec, grid)
    hw = h * grid.weights
    return [float(np.dot(hw, w)) for w in weights]


# ---------------------------------------------------------------- fits


@dataclass(frozen=True)
class DecayFit:
    c: float
    a: float
    r2: float
    p: float
    n_points: int
    clipped: bool = False


def decay_fit(points: Sequence[tuple[float, float]], p: float) -> DecayFit:
    """Least squares fit of log(mass) = a - c N^p."""
    if len(points) < 4:
        raise ValueError("a decay fit needs at least 4 points")
    N = np.array([q[0] for q in points], dtype=float)
    m = np.array([q[1] for q in points], dtype=float)
    if np.all(m <= 0):
        raise ValueError("all masses vanish; nothing to fit")
    clipped = bool(np.any(m < MASS_FLOOR))
    y = np.log(np.maximum(m, MASS_FLOOR))
    X = N**p
    slope, a = np.polyfit(X, y, 1)
    resid = y - (a + slope * X)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    c = float(-slope)
    if abs(c) < 1e-12 * max(1.0, abs(a)):
        c = 0.0
    return DecayFit(c, float(a), r2, p, len(points), clipped)


# ---------------------------------------------------------------- forbidden masses


@dataclass(frozen=True)
class ConcentrationReport:
    N: int
    label: str
    eigenvalue: float
    epsilon: float
    region: dict
    mass: float
    mass_mirror: float
    mass_two_sided: float
    degenerate: bool = False
    degenerate_mirror: bool = False
    fit: DecayFit | None = None

    def to_json(self) -> dict:
        return asdict(self)


def _far_region(f: Symbol, t: float, side: str, eps: float, resolver) -> tuple[Region, Region]:
    base = level_region(f, t, side)
    return base, far_from(base, eps, resolver)


def _degenerate(ind: np.ndarray) -> bool:
    return bool(ind.all() or not ind.any())


def forbidden_mass(
    basis: HoloBasis,
    f: Symbol,
    pair: EigenPair,
    eps: float,
    margin: float = 0.0,
    grid: QuadratureGrid | None = None,
    resolver: DistanceResolver | None = None,
) -> ConcentrationReport:
    """Husimi mass on W = {dist(x, {f >= lambda + margin N^(-1/2)}) > eps}.

    The mirror mass uses {f <= lambda - margin N^(-1/2)} instead; the two
    regions are disjoint, and their sum is the two-sided mass away from the
    level set {f = lambda}.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    user_grid = grid
    resolver = resolver or DistanceResolver()
    shift = margin / math.sqrt(basis.N) if basis.N > 0 else 0.0
    lam = pair.eigenvalue
    masses, flags = [], []
    W = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # empty level sets are reported as degenerate
        for side, t in ((">=", lam + shift), ("<=", lam - shift)):
            _, region = _far_region(f, t, side, eps, resolver)
            grid = user_grid or region_grid(basis, region)
            if eps >= diameter(basis.d):
                ind = np.zeros(len(grid.weights), dtype=bool)
            else:
                ind = region.indicator(grid.points)
            if W is None:
                W = region
            h = husimi_on_grid(basis, pair.vector, grid)
            masses.append(float(np.clip(np.dot(grid.weights, h * ind), 0.0, 1.0)))
            flags.append(_degenerate(ind))
    return ConcentrationReport(
        basis.N,
        f.label,
        lam,
        float(eps),
        W.to_json() if f.spec is not None or not isinstance(W.base, (SuperLevel, SubLevel)) else {"label": W.label},
        masses[0],
        masses[1],
        masses[0] + masses[1],
        flags[0],
        flags[1],
    )


# ---------------------------------------------------------------- shells


@dataclass(frozen=True)
class ShellReport:
    N: int
    epsilon: float
    alpha_reg: float
    width: float
    count: int
    masses: tuple[float, ...]
    override: bool = False

    @property
    def nonincreasing(self) -> bool:
        m = np.array(self.masses)
        return bool(np.all(np.diff(m) <= 1e-14))


def shell_width(N: int, eps: float, alpha_reg: float) -> float:
    """a = eps^(2/(1+2 alpha)) N^(-alpha/(2 alpha+1))."""
    return eps ** (2.0 / (1.0 + 2.0 * alpha_reg)) * N ** (-alpha_reg / (2.0 * alpha_reg + 1.0))


def shell_count(N: int, eps: float, alpha_reg: float) -> int:
    return int(math.floor(eps / (6.0 * shell_width(N, eps, alpha_reg)) + 1e-12))


def shell_masses(
    basis: HoloBasis,
    f: Symbol,
    pair: EigenPair,
    eps: float,
    alpha_reg: float,
    n_shells: int | None = None,
    grid: QuadratureGrid | None = None,
    resolver: DistanceResolver | None = None,
) -> ShellReport:
    """Masses on U_0 = {f >= lambda + eps} and the nested sets
    U_k = {x in U_0 : dist(x, M minus U_0) > 5 a k}, k = 0..floor(eps/(6a)).

    With fewer than 2 shells the request is refused, unless ``n_shells`` is
    given explicitly; that diagnostic override is recorded in the report.
    """
    if alpha_reg not in (0.5, 1.0):
        raise ValueError("alpha_reg must be 1/2 or 1")
    N = basis.N
    a = shell_width(N, eps, alpha_reg)
    count = shell_count(N, eps, alpha_reg)
    override = n_shells is not None
    if not override and count < 2:
        raise ValueError(
            f"only {count} shells of width a={a:.4g} fit in eps={eps} at N={N}; "
            "the shell argument needs a much smaller than eps (pass n_shells to override)"
        )
    K = int(n_shells) if override else count
    grid = grid or mass_grid(basis)
    resolver = resolver or DistanceResolver()
    U0 = level_region(f, pair.eigenvalue + eps, ">=")
    outside = Complement(U0) if not isinstance(U0, Complement) else U0.base
    pts = grid.points
    h = husimi_on_grid(basis, pair.vector, grid) * grid.weights
    inside = U0.indicator(pts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        depth = region_distance(outside, pts, resolver).distance
    masses = []
    for k in range(K + 1):
        ind = inside if k == 0 else inside & (depth > 5.0 * a * k)
        masses.append(float(np.clip(np.dot(h, ind), 0.0, 1.0)))
    return ShellReport(N, eps, alpha_reg, a, K, tuple(masses), override)


# ---------------------------------------------------------------- Agmon


@dataclass(frozen=True)
class AgmonReport:
    N: int
    weight_label: str
    alpha_w: float
    K: float
    C_star: float
    integral: float
    flagged: bool = False


def _check_alpha(alpha_w: float, cap: float) -> None:
    if abs(alpha_w) > cap:
        raise ValueError(f"|alpha_w| = {abs(alpha_w)} exceeds the small-weight cap {cap}")


def agmon_check(
    basis: HoloBasis,
    f: Symbol,
    pair: EigenPair,
    rho: Callable[[np.ndarray], np.ndarray],
    alpha_w: float,
    K: float,
    grid: QuadratureGrid | None = None,
    weight_label: str = "rho",
    tol: float = 1e-8,
    alpha_cap: float = ALPHA_CAP,
) -> AgmonReport:
    """Minimal C >= 0 with int e^(2 a sqrt(N) rho) (f - lambda - C K |a| N^(-1/2)) |u|^2 <= 0."""
    _check_alpha(alpha_w, alpha_cap)
    grid = grid or mass_grid(basis)
    pts = grid.points
    N = basis.N
    r = np.asarray(rho(pts), dtype=float)
    w = np.exp(2.0 * alpha_w * math.sqrt(N) * r)
    fl = f(pts) - pair.eigenvalue
    I1, I0 = weighted_integrals(basis, pair.vector, grid, [w * fl, w])
    if alpha_w == 0 or K == 0:
        flagged = I1 > tol
        return AgmonReport(N, weight_label, alpha_w, K, 0.0, I1, flagged)
    c = I1 / (K * abs(alpha_w) / math.sqrt(N) * I0)
    return AgmonReport(N, weight_label, alpha_w, K, max(c, 0.0), I1)


def _stage_function(f_vals: np.ndarray, lam: float, N: int, k: int, eps: float) -> np.ndarray:
    if k == 0:
        return f_vals - lam
    return np.maximum(f_vals - lam, N ** (-1.0 + 2.0**-k + 2.0 * eps))


def agmon_induction_integral(
    basis: HoloBasis,
    f: Symbol,
    pair: EigenPair,
    k: int,
    eps: float,
    alpha_w: float,
    C_k: float,
    grid: QuadratureGrid | None = None,
    min_tol: float = 1e-9,
) -> float:
    """int e^(2 a sqrt(N) sqrt(f)) (g_k - C_k N^(-1 + 2^-(k+1) + eps)) |u|^2,
    with g_0 = f - lambda and g_k = max(f - lambda, N^(-1 + 2^-k + 2 eps))."""
    I_g, I_w, scale = _induction_parts(basis, f, pair, k, eps, alpha_w, grid, min_tol)
    return I_g - C_k * scale * I_w


def symbol_minimum(f: Symbol, pts: np.ndarray | None = None) -> float:
    """Minimum of f over the given points and all products of the six axis
    points (where the minima of coordinate polynomials usually sit)."""
    axes = np.vstack([np.eye(3), -np.eye(3)])
    d = f.d
    probes = axes[np.indices((6,) * d).reshape(d, -1).T] if d <= 4 else axes[None, :, :].repeat(d, 0).transpose(1, 0, 2)
    m = float(f(probes).min())
    if pts is not None:
        m = min(m, float(f(pts).min()))
    return m


def _induction_parts(basis, f, pair, k, eps, alpha_w, grid, min_tol):
    if k < 0 or eps <= 0:
        raise ValueError("need k >= 0 and eps > 0")
    grid = grid or mass_grid(basis)
    pts = grid.points
    fv = f(pts)
    fmin = symbol_minimum(f, pts)
    if abs(fmin) > min_tol:
        raise ValueError(f"the induction needs min f = 0; sampled minimum is {fmin:.3e}")
    N = basis.N
    w = np.exp(2.0 * alpha_w * math.sqrt(N) * np.sqrt(np.clip(fv, 0.0, None)))
    g = _stage_function(fv, pair.eigenvalue, N, k, eps)
    I_g, I_w = weighted_integrals(basis, pair.vector, grid, [w * g, w])
    return I_g, I_w, N ** (-1.0 + 2.0 ** -(k + 1) + eps)


def minimal_stage_constant(
    basis: HoloBasis, f: Symbol, pair: EigenPair, k: int, eps: float, alpha_w: float, grid=None
) -> float:
    """Smallest C_k >= 0 making the stage-k integral nonpositive."""
    I_g, I_w, scale = _induction_parts(basis, f, pair, k, eps, alpha_w, grid, 1e-9)
    return max(I_g / (scale * I_w), 0.0)


# ---------------------------------------------------------------- ground states


@dataclass(frozen=True)
class GroundStateRow:
    N: int
    lambda0: float
    lambda0_N: float
    threshold: float
    mass: float


@dataclass(frozen=True)
class GroundStateReport:
    delta: float
    rows: tuple[GroundStateRow, ...]
    fit: DecayFit | None

    @property
    def masses_decreasing(self) -> bool:
        m = np.array([r.mass for r in self.rows])
        return bool(np.all(np.diff(m) < 0))


def ground_state_report(Ns: Sequence[int], f: Symbol, delta: float, d: int = 1) -> GroundStateReport:
    """lambda_0 N and the ground-state mass on {f >= N^(-1+delta)} along a sweep,
    with a fit of the masses against exp(-c N^(delta/2))."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    rows = []
    for N in Ns:
        basis = HoloBasis(N, d)
        pair = diagonalize(basis, f).pair(0)
        t = N ** (-1.0 + delta)
        region = level_region(f, t, ">=")
        grid = region_grid(basis, region)
        ind = region.indicator(grid.points)
        h = husimi_on_grid(basis, pair.vector, grid)
        mass = float(np.clip(np.dot(grid.weights, h * ind), 0.0, 1.0))
        rows.append(GroundStateRow(N, pair.eigenvalue, pair.eigenvalue * N, t, mass))
    fit = None
    if len(rows) >= 4 and any(r.mass > 0 for r in rows):
        fit = decay_fit([(r.N, r.mass) for r in rows], delta / 2.0)
    return GroundStateReport(delta, tuple(rows), fit)


# ---------------------------------------------------------------- commutators


def commutator_rule(N: int, breaks: tuple[float, ...] = (), extra: int = 40):
    """Per-sphere rule for the Gram matrices: composite Gauss-Legendre in
    cos(theta) split at the kinks of the weight, 2N+2 phi nodes."""
    return sphere_rule(N + extra, 2 * N + 2, breaks)


def weighted_commutator_norm(
    basis: HoloBasis,
    f: Symbol,
    rho: Callable[[np.ndarray], np.ndarray],
    alpha_w: float,
    breaks: tuple[float, ...] = (),
    rule=None,
    alpha_cap: float = ALPHA_CAP,
) -> float:
    """||e^(a sqrt(N) rho) [f, S_N] e^(-a sqrt(N) rho)|| on one sphere.

    The operator is X Y* with X = [E f e_i, -E e_i], Y = [E^-1 e_i, E^-1 f e_i]
    (E the weight, e_i the orthonormal sections), so its norm is that of
    R_X R_Y^*, where R_X^* R_X = G_X and R_Y^* R_Y = G_Y are the Gram matrices
    computed by quadrature. The R factors come from thin QR of the
    quadrature-weighted samples, which avoids squaring the condition number
    (a vanishing commutator comes out at roundoff, not at its square root).
    """
    if basis.d != 1:
        raise NotImplementedError("weighted commutator norms are only supported on one sphere")
    _check_alpha(alpha_w, alpha_cap)
    N = basis.N
    rule = rule or commutator_rule(N, breaks)
    pts = rule.points
    w = rule.weights
    psi = sphere_psi(N, pts)
    fv = f(pts[:, None, :])
    E = np.exp(alpha_w * math.sqrt(N) * np.asarray(rho(pts[:, None, :]), dtype=float))
    X = np.hstack([(E * fv)[:, None] * psi, -E[:, None] * psi])
    Y = np.hstack([psi / E[:, None], (fv / E)[:, None] * psi])
    sw = np.sqrt(w)[:, None]
    RX = np.linalg.qr(sw * X, mode="r")
    RY = np.linalg.qr(sw * Y, mode="r")
    return float(np.linalg.svd(RX @ RY.conj().T, compute_uv=False)[0])


# ---------------------------------------------------------------- sweeps


SWEEP_HEADER = ["N", "epsilon", "mass", "mass_mirror", "C_star", "fit_c", "fit_R2"]


@dataclass
class SweepTable:
    rows: list[dict] = field(default_factory=list)

    def add(self, **kw) -> None:
        self.rows.append(kw)

    def write_csv(self, path: str | Path, header: Sequence[str] = SWEEP_HEADER, extra: dict | None = None) -> None:
        extra = extra or {}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(header) + list(extra))
            for r in self.rows:
                w.writerow([_fmt(r.get(k)) for k in header] + list(extra.values()))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def concentration_sweep(
    Ns: Sequence[int],
    f_spec: Callable[[int], Symbol] | Symbol,
    eps: float,
    which: str | int = "mid",
    p: float = 0.5,
    margin: float = 0.0,
) -> tuple[list[ConcentrationReport], DecayFit | None]:
    """Forbidden masses along an N-sweep plus the fit log(mass) = a - c N^p."""
    reports = []
    for N in Ns:
        f = f_spec if isinstance(f_spec, Symbol) else f_spec(N)
        basis = HoloBasis(N, f.d)
        pair = select_eigenpair(diagonalize(basis, f), which)
        reports.append(forbidden_mass(basis, f, pair, eps, margin))
    fit = None
    if len(reports) >= 4 and any(r.mass > 0 for r in reports):
        fit = decay_fit([(r.N, r.mass) for r in reports], p)
    return reports, fit

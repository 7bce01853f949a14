"""Tame spin systems: pair interactions on bounded-valence colored graphs.

Every kernel here is bilinear, w(x, y) = x^T A y, so it is a degree-1
spherical harmonic in each argument and its Toeplitz matrix is a sum of
Kronecker products of single-sphere coordinate matrices.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (
    DistanceResolver,
    Region,
    Window,
    WholeSpace,
    angle,
    far_from,
    point_hash,
    region_distance,
    substream,
)
from .quantization import HoloBasis, sample_husimi
from .spectral import EigenPair
from .symbols import Symbol, coordinate

MODELS = ("heisenberg", "ising", "xy", "custom")
TOPOLOGIES = ("chain", "ring", "grid")


@dataclass(frozen=True)
class SpinGraph:
    n_sites: int
    colors: tuple[tuple[tuple[int, int], ...], ...]
    valence: int
    m0: int = 1
    topology: str = "custom"
    shape: tuple[int, ...] = ()

    def __post_init__(self):
        seen = set()
        for cls in self.colors:
            for a, b in cls:
                if not (0 <= a < self.n_sites and 0 <= b < self.n_sites) or a == b:
                    raise ValueError(f"bad edge ({a}, {b})")
                e = (min(a, b), max(a, b))
                if e in seen:
                    raise ValueError(f"edge {e} appears twice")
                seen.add(e)
        if self.degrees.max(initial=0) > self.valence:
            raise ValueError(f"a vertex has degree {self.degrees.max()} above the valence bound {self.valence}")

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [e for cls in self.colors for e in cls]

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_sites, dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    @property
    def d(self) -> int:
        return self.n_sites * self.m0


def chain_graph(L: int) -> SpinGraph:
    if L < 2:
        raise ValueError("a chain needs L >= 2")
    return SpinGraph(L, (tuple((i, i + 1) for i in range(L - 1)),), 2, topology="chain", shape=(L,))


def ring_graph(L: int) -> SpinGraph:
    if L < 3:
        raise ValueError("a ring needs L >= 3")
    return SpinGraph(L, (tuple((i, (i + 1) % L) for i in range(L)),), 2, topology="ring", shape=(L,))


def grid_graph(L: int, W: int | None = None) -> SpinGraph:
    W = L if W is None else W
    if L < 2 or W < 1:
        raise ValueError("a grid needs L >= 2")
    site = lambda i, j: i * W + j
    horiz = tuple((site(i, j), site(i, j + 1)) for i in range(L) for j in range(W - 1))
    vert = tuple((site(i, j), site(i + 1, j)) for i in range(L - 1) for j in range(W))
    return SpinGraph(L * W, (horiz, vert), 4, topology="grid", shape=(L, W))


@dataclass(frozen=True, eq=False)
class InteractionKernel:
    """w(x, y) = x^T A y for a 3x3 real matrix A."""

    A: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.shape != (3, 3):
            raise ValueError("a bilinear kernel needs a 3x3 matrix")
        object.__setattr__(self, "A", A)

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("...i,ij,...j->...", x, self.A, y)

    @property
    def sup_bound(self) -> float:
        """sup |x^T A y| over unit vectors: the largest singular value."""
        return float(np.linalg.norm(self.A, 2))

    @property
    def grad_bound(self) -> float:
        """Bound on the tangential gradient in either argument."""
        return self.sup_bound

    @property
    def frequency(self) -> int:
        """Spherical-harmonic degree in each argument (Laplace eigenvalue l(l+1) = 2)."""
        return 1

    @property
    def lap_bound(self) -> float:
        """|Delta_x w| + |Delta_y w| <= 2 l(l+1) sup|w|."""
        return 4.0 * self.sup_bound

    @property
    def isotropic(self) -> float | None:
        """J when A = J I (so w depends only on x.y), else None."""
        J = self.A[0, 0]
        return float(J) if np.allclose(self.A, J * np.eye(3), atol=0.0, rtol=0.0) else None

    def profile(self, t: np.ndarray) -> np.ndarray:
        J = self.isotropic
        if J is None:
            raise ValueError("kernel is not isotropic")
        return J * np.asarray(t, dtype=float)


def model_kernel(model: str, coupling: float, matrix=None) -> InteractionKernel:
    if model == "heisenberg":
        return InteractionKernel(coupling * np.eye(3), model)
    if model == "ising":
        return InteractionKernel(coupling * np.diag([0.0, 0.0, 1.0]), model)
    if model == "xy":
        return InteractionKernel(coupling * np.diag([1.0, 1.0, 0.0]), model)
    if model == "custom":
        if matrix is None:
            raise ValueError("the custom model needs a 3x3 coupling matrix")
        return InteractionKernel(coupling * np.asarray(matrix, dtype=float), model)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


@dataclass(frozen=True, eq=False)
class TameSpinSystem:
    graph: SpinGraph
    kernels: tuple[InteractionKernel, ...]
    model: str = "custom"
    coupling: float = 1.0

    def __post_init__(self):
        if len(self.kernels) != len(self.graph.colors):
            raise ValueError("one kernel per color class is required")
        if self.graph.m0 != 1:
            raise NotImplementedError("only one sphere per site is supported by the kernels")

    @property
    def d(self) -> int:
        return self.graph.d

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-2:] != (self.d, 3):
            raise ValueError(f"expected points of shape (..., {self.d}, 3), got {x.shape}")
        out = np.zeros(x.shape[:-2])
        for w, cls in zip(self.kernels, self.graph.colors):
            if not cls:
                continue
            a = np.array([e[0] for e in cls])
            b = np.array([e[1] for e in cls])
            out = out + np.sum(w(x[..., a, :], x[..., b, :]), axis=-1)
        return out

    __call__ = evaluate

    def to_symbol(self) -> Symbol:
        terms = []
        for w, cls in zip(self.kernels, self.graph.colors):
            for a, b in cls:
                for i in range(3):
                    for j in range(3):
                        if w.A[i, j] != 0.0:
                            terms.append((float(w.A[i, j]), {a: coordinate(i), b: coordinate(j)}))
        return Symbol(self.d, tuple(terms), label=f"{self.model}-{self.graph.topology}-{self.graph.n_sites}")

    def to_json(self) -> dict:
        return {
            "topology": self.graph.topology,
            "shape": list(self.graph.shape),
            "n_sites": self.graph.n_sites,
            "colors": [[list(e) for e in cls] for cls in self.graph.colors],
            "valence": self.graph.valence,
            "model": self.model,
            "coupling": self.coupling,
            "kernels": [{"tag": w.name, "A": w.A.tolist()} for w in self.kernels],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TameSpinSystem":
        graph = SpinGraph(
            int(obj["n_sites"]),
            tuple(tuple((int(a), int(b)) for a, b in c) for c in obj["colors"]),
            int(obj["valence"]),
            topology=obj.get("topology", "custom"),
            shape=tuple(obj.get("shape", ())),
        )
        kernels = tuple(InteractionKernel(np.array(k["A"]), k.get("tag", "custom")) for k in obj["kernels"])
        return cls(graph, kernels, obj.get("model", "custom"), float(obj.get("coupling", 1.0)))


def build_system(topology: str, L: int, model: str, coupling: float = 1.0, matrix=None) -> TameSpinSystem:
    if topology == "chain":
        graph = chain_graph(L)
    elif topology == "ring":
        graph = ring_graph(L)
    elif topology == "grid":
        graph = grid_graph(L)
    else:
        raise ValueError(f"unknown topology {topology!r}; expected one of {TOPOLOGIES}")
    k = model_kernel(model, coupling, matrix)
    return TameSpinSystem(graph, tuple(k for _ in graph.colors), model, float(coupling))


def zero_system(topology: str, L: int) -> TameSpinSystem:
    return build_system(topology, L, "custom", 0.0, np.zeros((3, 3)))


# ---------------------------------------------------------------- derivatives


@dataclass(frozen=True)
class DerivativeBounds:
    sup: float
    grad: float
    lap: float
    sup_empirical: float
    grad_empirical: float
    lap_empirical: float

    @property
    def sound(self) -> bool:
        return (
            self.sup_empirical <= self.sup + 1e-12
            and self.grad_empirical <= self.grad + 1e-9
            and self.lap_empirical <= self.lap + 1e-6 * max(1.0, self.lap)
        )


def _tangent_basis(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.where(np.abs(v[..., 2:3]) < 0.9, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    e1 = np.cross(v, helper)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    return e1, np.cross(v, e1)


def gradient(g: TameSpinSystem, x: np.ndarray) -> np.ndarray:
    """Tangential gradient of g at points (m, d, 3), shape (m, d, 3)."""
    grad = np.zeros_like(x)
    for w, cls in zip(g.kernels, g.graph.colors):
        for a, b in cls:
            grad[:, a] += x[:, b] @ w.A.T
            grad[:, b] += x[:, a] @ w.A
    radial = np.sum(grad * x, axis=-1, keepdims=True)
    return grad - radial * x


def laplacian_fd(g: TameSpinSystem, x: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Laplace-Beltrami of g by central second differences along two
    orthogonal great circles per sphere."""
    m, d, _ = x.shape
    base = g(x)
    out = np.zeros(m)
    for j in range(d):
        for e in _tangent_basis(x[:, j]):
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[:, j] = math.cos(h) * x[:, j] + sgn * math.sin(h) * e
                out += g(y)
            out -= 2.0 * base
    return out / h**2


def derivative_bounds(g: TameSpinSystem, samples: int = 10_000, seed: int = 0) -> DerivativeBounds:
    """Analytic bounds (sup, gradient, Laplacian) and sampled maxima as
    lower witnesses.

    sup|g| <= sum_e sup|w_e|; the gradient bound accumulates per site and
    then takes the l2 norm over sites, which gives the sqrt(d) growth.
    """
    from .geometry import sample_uniform

    d = g.d
    per_site = np.zeros(d)
    sup = lap = 0.0
    for w, cls in zip(g.kernels, g.graph.colors):
        for a, b in cls:
            sup += w.sup_bound
            lap += w.lap_bound
            per_site[a] += w.grad_bound
            per_site[b] += w.grad_bound
    grad = float(np.sqrt(np.sum(per_site**2)))
    x = sample_uniform(d, samples, seed)
    vals = np.abs(g(x))
    gr = np.sqrt(np.sum(gradient(g, x) ** 2, axis=(-1, -2)))
    lp = np.abs(laplacian_fd(g, x[: min(samples, 2000)]))
    return DerivativeBounds(sup, grad, lap, float(vals.max()), float(gr.max()), float(lp.max()))


# ---------------------------------------------------------------- weights


def weight_rho0(U: Region, c0: float, x: np.ndarray, resolver: DistanceResolver | None = None) -> np.ndarray:
    """max(0, dist(x, U) - c0 sqrt(d))."""
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    dist = region_distance(U, x, resolver).distance
    return np.maximum(dist - c0 * math.sqrt(U.d), 0.0)


@dataclass(frozen=True)
class WeightValue:
    value: float
    stderr: float
    accepted: int
    fallback: bool = False


@dataclass(eq=False)
class Weight:
    """Mollified distance weight: the chi-weighted average of rho_0 over the
    geodesic ball of radius c0 sqrt(d)/2, chi(s) = 1 - s^2."""

    U: Region
    c0: float
    budget: int = 2000
    seed: int = 0
    resolver: DistanceResolver | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")
        if self.budget < 1000:
            raise ValueError("the mollifier needs at least 1000 samples")

    @property
    def d(self) -> int:
        return self.U.d

    @property
    def radius(self) -> float:
        return self.c0 * math.sqrt(self.d) / 2.0

    def to_json(self) -> dict:
        return {"U": self.U.to_json(), "c0": self.c0, "seed": self.seed, "budget": self.budget}

    def _ball_samples(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Points y = exp_x(v) with v drawn from chi(|v|/r) times the
        exponential-map Jacobian, by rejection from the uniform ball."""
        d, r, m = self.d, self.radius, self.budget
        dim = 2 * d
        g = rng.standard_normal((m, dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        v = g * (r * rng.uniform(size=(m, 1)) ** (1.0 / dim))
        v = v.reshape(m, d, 2)
        s = np.linalg.norm(v, axis=(1, 2)) / r
        tn = np.linalg.norm(v, axis=2)
        jac = np.prod(np.where(tn < 1e-12, 1.0, np.sin(np.minimum(tn, math.pi)) / np.maximum(tn, 1e-12)), axis=1)
        ok = np.all(tn < math.pi, axis=1)
        keep = ok & (rng.uniform(size=m) < (1.0 - s**2) * jac)
        v, tn = v[keep], tn[keep]
        e1, e2 = _tangent_basis(x)
        direction = v[..., :1] * e1 + v[..., 1:] * e2  # (k, d, 3)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(tn[..., None] > 1e-12, direction / tn[..., None], 0.0)
        return np.cos(tn)[..., None] * x + np.sin(tn)[..., None] * unit

    def evaluate(self, x: np.ndarray) -> WeightValue:
        x = np.asarray(x, dtype=float).reshape(self.d, 3)
        key = point_hash(x)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        rng = substream(self.seed, key % (2**63))
        y = self._ball_samples(x, rng)
        if len(y) == 0:
            val = WeightValue(float(weight_rho0(self.U, self.c0, x[None], self.resolver)[0]), 0.0, 0, True)
        else:
            r0 = weight_rho0(self.U, self.c0, y, self.resolver)
            se = float(r0.std(ddof=1) / math.sqrt(len(r0))) if len(r0) > 1 else 0.0
            val = WeightValue(float(r0.mean()), se, len(r0))
        self._cache.setdefault(key, val)
        return self._cache[key]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.d, 3)
        return np.array([self.evaluate(p).value for p in flat]).reshape(x.shape[:-2])


def weight_mollified(w: Weight, x: np.ndarray) -> WeightValue:
    return w.evaluate(x)


# ---------------------------------------------------------------- weighted eigenfunction estimate


@dataclass(frozen=True)
class WeightedEstimateResult:
    value: float
    stderr: float
    mass_W: float
    C: float
    c: float
    window: float
    W_radius: float
    U: dict
    samples: int

    @property
    def relative_error(self) -> float:
        return self.stderr / self.value if self.value > 0 else float("inf")


def window_region(g: TameSpinSystem, lam: float, N: int, C: float) -> Region:
    """U = {|g - lambda| < C N^(-1/4) d^(3/4)}."""
    half = C * N**-0.25 * g.d**0.75
    sup = derivative_bounds_sup(g)
    if lam - half < -sup and lam + half > sup:
        return WholeSpace(g.d)
    return Window(_GSymbol(g), lam, half)


def derivative_bounds_sup(g: TameSpinSystem) -> float:
    return float(sum(w.sup_bound * len(cls) for w, cls in zip(g.kernels, g.graph.colors)))


class _GSymbol:
    """Callable view of g for level regions (no serializable spec)."""

    def __init__(self, g: TameSpinSystem):
        self.g = g
        self.d = g.d
        self.label = f"g[{g.model}]"
        self.spec = None

    def __call__(self, x):
        return self.g(x)


def weighted_estimate_check(
    g: TameSpinSystem,
    N: int,
    pair: EigenPair,
    C: float = 1.0,
    c: float = 1.0,
    samples: int = 20_000,
    seed: int = 0,
    resolver: DistanceResolver | None = None,
    max_rel_error: float | None = None,
    x: np.ndarray | None = None,
) -> WeightedEstimateResult:
    """Monte Carlo estimate of int_W e^(c sqrt(N) dist(x, U)/sqrt(d)) |u|^2,
    W = {dist(x, U) > C N^(-1/2) sqrt(d)}, with exact samples from the
    Husimi density of ``pair``."""
    d = g.d
    basis = HoloBasis(N, d)
    U = window_region(g, pair.eigenvalue, N, C)
    W_r = C * math.sqrt(d / N)
    if isinstance(U, WholeSpace):
        return WeightedEstimateResult(0.0, 0.0, 0.0, C, c, float("inf"), W_r, U.to_json(), 0)
    if x is None:
        x = sample_husimi(basis, pair, samples, seed)
    resolver = resolver or DistanceResolver(seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        dist = region_distance(U, x, resolver).distance
    inW = dist > W_r
    vals = np.where(inW, np.exp(c * math.sqrt(N) * np.where(inW, dist, 0.0) / math.sqrt(d)), 0.0)
    value = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    if max_rel_error is not None and value > 0 and se > max_rel_error * value:
        raise FloatingPointError(
            f"Monte Carlo variance too large: value {value:.4g} +- {se:.2g} "
            f"(W mass {inW.mean():.3g}, max weight {vals.max():.3g})"
        )
    return WeightedEstimateResult(value, se, float(inW.mean()), C, c, U.half_width, W_r, {"tag": "Window", "center": pair.eigenvalue, "half_width": U.half_width}, len(x))


@dataclass(frozen=True)
class Calibration:
    C: float
    c: float
    mass_W: float
    rel_error: float


def calibrate_weighted_estimate(
    g: TameSpinSystem,
    N: int,
    pair: EigenPair,
    C_grid: Sequence[float] = (0.25, 0.5, 0.75, 1.0, 1.5),
    c_grid: Sequence[float] = (0.25, 0.5, 1.0, 1.5, 2.0),
    samples: int = 20_000,
    seed: int = 0,
    min_mass: float = 0.01,
    max_rel_error: float = 0.05,
) -> Calibration:
    """Pick the window constant C and the rate c on one instance.

    C is the largest grid value whose W still carries at least ``min_mass``
    (so the estimator is not dominated by a handful of samples); c is then
    the largest rate whose relative standard error stays below
    ``max_rel_error``.
    """
    basis = HoloBasis(N, g.d)
    x = sample_husimi(basis, pair, samples, seed)
    resolver = DistanceResolver(seed=seed)
    chosen_C = None
    for C in sorted(C_grid):
        res = weighted_estimate_check(g, N, pair, C, 0.0, seed=seed, resolver=resolver, x=x)
        if res.mass_W >= min_mass:
            chosen_C = C
    if chosen_C is None:
        raise ValueError("no window constant leaves enough mass in W; widen C_grid")
    best = None
    for c in sorted(c_grid):
        res = weighted_estimate_check(g, N, pair, chosen_C, c, seed=seed, resolver=resolver, x=x)
        if res.relative_error <= max_rel_error:
            best = Calibration(chosen_C, c, res.mass_W, res.relative_error)
    if best is None:
        raise ValueError("every rate in c_grid gives an unstable estimate")
    return best


def mid_spectrum_indices(eigenvalues: np.ndarray, count: int = 3, tol: float = 1e-9) -> list[int]:
    """First index of ``count`` neighbouring eigenvalue clusters around the median."""
    lam = np.asarray(eigenvalues)
    starts = np.concatenate([[0], np.flatnonzero(np.diff(lam) > tol) + 1])
    centre = int(np.searchsorted(starts, len(lam) // 2, side="right") - 1)
    lo = max(0, min(centre - count // 2, len(starts) - count))
    return [int(k) for k in starts[lo : lo + count]]


def spin_json(g: TameSpinSystem) -> str:
    return json.dumps(g.to_json(), sort_keys=True)

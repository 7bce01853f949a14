"""Points, distances, regions, quadrature grids and sampling on (S^2)^d.

Conventions used throughout the package:

* every sphere carries total area pi (radius 1/2), so (S^2)^d has volume pi^d;
* distances are measured in full-angle units: the distance between two
  points of (S^2)^d is the l2 norm of the vector of per-sphere angles.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable

import numpy as np
from scipy.spatial import cKDTree

SPHERE_AREA = np.pi
MAX_GRID_POINTS = 6_000_000

NORTH = np.array([0.0, 0.0, 1.0])


class DimensionError(ValueError):
    pass


class GridBudgetError(ValueError):
    pass


# ---------------------------------------------------------------- points


def from_angles(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def to_angles(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v, dtype=float)
    theta = np.arccos(np.clip(v[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2 * np.pi)
    return theta, phi


def product_point(*vectors) -> np.ndarray:
    """Stack unit vectors into a ``(d, 3)`` product point, normalizing them."""
    x = np.atleast_2d(np.asarray(vectors, dtype=float))
    if x.ndim == 3 and x.shape[0] == 1:
        x = x[0]
    if x.shape[-1] != 3:
        raise ValueError("points must be 3-vectors")
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def angle(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Angle between unit vectors, in [0, pi]; broadcasts over leading axes."""
    dot = np.sum(np.asarray(p, dtype=float) * np.asarray(q, dtype=float), axis=-1)
    return np.arccos(np.clip(dot, -1.0, 1.0))


def product_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-2] != y.shape[-2]:
        raise DimensionError(f"points live on different products: d={x.shape[-2]} vs d={y.shape[-2]}")
    return np.sqrt(np.sum(angle(x, y) ** 2, axis=-1))


def diameter(d: int) -> float:
    return float(np.pi * np.sqrt(d))


def _as_batch(x: np.ndarray, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-2:] != (d, 3):
        raise DimensionError(f"expected points of shape (..., {d}, 3), got {x.shape}")
    return x


# ---------------------------------------------------------------- regions


@dataclass(frozen=True, eq=False)
class Region:
    """Base class: a measurable subset of (S^2)^d."""

    @property
    def d(self) -> int:  # pragma: no cover - overridden
        raise NotImplementedError

    @property
    def label(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError

    def indicator(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - overridden
        raise NotImplementedError

    def to_json(self) -> dict[str, Any]:  # pragma: no cover - overridden
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class WholeSpace(Region):
    dim: int
    name: str = "M"

    @property
    def d(self) -> int:
        return self.dim

    @property
    def label(self) -> str:
        return self.name

    def indicator(self, x):
        x = _as_batch(x, self.dim)
        return np.ones(x.shape[:-2], dtype=bool)

    def to_json(self):
        return {"tag": "WholeSpace", "d": self.dim, "label": self.name}


@dataclass(frozen=True, eq=False)
class CapProduct(Region):
    """Product of geodesic caps: sphere j is the cap of angular radius
    ``radii[j]`` around the unit vector ``axes[j]``."""

    axes: np.ndarray
    radii: np.ndarray
    name: str = ""

    def __post_init__(self):
        axes = np.atleast_2d(np.asarray(self.axes, dtype=float))
        axes = axes / np.linalg.norm(axes, axis=-1, keepdims=True)
        radii = np.atleast_1d(np.asarray(self.radii, dtype=float))
        if radii.shape[0] == 1 and axes.shape[0] > 1:
            radii = np.full(axes.shape[0], radii[0])
        if axes.shape[0] != radii.shape[0]:
            raise DimensionError("one radius per cap axis is required")
        if np.any(radii < 0):
            raise ValueError("cap radii must be nonnegative")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "radii", radii)

    @classmethod
    def around(cls, center: np.ndarray, radius: float | np.ndarray, name: str = "") -> "CapProduct":
        center = np.atleast_2d(np.asarray(center, dtype=float))
        return cls(center, np.broadcast_to(np.asarray(radius, float), (center.shape[0],)).copy(), name)

    @property
    def d(self) -> int:
        return self.axes.shape[0]

    @property
    def label(self) -> str:
        return self.name or f"cap(r={np.round(self.radii, 4).tolist()})"

    def indicator(self, x):
        x = _as_batch(x, self.d)
        return np.all(angle(x, self.axes) <= self.radii, axis=-1)

    def distance(self, x) -> np.ndarray:
        x = _as_batch(x, self.d)
        deficit = np.maximum(angle(x, self.axes) - self.radii, 0.0)
        return np.sqrt(np.sum(deficit**2, axis=-1))

    def to_json(self):
        return {"tag": "CapProduct", "axes": self.axes.tolist(), "radii": self.radii.tolist(), "label": self.name}


@dataclass(frozen=True, eq=False)
class SuperLevel(Region):
    """``{x : f(x) >= threshold}``."""

    symbol: Any
    threshold: float
    name: str = ""

    @property
    def d(self) -> int:
        return self.symbol.d

    @property
    def label(self) -> str:
        return self.name or f"{{{getattr(self.symbol, 'label', 'f')} >= {self.threshold:.6g}}}"

    def indicator(self, x):
        return self.symbol(_as_batch(x, self.d)) >= self.threshold

    def to_json(self):
        return {"tag": "SuperLevel", "d": self.d, "symbol": _symbol_spec(self.symbol), "threshold": self.threshold, "label": self.name}


@dataclass(frozen=True, eq=False)
class SubLevel(Region):
    """``{x : f(x) <= threshold}``."""

    symbol: Any
    threshold: float
    name: str = ""

    @property
    def d(self) -> int:
        return self.symbol.d

    @property
    def label(self) -> str:
        return self.name or f"{{{getattr(self.symbol, 'label', 'f')} <= {self.threshold:.6g}}}"

    def indicator(self, x):
        return self.symbol(_as_batch(x, self.d)) <= self.threshold

    def to_json(self):
        return {"tag": "SubLevel", "d": self.d, "symbol": _symbol_spec(self.symbol), "threshold": self.threshold, "label": self.name}


@dataclass(frozen=True, eq=False)
class Window(Region):
    """Two-sided level band ``{x : |f(x) - center| < half_width}``."""

    symbol: Any
    center: float
    half_width: float
    name: str = ""

    @property
    def d(self) -> int:
        return self.symbol.d

    @property
    def label(self) -> str:
        return self.name or f"{{|f - {self.center:.6g}| < {self.half_width:.6g}}}"

    def indicator(self, x):
        return np.abs(self.symbol(_as_batch(x, self.d)) - self.center) < self.half_width

    def to_json(self):
        return {
            "tag": "Window",
            "d": self.d,
            "symbol": _symbol_spec(self.symbol),
            "center": self.center,
            "half_width": self.half_width,
            "label": self.name,
        }


@dataclass(frozen=True, eq=False)
class DistanceShell(Region):
    """``{x : inner <= dist(x, base) < outer}``; ``outer`` may be ``inf``.

    With ``strict_inner`` the lower bound is strict, which is the form used
    for the "far from a set" regions ``{dist(x, S) > eps}``.
    """

    base: Region
    inner: float
    outer: float = np.inf
    resolver: "DistanceResolver | None" = None
    strict_inner: bool = False
    name: str = ""

    def __post_init__(self):
        if not (0 <= self.inner < self.outer):
            raise ValueError(f"need 0 <= inner < outer, got inner={self.inner}, outer={self.outer}")

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def label(self) -> str:
        op = "<" if self.strict_inner else "<="
        return self.name or f"{{{self.inner:.4g} {op} dist(., {self.base.label}) < {self.outer:.4g}}}"

    def indicator(self, x):
        dist = region_distance(self.base, x, self.resolver).distance
        low = dist > self.inner if self.strict_inner else dist >= self.inner
        return low & (dist < self.outer)

    def to_json(self):
        return {
            "tag": "DistanceShell",
            "base": self.base.to_json(),
            "inner": self.inner,
            "outer": None if np.isinf(self.outer) else self.outer,
            "strict_inner": self.strict_inner,
            "label": self.name,
        }


def far_from(base: Region, eps: float, resolver: "DistanceResolver | None" = None, name: str = "") -> DistanceShell:
    """``{x : dist(x, base) > eps}``."""
    return DistanceShell(base, float(eps), np.inf, resolver, strict_inner=True, name=name)


@dataclass(frozen=True, eq=False)
class Complement(Region):
    base: Region
    name: str = ""

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def label(self) -> str:
        return self.name or f"M\\{self.base.label}"

    def indicator(self, x):
        return ~self.base.indicator(x)

    def to_json(self):
        return {"tag": "Complement", "base": self.base.to_json(), "label": self.name}


@dataclass(frozen=True, eq=False)
class Intersection(Region):
    parts: tuple[Region, ...]
    name: str = ""

    def __post_init__(self):
        if not self.parts:
            raise ValueError("intersection of no regions")
        if len({p.d for p in self.parts}) != 1:
            raise DimensionError("intersected regions must live on the same product")

    @property
    def d(self) -> int:
        return self.parts[0].d

    @property
    def label(self) -> str:
        return self.name or " & ".join(p.label for p in self.parts)

    def indicator(self, x):
        out = self.parts[0].indicator(x)
        for p in self.parts[1:]:
            out = out & p.indicator(x)
        return out

    def to_json(self):
        return {"tag": "Intersection", "parts": [p.to_json() for p in self.parts], "label": self.name}


def _symbol_spec(sym) -> str:
    spec = getattr(sym, "spec", None)
    if spec is None:
        raise ValueError(f"symbol {getattr(sym, 'label', sym)!r} has no serializable spec")
    return spec


def region_from_json(obj: dict[str, Any]) -> Region:
    from .symbols import parse_symbol

    tag = obj["tag"]
    label = obj.get("label", "") or ""
    if tag == "WholeSpace":
        return WholeSpace(int(obj["d"]), label or "M")
    if tag == "CapProduct":
        return CapProduct(np.array(obj["axes"]), np.array(obj["radii"]), label)
    if tag in ("SuperLevel", "SubLevel", "Window"):
        sym = parse_symbol(obj["symbol"], int(obj.get("d", 1)))
        if tag == "SuperLevel":
            return SuperLevel(sym, float(obj["threshold"]), label)
        if tag == "SubLevel":
            return SubLevel(sym, float(obj["threshold"]), label)
        return Window(sym, float(obj["center"]), float(obj["half_width"]), label)
    if tag == "DistanceShell":
        outer = obj.get("outer")
        return DistanceShell(
            region_from_json(obj["base"]),
            float(obj["inner"]),
            np.inf if outer is None else float(outer),
            strict_inner=bool(obj.get("strict_inner", False)),
            name=label,
        )
    if tag == "Complement":
        return Complement(region_from_json(obj["base"]), label)
    if tag == "Intersection":
        return Intersection(tuple(region_from_json(p) for p in obj["parts"]), label)
    raise ValueError(f"unknown region tag {tag!r}")


def region_indicator(r: Region, x: np.ndarray) -> np.ndarray:
    return r.indicator(x)


# ---------------------------------------------------------------- distances


@dataclass(frozen=True)
class DistanceEstimate:
    distance: np.ndarray
    resolution: float
    exact: bool
    empty: bool = False


@dataclass(eq=False)
class DistanceResolver:
    """Sample budget and seed for distances to regions without closed form.

    Candidate points of the region are drawn from a dense angular lattice
    (d = 1) or from uniform samples (d >= 2), filtered by the indicator and
    stored in a KD tree. The minimum over candidates is an upper estimate of
    the true distance. For d >= 2 each of the nearest candidates is then
    pulled back along the product geodesic to the first point that is still
    inside the region (coarse scan plus bisection), which keeps the estimate
    an upper bound while tightening it well below the sampling resolution.
    """

    budget: int = 200_000
    seed: int = 0
    lattice: int = 720
    neighbours: int = 24
    refine_steps: int = 12
    _cache: dict = field(default_factory=dict, repr=False)

    def candidates(self, region: Region) -> tuple[np.ndarray, float]:
        key = id(region)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is region:
            return hit[1], hit[2]
        d = region.d
        if d == 1:
            nt = self.lattice
            theta = (np.arange(nt) + 0.5) * np.pi / nt
            theta = np.concatenate([[0.0], theta, [np.pi]])
            pts = []
            for t in theta:
                nphi = max(1, int(np.ceil(2 * nt * np.sin(t))))
                phi = 2 * np.pi * np.arange(nphi) / nphi
                pts.append(from_angles(np.full(nphi, t), phi))
            cand = np.concatenate(pts)[:, None, :]
            # lattice spacing is pi / nt in both directions; covering radius below it
            resolution = np.pi / nt
        else:
            rng = np.random.default_rng([self.seed, d, 7])
            cand = sample_uniform(d, self.budget, rng)
            resolution = float("nan")
        inside = region.indicator(cand)
        cand = cand[inside]
        if d > 1 and len(cand) > 1:
            tree_tmp = cKDTree(cand.reshape(len(cand), -1))
            probe = cand[: min(len(cand), 2000)]
            _, idx = tree_tmp.query(probe.reshape(len(probe), -1), k=2)
            resolution = float(np.median(product_distance(probe, cand[idx[:, 1]])))
        self._cache[key] = (region, cand, resolution)
        return cand, resolution

    def tree(self, region: Region) -> cKDTree | None:
        key = ("tree", id(region))
        hit = self._cache.get(key)
        if hit is not None and hit[0] is region:
            return hit[1]
        cand, _ = self.candidates(region)
        tree = cKDTree(cand.reshape(len(cand), -1)) if len(cand) else None
        self._cache[key] = (region, tree)
        return tree


_DEFAULT_RESOLVER = DistanceResolver()


def _closed_form_distance(r: Region, x: np.ndarray) -> np.ndarray | None:
    if isinstance(r, WholeSpace):
        return np.zeros(x.shape[:-2])
    if isinstance(r, CapProduct):
        return r.distance(x)
    if isinstance(r, Complement) and isinstance(r.base, CapProduct):
        cap = r.base
        ang = angle(x, cap.axes)
        inside = np.all(ang <= cap.radii, axis=-1)
        margin = np.min(cap.radii - ang, axis=-1)
        return np.where(inside, np.maximum(margin, 0.0), 0.0)
    return None


def geodesic_point(x: np.ndarray, y: np.ndarray, t) -> np.ndarray:
    """Point at fraction ``t`` of the product geodesic from x to y (per-sphere slerp)."""
    th = angle(x, y)[..., None]
    t = np.asarray(t, dtype=float)[..., None, None] if np.ndim(t) else t
    s = np.sin(th)
    small = s < 1e-12
    safe = np.where(small, 1.0, s)
    a = np.where(small, 1.0 - t, np.sin((1.0 - t) * th) / safe)
    b = np.where(small, t, np.sin(t * th) / safe)
    p = a * x + b * y
    return p / np.linalg.norm(p, axis=-1, keepdims=True)


def _refined_distance(r: Region, x: np.ndarray, near: np.ndarray, steps: int) -> np.ndarray:
    """x: (m, d, 3) outside r; near: (m, k, d, 3) points of r. Returns the
    shortest geodesic length to a point of r found on the segments x -> near."""
    m, k = near.shape[:2]
    xb = np.broadcast_to(x[:, None], near.shape)
    full = product_distance(xb, near)  # (m, k)
    if steps <= 0:
        return full.min(axis=1)
    grid_t = np.arange(1, steps + 1) / steps
    # coarse scan: first t on the grid that lands inside r
    first = np.ones((m, k))
    prev = np.zeros((m, k))
    found = np.zeros((m, k), dtype=bool)
    for t in grid_t:
        inside = r.indicator(geodesic_point(xb, near, np.full((m, k), t))) & ~found
        first = np.where(inside, t, first)
        prev = np.where(inside, t - 1.0 / steps, prev)
        found |= inside
    lo, hi = prev, first
    for _ in range(10):
        mid = 0.5 * (lo + hi)
        inside = r.indicator(geodesic_point(xb, near, mid))
        hi = np.where(inside, mid, hi)
        lo = np.where(inside, lo, mid)
    return (hi * full).min(axis=1)


def region_distance(r: Region, x: np.ndarray, resolver: DistanceResolver | None = None) -> DistanceEstimate:
    """Distance from each point of ``x`` to the region ``r``.

    Exact for caps, cap complements and the whole space; otherwise an upper
    estimate from the resolver's candidate set, with its resolution.
    """
    x = _as_batch(x, r.d)
    exact = _closed_form_distance(r, x)
    if exact is not None:
        return DistanceEstimate(exact, 0.0, True)
    resolver = resolver or _DEFAULT_RESOLVER
    cand, resolution = resolver.candidates(r)
    shape = x.shape[:-2]
    flat = x.reshape(-1, r.d, 3)
    if len(cand) == 0:
        warnings.warn(f"region {r.label} appears empty; distance set to +inf", RuntimeWarning, stacklevel=2)
        return DistanceEstimate(np.full(shape, np.inf), resolution, False, empty=True)
    out = np.zeros(len(flat))
    inside = r.indicator(flat)
    todo = np.flatnonzero(~inside)
    if len(todo):
        tree = resolver.tree(r)
        k = 1 if r.d == 1 else min(resolver.neighbours, len(cand))
        for start in range(0, len(todo), 50_000):
            sel = todo[start : start + 50_000]
            pts = flat[sel]
            _, idx = tree.query(pts.reshape(len(pts), -1), k=k)
            if k == 1:
                out[sel] = product_distance(pts, cand[idx])
            else:
                out[sel] = _refined_distance(r, pts, cand[idx], resolver.refine_steps)
    return DistanceEstimate(out.reshape(shape), resolution, False)


def set_distance(U: Region, V: Region) -> float:
    """Distance between two regions, closed form for cap configurations."""
    if isinstance(U, Complement) and not isinstance(V, Complement):
        U, V = V, U
    if isinstance(U, CapProduct) and isinstance(V, CapProduct):
        sep = np.maximum(angle(U.axes, V.axes) - U.radii - V.radii, 0.0)
        return float(np.sqrt(np.sum(sep**2)))
    if isinstance(U, CapProduct) and isinstance(V, Complement) and isinstance(V.base, CapProduct):
        outer = V.base
        # the closest point of the complement leaves the outer cap on a single sphere
        gap = outer.radii - angle(U.axes, outer.axes) - U.radii
        return float(max(np.min(gap), 0.0))
    if isinstance(U, WholeSpace) or isinstance(V, WholeSpace):
        return 0.0
    raise NotImplementedError(f"no closed-form distance between {type(U).__name__} and {type(V).__name__}")


# ---------------------------------------------------------------- quadrature


@dataclass(frozen=True, eq=False)
class SphereRule:
    """Quadrature nodes on one sphere (area pi) on a theta x phi tensor lattice."""

    cos_nodes: np.ndarray
    cos_weights: np.ndarray
    n_phi: int

    @property
    def theta(self) -> np.ndarray:
        return np.arccos(self.cos_nodes)

    @property
    def phi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_phi) / self.n_phi

    @cached_property
    def points(self) -> np.ndarray:
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return from_angles(th, ph).reshape(-1, 3)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.outer(self.cos_weights, np.full(self.n_phi, 2 * np.pi / self.n_phi)) / 4.0
        return w.ravel()


def sphere_rule(n_theta: int, n_phi: int | None = None, breaks: tuple[float, ...] = ()) -> SphereRule:
    """Gauss-Legendre in cos(theta) (optionally composite, split at the given
    theta values) times a uniform phi grid."""
    n_phi = n_theta if n_phi is None else n_phi
    if n_theta < 1 or n_phi < 1:
        raise ValueError("need at least one node per direction")
    edges = np.sort(np.concatenate([[-1.0, 1.0], np.cos(np.asarray(breaks, dtype=float))]))
    x, w = np.polynomial.legendre.leggauss(n_theta)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    return SphereRule(np.concatenate(nodes), np.concatenate(weights), n_phi)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor product of identical per-sphere rules over d spheres."""

    d: int
    n: int
    rule: SphereRule
    kind: str = "gauss-legendre-cos x uniform-phi"

    @property
    def size(self) -> int:
        return len(self.rule.weights) ** self.d

    @cached_property
    def points(self) -> np.ndarray:
        p = self.rule.points
        idx = np.indices((len(p),) * self.d).reshape(self.d, -1).T
        return p[idx]

    @cached_property
    def weights(self) -> np.ndarray:
        w = self.rule.weights
        out = w
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, w).ravel()
        return out

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, np.asarray(values).ravel()))

    def to_json(self) -> dict[str, Any]:
        return {
            "tag": "QuadratureGrid",
            "d": self.d,
            "n": self.n,
            "rule": self.kind,
            "cos_nodes": self.rule.cos_nodes.tolist(),
            "cos_weights": self.rule.cos_weights.tolist(),
            "n_phi": self.rule.n_phi,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "QuadratureGrid":
        rule = SphereRule(np.array(obj["cos_nodes"]), np.array(obj["cos_weights"]), int(obj["n_phi"]))
        return cls(int(obj["d"]), int(obj["n"]), rule, obj.get("rule", "gauss-legendre-cos x uniform-phi"))


def gauss_grid(d: int, n: int, max_points: int = MAX_GRID_POINTS) -> QuadratureGrid:
    """Tensor grid with n Gauss-Legendre nodes in cos(theta) and n uniform
    phi nodes per sphere.

    Exact for per-sphere polynomials in cos(theta) of degree <= 2n - 1 times
    trigonometric polynomials in phi of degree <= n - 1.
    """
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    size = float(n * n) ** d
    if size > max_points:
        raise GridBudgetError(f"grid with (n^2)^d = {size:.3g} points exceeds the budget {max_points}")
    return QuadratureGrid(d, n, sphere_rule(n))


# ---------------------------------------------------------------- sampling


def sample_uniform(d: int, m: int, seed: int | np.random.Generator = 0) -> np.ndarray:
    """i.i.d. uniform points of (S^2)^d, shape ``(m, d, 3)``."""
    if m < 1:
        raise ValueError("need at least one sample")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.uniform(-1.0, 1.0, size=(m, d))
    phi = rng.uniform(0.0, 2 * np.pi, size=(m, d))
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for task ``keys`` derived from ``seed``."""
    return np.random.default_rng([int(seed), *[int(k) for k in keys]])


def point_hash(x: np.ndarray) -> int:
    digest = hashlib.sha256(np.ascontiguousarray(np.asarray(x, dtype=float)).tobytes()).digest()
    return int.from_bytes(digest[:8], "little")


def points_to_json(x: np.ndarray) -> list:
    return np.asarray(x, dtype=float).tolist()


def points_from_json(obj: list) -> np.ndarray:
    return np.asarray(obj, dtype=float)

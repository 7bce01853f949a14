"""Real-valued symbols on (S^2)^d.

A symbol is stored as a sum of *separable* terms (a coefficient times a
product of per-sphere factors) plus an optional list of general callables.
The separable part is what lets Toeplitz matrices be assembled as sums of
Kronecker products; the general part falls back to full quadrature.

Points are numpy arrays of shape ``(..., d, 3)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np


@dataclass(frozen=True, eq=False)
class SphereFactor:
    """A function on a single sphere, vectorized over ``(..., 3)`` arrays.

    ``degree`` is the polynomial degree in the coordinates, or ``None`` when
    the factor is not a polynomial (no exactness guarantee).
    """

    func: Callable[[np.ndarray], np.ndarray]
    degree: int | None
    label: str

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(v), dtype=float)


def coordinate(c: int) -> SphereFactor:
    if c not in (0, 1, 2):
        raise ValueError(f"coordinate index must be 0, 1 or 2, got {c}")
    return SphereFactor(lambda v, c=c: v[..., c], 1, f"x{c + 1}")


def one_minus_x3() -> SphereFactor:
    return SphereFactor(lambda v: 1.0 - v[..., 2], 1, "1-x3")


# A term is (coefficient, {sphere index: factor}); an empty map is a constant.
Term = tuple[float, Mapping[int, SphereFactor]]


@dataclass(frozen=True, eq=False)
class Symbol:
    d: int
    terms: tuple[Term, ...] = ()
    extra: tuple[tuple[Callable[[np.ndarray], np.ndarray], int | None], ...] = ()
    label: str = "f"
    spec: str | None = field(default=None)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-2:] != (self.d, 3):
            raise ValueError(f"expected points of shape (..., {self.d}, 3), got {x.shape}")
        out = np.zeros(x.shape[:-2])
        for coef, factors in self.terms:
            val = np.full(x.shape[:-2], float(coef))
            for j, fac in factors.items():
                val = val * fac(x[..., j, :])
            out = out + val
        for func, _ in self.extra:
            out = out + np.asarray(func(x), dtype=float)
        return out

    @property
    def separable(self) -> bool:
        return not self.extra

    @property
    def degree(self) -> int | None:
        """Maximal per-sphere polynomial degree, ``None`` if unknown."""
        deg = 0
        for _, factors in self.terms:
            for fac in factors.values():
                if fac.degree is None:
                    return None
                deg = max(deg, fac.degree)
        for _, edeg in self.extra:
            if edeg is None:
                return None
            deg = max(deg, edeg)
        return deg

    def __add__(self, other: "Symbol | float") -> "Symbol":
        if not isinstance(other, Symbol):
            return self + constant(self.d, float(other))
        if other.d != self.d:
            raise ValueError("cannot add symbols on different products of spheres")
        return Symbol(
            self.d,
            self.terms + other.terms,
            self.extra + other.extra,
            label=f"({self.label})+({other.label})",
        )

    __radd__ = __add__

    def __mul__(self, s: float) -> "Symbol":
        s = float(s)
        extra = tuple((lambda x, g=g, s=s: s * g(x), deg) for g, deg in self.extra)
        return Symbol(
            self.d,
            tuple((s * c, fs) for c, fs in self.terms),
            extra,
            label=f"{s:g}*({self.label})",
        )

    __rmul__ = __mul__

    def __neg__(self) -> "Symbol":
        neg = self * -1.0
        spec = None if self.spec is None else f"-({self.spec})"
        return Symbol(neg.d, neg.terms, neg.extra, label=f"-({self.label})", spec=spec)

    def __sub__(self, other: "Symbol | float") -> "Symbol":
        return self + (-other if isinstance(other, Symbol) else -float(other))

    def relabel(self, label: str, spec: str | None = None) -> "Symbol":
        return Symbol(self.d, self.terms, self.extra, label=label, spec=spec)


def constant(d: int, value: float) -> Symbol:
    return Symbol(d, ((float(value), {}),), label=f"{value:g}", spec=f"const:{value!r}")


def on_sphere(d: int, j: int, factor: SphereFactor, coef: float = 1.0) -> Symbol:
    if not 0 <= j < d:
        raise ValueError(f"sphere index {j} out of range for d={d}")
    lab = factor.label if d == 1 else f"{factor.label}[{j}]"
    return Symbol(d, ((float(coef), {j: factor}),), label=lab)


def from_function(
    d: int, func: Callable[[np.ndarray], np.ndarray], label: str, degree: int | None = None
) -> Symbol:
    """Wrap an arbitrary vectorized function of ``(..., d, 3)`` points."""
    return Symbol(d, (), ((func, degree),), label=label)


def indicator(region) -> Symbol:
    sym = from_function(region.d, lambda x: region.indicator(x).astype(float), f"1[{region.label}]")
    return Symbol(sym.d, sym.terms, sym.extra, label=sym.label)


_NAMED = {
    "x1": lambda d: sum_over_spheres(d, coordinate(0)),
    "x2": lambda d: sum_over_spheres(d, coordinate(1)),
    "x3": lambda d: sum_over_spheres(d, coordinate(2)),
    "1-x3": lambda d: sum_over_spheres(d, one_minus_x3()),
}


def sum_over_spheres(d: int, factor: SphereFactor) -> Symbol:
    terms = tuple((1.0, {j: factor}) for j in range(d))
    lab = factor.label if d == 1 else f"sum_j {factor.label}[j]"
    return Symbol(d, terms, label=lab)


def parse_symbol(spec: str, d: int) -> Symbol:
    """Build a symbol from a short text spec.

    Accepted: ``one``, ``zero``, ``const:<v>``, ``x1``, ``x2``, ``x3``,
    ``1-x3`` (summed over spheres when d > 1), and ``-<spec>``.
    """
    s = spec.strip()
    if s.startswith("-(") and s.endswith(")"):
        return -parse_symbol(s[2:-1], d)
    if s.startswith("-") and s[1:] in _NAMED:
        return -parse_symbol(s[1:], d)
    if s == "one":
        return constant(d, 1.0).relabel("1", spec="one")
    if s == "zero":
        return constant(d, 0.0).relabel("0", spec="zero")
    if s.startswith("const:"):
        v = float(s.split(":", 1)[1])
        return constant(d, v)
    if s in _NAMED:
        return _NAMED[s](d).relabel(s, spec=s)
    raise ValueError(f"unknown symbol spec {spec!r}")

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from btspheres.geometry import (
    NORTH,
    CapProduct,
    Complement,
    DimensionError,
    DistanceResolver,
    GridBudgetError,
    Intersection,
    QuadratureGrid,
    SubLevel,
    SuperLevel,
    WholeSpace,
    angle,
    from_angles,
    gauss_grid,
    geodesic_point,
    product_distance,
    product_point,
    region_distance,
    region_from_json,
    sample_uniform,
    set_distance,
    sphere_rule,
    to_angles,
)
from btspheres.symbols import parse_symbol

thetas = st.floats(0.0, math.pi)
phis = st.floats(0.0, 2 * math.pi)
EQUATOR = np.array([1.0, 0.0, 0.0])


def test_angle_examples():
    assert angle(NORTH, NORTH) == 0.0
    assert angle(NORTH, -NORTH) == pytest.approx(math.pi)
    assert angle(NORTH, EQUATOR) == pytest.approx(math.pi / 2)


def test_product_distance_examples():
    x = product_point(NORTH, NORTH)
    assert product_distance(x, x) == 0.0
    y = product_point(EQUATOR, EQUATOR)
    assert product_distance(x, y) == pytest.approx(math.sqrt(2) * math.pi / 2)
    with pytest.raises(DimensionError):
        product_distance(x, product_point(NORTH))


@given(thetas, phis)
def test_angles_roundtrip(t, p):
    v = from_angles(t, p)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    t2, _ = to_angles(v)
    assert t2 == pytest.approx(t, abs=1e-7)


@given(st.integers(1, 4), st.integers(0, 2**31))
def test_product_distance_is_a_metric(d, seed):
    x, y, z = sample_uniform(d, 3, seed)
    dxy = product_distance(x, y)
    assert dxy == pytest.approx(product_distance(y, x))
    assert dxy <= product_distance(x, z) + product_distance(z, y) + 1e-12
    assert dxy <= math.pi * math.sqrt(d) + 1e-12


def test_indicator_examples():
    f = parse_symbol("x3", 1)
    x = product_point(from_angles(1.0, 0.3))
    assert WholeSpace(1).indicator(x)
    pts = sample_uniform(1, 1000, 3)
    assert not CapProduct.around(NORTH[None], 0.0).indicator(pts).any()
    t = float(f(x)) + 0.1
    assert SubLevel(f, t).indicator(x)
    assert not SuperLevel(f, t).indicator(x)


@given(thetas, st.floats(0.0, 2.5))
def test_cap_distance_is_theta_minus_radius(theta, a):
    x = product_point(from_angles(theta, 0.7))
    got = region_distance(CapProduct.around(NORTH[None], a), x)
    assert got.exact
    assert float(got.distance) == pytest.approx(max(theta - a, 0.0), abs=1e-12)


def test_sampled_distance_matches_closed_form_d1():
    # the same cap, presented as a level set, goes through the sampled resolver
    f = parse_symbol("x3", 1)
    a = 0.8
    region = SuperLevel(f, math.cos(a))
    x = product_point(from_angles(np.linspace(0.9, 3.0, 12), 0.4)[:, None, :]).reshape(12, 1, 3)
    got = region_distance(region, x)
    assert not got.exact
    exact = angle(x[:, 0], NORTH) - a
    assert np.all(got.distance >= exact - 1e-12)
    assert np.all(got.distance - exact <= 2 * got.resolution)


def test_sampled_distance_is_refined_upper_bound_d2():
    f = parse_symbol("x3", 2)
    region = SuperLevel(f, 2 * math.cos(0.6))
    x = sample_uniform(2, 40, 11)
    x = x[~region.indicator(x)]
    got = region_distance(region, x, DistanceResolver(budget=50_000)).distance
    # a lower bound: the level set lies in the product of caps of radius acos(2cos(0.6) - 1)
    outer = CapProduct(np.tile(NORTH, (2, 1)), [math.acos(2 * math.cos(0.6) - 1)] * 2)
    assert np.all(got >= outer.distance(x) - 1e-9)


def test_complement_distance_and_set_distance():
    cap = CapProduct.around(NORTH[None], 2.0)
    x = product_point(NORTH)
    assert float(region_distance(Complement(cap), x).distance) == pytest.approx(2.0)
    U = CapProduct.around(NORTH[None], 0.5)
    assert set_distance(U, Complement(CapProduct.around(NORTH[None], 2.5))) == pytest.approx(2.0)
    assert set_distance(U, CapProduct.around(-NORTH[None], 0.5)) == pytest.approx(math.pi - 1.0)


def test_empty_region_distance_is_flagged():
    f = parse_symbol("x3", 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        got = region_distance(SuperLevel(f, 2.0), product_point(NORTH))
    assert got.empty and math.isinf(float(got.distance))


def test_region_json_roundtrip():
    f = parse_symbol("1-x3", 2)
    r = Intersection((Complement(CapProduct.around(np.tile(NORTH, (2, 1)), 0.4)), SubLevel(f, 0.5)))
    back = region_from_json(r.to_json())
    x = sample_uniform(2, 500, 5)
    assert np.array_equal(back.indicator(x), r.indicator(x))


def test_geodesic_point_endpoints():
    x, y = sample_uniform(3, 2, 9)
    assert np.allclose(geodesic_point(x, y, 0.0), x)
    assert np.allclose(geodesic_point(x, y, 1.0), y)
    mid = geodesic_point(x, y, 0.5)
    assert product_distance(x, mid) == pytest.approx(0.5 * product_distance(x, y))


# ---------------------------------------------------------------- quadrature


def test_grid_total_weight():
    g = gauss_grid(1, 2)
    assert g.weights.sum() == pytest.approx(math.pi, abs=1e-14)


def test_grid_cos_squared():
    g = gauss_grid(1, 4)
    assert g.integrate(g.points[:, 0, 2] ** 2) == pytest.approx(math.pi / 3, abs=1e-14)


@given(st.lists(st.floats(-2, 2), min_size=10, max_size=10))
def test_grid_exact_for_cubics(c):
    # sum of monomials x^a y^b z^e with a + b + e <= 3; odd powers of x or y vanish,
    # z^2 -> pi/3, x^2 z -> 0, z -> 0 and 1 -> pi
    g = gauss_grid(1, 4)
    x, y, z = g.points[:, 0].T
    vals = c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * y + c[5] * z**2 + c[6] * x**2 * z + c[7] * x * y * z + c[8] * z**3 + c[9] * x**2
    exact = c[0] * math.pi + c[5] * math.pi / 3 + c[9] * math.pi / 3
    assert g.integrate(vals) == pytest.approx(exact, abs=1e-12)


def test_composite_rule_splits_at_breaks():
    r = sphere_rule(8, 4, breaks=(0.5,))
    assert len(r.cos_nodes) == 16
    assert r.weights.sum() == pytest.approx(math.pi)
    assert np.sum(r.cos_nodes > math.cos(0.5)) == 8


def test_grid_budget_and_json():
    with pytest.raises(GridBudgetError):
        gauss_grid(3, 200)
    g = gauss_grid(2, 5)
    back = QuadratureGrid.from_json(g.to_json())
    assert np.array_equal(back.weights, g.weights)


def test_uniform_moments():
    x = sample_uniform(1, 1_000_000, 0)[:, 0, 2]
    assert abs(x.mean()) < 3 / math.sqrt(1e6)
    sigma = np.std(x**2) / math.sqrt(len(x))
    assert abs(np.mean(x**2) - 1 / 3) < 3 * sigma


def test_uniform_reproducible():
    assert np.array_equal(sample_uniform(2, 10, 4), sample_uniform(2, 10, 4))

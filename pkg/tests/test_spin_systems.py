import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from btspheres.geometry import NORTH, CapProduct, angle, from_angles, product_distance, sample_uniform
from btspheres.quantization import HoloBasis, toeplitz_matrix
from btspheres.spectral import eigh
from btspheres.spin_systems import (
    SpinGraph,
    TameSpinSystem,
    Weight,
    build_system,
    calibrate_weighted_estimate,
    chain_graph,
    derivative_bounds,
    grid_graph,
    mid_spectrum_indices,
    model_kernel,
    ring_graph,
    weighted_estimate_check,
    weight_mollified,
    weight_rho0,
    zero_system,
)


def aligned(d):
    return np.tile(NORTH, (d, 1))


def test_graph_examples():
    r = ring_graph(3)
    assert len(r.edges) == 3 and np.all(r.degrees == 2)
    g = grid_graph(2)
    assert len(g.edges) == 4 and g.degrees.max() == 2 and g.valence == 4
    assert chain_graph(5).valence == 2 and len(chain_graph(5).edges) == 4
    with pytest.raises(ValueError):
        SpinGraph(3, (((0, 1), (1, 0)),), 2)
    with pytest.raises(ValueError):
        SpinGraph(4, (((0, 1), (0, 2), (0, 3)),), 2)


def test_single_edge_chain():
    g = build_system("chain", 2, "heisenberg", 1.7)
    x = sample_uniform(2, 50, 1)
    assert np.allclose(g(x), 1.7 * np.sum(x[:, 0] * x[:, 1], axis=-1))
    assert derivative_bounds(g, samples=500).sup == pytest.approx(1.7)


@pytest.mark.parametrize("L", [2, 5, 9])
def test_aligned_and_antiparallel(L):
    g = build_system("chain", L, "heisenberg", 0.8)
    assert g(aligned(L)) == pytest.approx(0.8 * (L - 1))
    alt = np.array([NORTH * (-1) ** i for i in range(L)])
    assert g(alt) == pytest.approx(-0.8 * (L - 1))


@pytest.mark.parametrize("topology,L,model", [("chain", 4, "heisenberg"), ("ring", 5, "xy"), ("grid", 3, "ising")])
def test_evaluate_matches_brute_force(topology, L, model):
    g = build_system(topology, L, model, 1.3)
    A = model_kernel(model, 1.3).A
    x = sample_uniform(g.d, 1000, 7)
    brute = np.zeros(1000)
    for a, b in g.graph.edges:
        brute += np.einsum("mi,ij,mj->m", x[:, a], A, x[:, b])
    assert np.allclose(g(x), brute, rtol=0, atol=1e-13)
    # the separable symbol is the same function
    assert np.allclose(g.to_symbol()(x), brute, atol=1e-13)


def test_unknown_model_and_json_roundtrip():
    with pytest.raises(ValueError):
        build_system("ring", 3, "potts")
    with pytest.raises(ValueError):
        build_system("tree", 3, "ising")
    g = build_system("grid", 2, "ising", -0.5)
    back = TameSpinSystem.from_json(g.to_json())
    x = sample_uniform(4, 20, 3)
    assert np.array_equal(back(x), g(x)) and back.graph.edges == g.graph.edges


def test_toeplitz_of_zero_system():
    g = zero_system("ring", 3)
    assert not np.any(toeplitz_matrix(HoloBasis(2, 3), g.to_symbol()).matrix)


@pytest.mark.parametrize("model", ["heisenberg", "ising", "xy"])
def test_derivative_bounds_sound(model):
    b = derivative_bounds(build_system("ring", 4, model, 1.0), samples=3000)
    assert b.sound


def test_heisenberg_sup_tight_and_gradient_scaling():
    ratios = []
    for L in (4, 16, 64):
        g = build_system("chain", L, "heisenberg")
        b = derivative_bounds(g, samples=500)
        assert b.sup == pytest.approx(L - 1)
        assert g(aligned(L)) == pytest.approx(b.sup)
        ratios.append(b.grad / math.sqrt(L))
    assert max(ratios) / min(ratios) <= 2


# ---------------------------------------------------------------- weights


def test_weight_rho0_examples():
    U = CapProduct.around(NORTH[None], 0.5)
    c0 = 0.3
    assert weight_rho0(U, c0, NORTH[None]) == 0.0
    at = lambda t: from_angles(t, 0.0)[None]
    assert weight_rho0(U, c0, at(0.5 + c0)) == pytest.approx(0.0, abs=1e-12)
    assert weight_rho0(U, c0, at(0.5 + c0 + 1.0)) == pytest.approx(1.0)


@given(st.integers(0, 2**31))
def test_weight_rho0_lipschitz(seed):
    U = CapProduct(np.tile(NORTH, (2, 1)), [0.4, 0.7])
    x, y = sample_uniform(2, 2, seed)
    assert abs(weight_rho0(U, 0.2, x) - weight_rho0(U, 0.2, y)) <= product_distance(x, y) + 1e-12


def test_mollified_weight_examples():
    U = CapProduct.around(NORTH[None], 1.0)
    w = Weight(U, 0.2, budget=2000, seed=4)
    assert weight_mollified(w, NORTH[None]).value == 0.0
    far = from_angles(1.0 + 3 * 0.2 + 0.5, 1.0)[None]
    v = weight_mollified(w, far)
    dist = 1.1
    assert v.value >= dist / 2
    assert v.value <= dist + 3 * v.stderr
    assert weight_mollified(w, far) is w.evaluate(far)  # cached per point
    assert Weight(U, 0.2, budget=2000, seed=4).evaluate(far) == v  # reproducible
    with pytest.raises(ValueError):
        Weight(U, 0.2, budget=10)


def test_mollified_weight_statistical_lipschitz():
    U = CapProduct(np.tile(NORTH, (2, 1)), [0.5, 0.5])
    w = Weight(U, 0.25, budget=1000, seed=2)
    x = sample_uniform(2, 40, 8)
    y = sample_uniform(2, 40, 9)
    for a, b in zip(x, y):
        va, vb = w.evaluate(a), w.evaluate(b)
        assert abs(va.value - vb.value) <= product_distance(a, b) + 3 * (va.stderr + vb.stderr)
        assert va.value <= U.distance(a) + 3 * va.stderr + 1e-12


# ---------------------------------------------------------------- weighted estimate harness


@pytest.fixture(scope="module")
def small_instance():
    g = build_system("chain", 2, "heisenberg")
    N = 6
    spec = eigh(toeplitz_matrix(HoloBasis(N, 2), g.to_symbol()).matrix)
    return g, N, spec


def test_unweighted_rate_gives_mass(small_instance):
    g, N, spec = small_instance
    pair = spec.pair(mid_spectrum_indices(spec.eigenvalues, 1)[0])
    r = weighted_estimate_check(g, N, pair, C=0.5, c=0.0, samples=4000, seed=1)
    assert r.value == pytest.approx(r.mass_W) and 0 <= r.value <= 1


def test_whole_space_window_gives_zero(small_instance):
    g, N, spec = small_instance
    r = weighted_estimate_check(g, N, spec.pair(0), C=100.0, c=1.0, samples=1000)
    assert r.value == 0.0 and r.mass_W == 0.0


def test_variance_explosion_aborts(small_instance):
    g, N, spec = small_instance
    with pytest.raises(FloatingPointError):
        weighted_estimate_check(g, N, spec.pair(0), C=0.25, c=40.0, samples=500, seed=0, max_rel_error=0.01)


def test_calibration_picks_grid_values(small_instance):
    g, N, spec = small_instance
    pair = spec.pair(mid_spectrum_indices(spec.eigenvalues, 1)[0])
    cal = calibrate_weighted_estimate(g, N, pair, samples=20_000)
    assert cal.C in (0.25, 0.5, 0.75, 1.0, 1.5) and cal.c in (0.25, 0.5, 1.0, 1.5, 2.0)
    assert cal.mass_W >= 0.01 and cal.rel_error <= 0.05


def test_mid_spectrum_indices_skip_degenerate_copies():
    lam = np.array([-2.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0])
    idx = mid_spectrum_indices(lam, 3)
    assert idx == [1, 3, 6]

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from btspheres.concentration import (
    agmon_check,
    agmon_induction_integral,
    concentration_sweep,
    decay_fit,
    diagonalize,
    forbidden_mass,
    ground_state_report,
    level_region,
    mass_grid,
    minimal_stage_constant,
    select_eigenpair,
    shell_count,
    shell_masses,
    weighted_commutator_norm,
    weighted_integrals,
)
from btspheres.geometry import NORTH, CapProduct, Complement, WholeSpace, angle, gauss_grid, region_distance
from btspheres.quantization import HoloBasis, husimi_on_grid, toeplitz_matrix
from btspheres.symbols import constant, from_function, parse_symbol


def pole_rho(cap=math.pi / 2):
    return lambda x: np.minimum(angle(x, NORTH[None]).reshape(x.shape[:-2] + (1,))[..., 0], cap)


def test_decay_fit_exact_models():
    N = [25, 50, 100, 150, 200]
    fit = decay_fit([(n, math.exp(-2 * math.sqrt(n))) for n in N], 0.5)
    assert fit.c == pytest.approx(2.0, abs=1e-8) and fit.r2 == pytest.approx(1.0, abs=1e-8)
    assert decay_fit([(n, 0.3) for n in N], 0.5).c == 0.0
    assert decay_fit([(n, math.exp(-3 * n ** (1 / 3))) for n in N], 1 / 3).c == pytest.approx(3.0, abs=1e-8)
    with pytest.raises(ValueError):
        decay_fit([(n, 0.0) for n in N], 0.5)


def test_select_eigenpair_mid_tie_break():
    spec = diagonalize(HoloBasis(3), parse_symbol("x3", 1))
    # eigenvalues +-0.2 and +-0.6; both +-0.2 are nearest 0
    assert select_eigenpair(spec, "mid").eigenvalue == pytest.approx(-0.2)
    assert select_eigenpair(spec, "ground").eigenvalue == pytest.approx(-0.6)
    assert select_eigenpair(spec, "top").eigenvalue == pytest.approx(0.6)


def test_level_region_is_exact_cap_for_axial_symbols():
    f = parse_symbol("1-x3", 1)
    r = level_region(f, 0.5, "<=")
    assert isinstance(r, CapProduct) and r.radii[0] == pytest.approx(math.acos(0.5))
    assert isinstance(level_region(f, 0.5, ">="), Complement)
    assert isinstance(level_region(f, 3.0, "<="), WholeSpace)


def test_eigenvalue_identity():
    basis = HoloBasis(12)
    f = parse_symbol("x3", 1)
    spec = diagonalize(basis, f)
    grid = mass_grid(basis)
    fv = f(grid.points)
    for i in (0, 5, 12):
        p = spec.pair(i)
        (I,) = weighted_integrals(basis, p.vector, grid, [fv - p.eigenvalue])
        assert abs(I) < 1e-12


def test_forbidden_mass_beyond_diameter_is_zero():
    basis = HoloBasis(10)
    f = parse_symbol("x3", 1)
    pair = select_eigenpair(diagonalize(basis, f), "mid")
    rep = forbidden_mass(basis, f, pair, eps=4.0)
    assert rep.mass == 0.0 and rep.mass_mirror == 0.0


def test_forbidden_mass_is_symmetric_for_x3():
    basis = HoloBasis(20)
    f = parse_symbol("x3", 1)
    spec = diagonalize(basis, f)
    rep = forbidden_mass(basis, f, spec.pair(10), eps=0.3)  # eigenvalue 0
    assert rep.mass == pytest.approx(rep.mass_mirror, rel=1e-10)
    assert rep.mass_two_sided == pytest.approx(rep.mass + rep.mass_mirror)


def test_concentration_sweep_decreases():
    reps, fit = concentration_sweep([20, 40, 60, 80], parse_symbol("x3", 1), 0.4)
    m = [r.mass for r in reps]
    assert all(b < a for a, b in zip(m, m[1:]))
    assert fit.c > 0


def test_shells_refusal_and_override():
    basis = HoloBasis(100)
    f = parse_symbol("x3", 1)
    pair = select_eigenpair(diagonalize(basis, f), "mid")
    assert shell_count(100, 0.4, 1.0) < 2
    with pytest.raises(ValueError):
        shell_masses(basis, f, pair, 0.4, 1.0)
    rep = shell_masses(basis, f, pair, 0.4, 1.0, n_shells=3)
    assert rep.override and rep.nonincreasing
    assert rep.masses[-1] <= rep.masses[0] * math.exp(-1)
    U0 = level_region(f, pair.eigenvalue + 0.4, ">=")
    g = mass_grid(basis)
    assert rep.masses[0] == pytest.approx(g.integrate(husimi_on_grid(basis, pair, g) * U0.indicator(g.points)))


def test_agmon_zero_weight_cases():
    basis = HoloBasis(30)
    f = parse_symbol("x3", 1)
    pair = select_eigenpair(diagonalize(basis, f), "mid")
    r0 = agmon_check(basis, f, pair, pole_rho(), 0.0, 1.0)
    assert r0.C_star == 0.0 and abs(r0.integral) < 1e-10 and not r0.flagged
    flat = agmon_check(basis, f, pair, lambda x: np.zeros(x.shape[:-2]), 0.2, 1.0)
    assert flat.C_star == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(ValueError):
        agmon_check(basis, f, pair, pole_rho(), 0.5, 1.0)


def test_agmon_small_weight_limit():
    basis = HoloBasis(30)
    f = parse_symbol("1-x3", 1)
    pair = diagonalize(basis, f).pair(0)
    reg = level_region(f, pair.eigenvalue, "<=")
    rho = lambda x: region_distance(reg, x).distance
    cs = [agmon_check(basis, f, pair, rho, a, 1.0).C_star for a in (0.1, 0.01, 0.001)]
    assert cs[2] < cs[1] < cs[0]


def test_induction_stage_zero_matches_agmon():
    basis = HoloBasis(25)
    f = parse_symbol("1-x3", 1)
    pair = diagonalize(basis, f).pair(0)
    rho = lambda x: np.sqrt(np.clip(f(x), 0, None))
    a = agmon_check(basis, f, pair, rho, 0.1, 1.0).integral
    assert agmon_induction_integral(basis, f, pair, 0, 0.1, 0.1, 0.0) == pytest.approx(a, rel=1e-12)
    assert agmon_induction_integral(basis, f, pair, 1, 0.1, 0.1, 1e6) < 0
    c1 = minimal_stage_constant(basis, f, pair, 1, 0.1, 0.1)
    assert agmon_induction_integral(basis, f, pair, 1, 0.1, 0.1, c1) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        agmon_induction_integral(basis, parse_symbol("x3", 1), pair, 1, 0.1, 0.1, 1.0)


def test_ground_state_zero_symbol():
    rep = ground_state_report([10, 20], constant(1, 0.0), 0.5)
    assert all(r.lambda0 == 0 and r.mass == 0 for r in rep.rows)


def test_ground_state_closed_form_mass():
    # ground state of 1 - x3 is the north coherent state: mass of {1 - x3 >= t} is (1 - t/2)^(N+1)
    rep = ground_state_report([10, 20, 40, 80], parse_symbol("1-x3", 1), 0.5)
    for r in rep.rows:
        assert r.mass == pytest.approx((1 - r.threshold / 2) ** (r.N + 1), rel=1e-10)
        assert r.lambda0 == pytest.approx(2 / (r.N + 2))


def test_commutator_constant_symbol_vanishes():
    assert weighted_commutator_norm(HoloBasis(8), constant(1, 2.0), pole_rho(), 0.1) < 1e-10
    with pytest.raises(NotImplementedError):
        weighted_commutator_norm(HoloBasis(2, 2), constant(2, 1.0), lambda x: np.zeros(x.shape[:-2]), 0.0)


@given(st.integers(3, 15), st.floats(0.01, 0.2))
def test_commutator_adjoint_symmetry(N, a):
    # the adjoint of e^{a rho}[f,S]e^{-a rho} is -e^{-a rho}[f,S]e^{a rho}, so a -> -a keeps the norm;
    # (rho, a) -> (-rho, -a) leaves the operator itself unchanged
    basis, f = HoloBasis(N), parse_symbol("x3", 1)
    rho = pole_rho()
    neg = lambda x: -rho(x)
    v1 = weighted_commutator_norm(basis, f, rho, a, breaks=(math.pi / 2,))
    v2 = weighted_commutator_norm(basis, f, rho, -a, breaks=(math.pi / 2,))
    v3 = weighted_commutator_norm(basis, f, neg, -a, breaks=(math.pi / 2,))
    assert v1 == pytest.approx(v2, rel=1e-8)
    assert v1 == pytest.approx(v3, rel=1e-10)


def test_commutator_unweighted_matches_matrix_route():
    # at alpha = 0 the norm is ||(1 - S) f S||, i.e. sqrt(||T(f^2) - T(f)^2||)
    N = 10
    basis = HoloBasis(N)
    f = parse_symbol("x3", 1)
    sq = from_function(1, lambda x: x[..., 0, 2] ** 2, "x3^2", degree=2)
    T1 = toeplitz_matrix(basis, f).matrix
    T2 = toeplitz_matrix(basis, sq, grid=gauss_grid(1, N + 4)).matrix
    ref = math.sqrt(np.linalg.eigvalsh(T2 - T1 @ T1).max())
    assert weighted_commutator_norm(basis, f, pole_rho(), 0.0) == pytest.approx(ref, rel=1e-8)

"""Star solves, outcome classification, boundary quantities."""

import json
import math

import numpy as np
import pytest

from tovds.constants import SI, Constants
from tovds.eos import EosSpec
from tovds.errors import AnalysisError
from tovds.integrate import StepControl, integrate_adaptive
from tovds.model import (
    HORIZON_DEGENERATE,
    MONOTONE_SHORT,
    NON_MONOTONE,
    UNTERMINATED,
    ModelInput,
    boundary_quantities,
    d2u_at_boundary,
    smallness_condition,
    solve_scaled,
    solve_star,
    vacuum_continuation_lambda0,
)
from tovds.odecore import FOUR_PI, ScalingParams, kappa, rhs_tov, rhs_scaled

GEOM = Constants(1.0, 1.0)
XI1_MU2 = 4.352874595946  # frozen from the fixed-step oracle in test_analysis


@pytest.fixture(scope="module")
def eos15():
    return EosSpec(A=1.0, gamma=1.5, c=1.0)


def lambda_from_beta(beta, u_c, eos, k=GEOM):
    return beta * FOUR_PI * k.G * eos.A1 * u_c**eos.mu / k.c2


@pytest.fixture(scope="module")
def star_m0(eos15):
    """gamma = 3/2 star with alpha = beta = 1e-3."""
    u_c = 1e-3
    inp = ModelInput(eos=eos15, Lambda=lambda_from_beta(1e-3, u_c, eos15),
                     constants=GEOM, u_c=u_c)
    return solve_star(inp)


def test_monotone_short_and_radius(star_m0):
    profile, outcome = star_m0
    assert outcome.kind == MONOTONE_SHORT
    R_plus = outcome.boundary.r_plus / profile.scaling.a
    assert abs(R_plus - XI1_MU2) / XI1_MU2 < 0.05


def test_profile_invariants(star_m0):
    profile, outcome = star_m0
    assert np.all(np.diff(profile.m) >= 0.0)
    assert np.all(profile.kappa > 0.0)
    assert np.all(profile.rho[profile.P > 0.0] > 0.0)
    # strictly decreasing pressure on the interior samples
    inside = profile.u > 0.0
    assert np.all(profile.dPdr[inside] < 0.0)
    assert np.all(np.diff(profile.r) > 0.0)


def test_boundary_quantities(star_m0):
    profile, outcome = star_m0
    b = outcome.boundary
    # du/dr at the boundary equals -B = -Q_+/(r_+^2 kappa_+)
    assert abs(b.du_dr_minus + b.B) / b.B < 1e-5
    # kappa_+ recomputed from (r_+, m_+, Lambda) matches to 1e-12
    kap = kappa(b.r_plus, b.m_plus, profile.Lambda, profile.constants)
    assert abs(kap - b.kappa_plus) <= 1e-12 * abs(kap)
    assert b.kappa_plus > 0.0 and b.Q_plus > 0.0 and b.B > 0.0


def test_lambda0_Q_plus_is_Gm(eos15):
    inp = ModelInput(eos=eos15, Lambda=0.0, constants=GEOM, rho_c=1e-2)
    profile, outcome = solve_star(inp)
    assert outcome.kind == MONOTONE_SHORT
    b = outcome.boundary
    assert b.Q_plus == pytest.approx(GEOM.G * b.m_plus, rel=1e-12)


def test_d2u_boundary_reduction_and_fd(star_m0):
    profile, outcome = star_m0
    b = outcome.boundary
    k = profile.constants
    val = d2u_at_boundary(b, profile.Lambda, k.c)
    # Lambda = 0 reduction
    red = d2u_at_boundary(b, 0.0, k.c)
    expected0 = (2 * b.Q_plus / (b.r_plus**3 * b.kappa_plus)
                 + 2 * b.Q_plus**2 / (k.c2 * b.r_plus**4 * b.kappa_plus**2))
    assert red == pytest.approx(expected0, rel=1e-14)
    # second finite difference of u near r_+ on the dense profile; one
    # Richardson level removes the O(h) term of the one-sided stencil
    u = profile.dense

    def second_diff(h):
        return (float(u(b.r_plus)[1]) - 2 * float(u(b.r_plus - h)[1])
                + float(u(b.r_plus - 2 * h)[1])) / h**2

    h = 1e-3 * b.r_plus
    fd = 2.0 * second_diff(h / 2) - second_diff(h)
    assert fd == pytest.approx(val, rel=1e-3)


def test_d2u_unit_conversion(star_m0):
    # converting the boundary data between unit systems scales the second
    # derivative by c_SI^2 / L0^2
    profile, outcome = star_m0
    b = outcome.boundary
    L0 = 7.3e3          # metres per geometrized length unit
    c_si = SI.c
    T0 = L0 / c_si
    M0 = c_si**2 * L0 / SI.G
    from tovds.model import BoundaryQuantities

    b_si = BoundaryQuantities(
        r_plus=b.r_plus * L0,
        m_plus=b.m_plus * M0,
        kappa_plus=b.kappa_plus,
        Q_plus=b.Q_plus * L0**3 / T0**2,
        B=b.B * L0 / T0**2,
        kappa_plus_prime=b.kappa_plus_prime / L0,
        du_dr_minus=b.du_dr_minus * L0 / T0**2,
    )
    Lam_si = profile.Lambda / L0**2
    val_geom = d2u_at_boundary(b, profile.Lambda, 1.0)
    val_si = d2u_at_boundary(b_si, Lam_si, c_si)
    assert val_si == pytest.approx(val_geom * c_si**2 / L0**2, rel=1e-10)


def test_einstein_static_unterminated(eos15):
    rho_c = 0.1
    P_c = eos15.pressure_of_density(rho_c)
    Lam = FOUR_PI * GEOM.G * (rho_c + 3 * P_c / GEOM.c2) / GEOM.c2
    L = 8 * math.pi * GEOM.G * rho_c / GEOM.c2 + Lam
    inp = ModelInput(eos=eos15, Lambda=Lam, constants=GEOM, rho_c=rho_c,
                     r_max=0.9 * math.sqrt(3.0 / L))
    profile, outcome = solve_star(inp)
    assert outcome.kind == UNTERMINATED
    assert float(np.max(np.abs(profile.P - P_c)) / P_c) < 1e-6
    assert not profile.rise_events()


def test_nonmonotone_near_gamma2(eos15):
    # gamma near 2, c large (alpha tiny), beta in [1/2, 1): the scaled-limit
    # oscillation makes the prolongation non-monotone
    eos = EosSpec(A=1.0, gamma=1.95, c=1.0)
    star = solve_scaled(alpha=1e-8, beta=0.75, eos=eos, R_max=30.0)
    assert star.kind == NON_MONOTONE
    assert star.first_rise_R is not None and star.first_rise_R > math.pi


def test_initial_rise_recorded():
    # beta above the germ coefficient: pressure rises from the center
    eos = EosSpec(A=1.0, gamma=1.5, c=1.0)
    star = solve_scaled(alpha=1e-3, beta=1.5, eos=eos, R_max=20.0,
                        germ_radius=1e-4)
    assert star.initial_rise
    assert star.kind in (NON_MONOTONE, HORIZON_DEGENERATE)
    assert star.first_rise_R is not None


def test_horizon_degenerate_diagnostics(eos15):
    star = solve_scaled(alpha=1e-3, beta=1.2, eos=eos15, R_max=60.0)
    assert star.kind == HORIZON_DEGENERATE


def test_lambda0_short_grid_monotone(eos15):
    for rho_c in np.logspace(-3, -0.5, 5):
        inp = ModelInput(eos=eos15, Lambda=0.0, constants=GEOM, rho_c=float(rho_c),
                         ctrl=StepControl(rel_tol=1e-10, abs_tol=1e-12))
        _, outcome = solve_star(inp)
        assert outcome.kind == MONOTONE_SHORT


def test_small_lambda_persistence(eos15):
    u_c = eos15.u_of_density(1e-2)
    inp0 = ModelInput(eos=eos15, Lambda=0.0, constants=GEOM, rho_c=1e-2)
    _, out0 = solve_star(inp0)
    Lam = lambda_from_beta(1e-4, u_c, eos15)
    inp1 = ModelInput(eos=eos15, Lambda=Lam, constants=GEOM, rho_c=1e-2)
    _, out1 = solve_star(inp1)
    assert out1.kind == MONOTONE_SHORT
    shift = abs(out1.boundary.r_plus - out0.boundary.r_plus) / out0.boundary.r_plus
    assert shift < 0.05


def test_map_continuity_in_alpha_beta(eos15):
    # empirical Lipschitz bound of (alpha, beta) -> (M, U)(R0 = 0.5)
    R0 = 0.5
    ctrl = StepControl(rel_tol=1e-11, abs_tol=1e-13)

    def state(alpha, beta):
        star = solve_scaled(alpha, beta, eos15, ctrl=ctrl, R_max=R0 + 0.1)
        return np.asarray(star.dense(R0))

    grid = np.linspace(0.0, 1.0, 5)
    vals = {(a, b): state(float(a), float(b)) for a in grid for b in grid}
    h = grid[1] - grid[0]
    for i, a in enumerate(grid):
        for j, b in enumerate(grid):
            if i + 1 < grid.size:
                d = np.linalg.norm(vals[(grid[i + 1], b)] - vals[(a, b)])
                assert d < 10.0 * h
            if j + 1 < grid.size:
                d = np.linalg.norm(vals[(a, grid[j + 1])] - vals[(a, b)])
                assert d < 10.0 * h


def test_vacuum_continuation():
    k = GEOM
    m0, r0 = 0.05, 10.0
    m, u = vacuum_continuation_lambda0(m0, r0, k, r0)
    assert m == m0
    assert u == 0.0
    # limit at infinity
    _, u_inf = vacuum_continuation_lambda0(m0, r0, k, 1e12)
    target = 0.5 * k.c2 * math.log1p(-2 * k.G * m0 / (k.c2 * r0))
    assert u_inf == pytest.approx(target, rel=1e-9)
    assert u_inf < 0.0
    with pytest.raises(ValueError):
        vacuum_continuation_lambda0(6.0, 10.0, k, 11.0)  # inside Schwarzschild radius
    with pytest.raises(ValueError):
        vacuum_continuation_lambda0(m0, r0, k, 9.0)


def test_vacuum_continuation_solves_lambda0_system(eos15):
    # the continued pair satisfies the Lambda = 0 enthalpy system in vacuum
    k = GEOM
    m0, r0 = 0.05, 10.0
    for r in np.linspace(r0, 3 * r0, 7):
        m, u = vacuum_continuation_lambda0(m0, r0, k, float(r))
        dm, du = rhs_tov(float(r), (m, u), eos15, k)
        h = 1e-6 * r
        _, u_hi = vacuum_continuation_lambda0(m0, r0, k, float(r) + h)
        _, u_lo = vacuum_continuation_lambda0(m0, r0, k, float(r) - h) if r > r0 else (m0, u)
        fd = (u_hi - u_lo) / (h if r == r0 else 2 * h)
        assert dm == 0.0
        assert abs(du - fd) < 1e-9 * max(1.0, abs(du))


def test_smallness_condition(eos15):
    k = GEOM
    # Lambda = 0: beta = 0, satisfied whenever u_c <= c^2 eps0
    res = smallness_condition(1e-3, 0.0, eos15, k, epsilon0=1.0)
    assert res.satisfied and res.beta == 0.0
    # boundary case alpha = eps0 exactly is inclusive
    res2 = smallness_condition(0.5 * k.c2, 0.0, eos15, k, epsilon0=0.5)
    assert res2.alpha == 0.5 and res2.satisfied
    # Lambda above the cap: no admissible u_c
    eps0 = 0.3
    cap = FOUR_PI * k.c ** (2 * (2 - 1.5) / 0.5) * k.G * eos15.A1 * eps0 ** (1.5 / 0.5)
    res3 = smallness_condition(1e-3, cap * 1.01, eos15, k, epsilon0=eps0)
    assert not res3.lambda_feasible
    assert res3.lambda_cap == pytest.approx(cap, rel=1e-12)
    res4 = smallness_condition(eps0 * k.c2, cap * 0.99, eos15, k, epsilon0=eps0)
    assert res4.lambda_feasible and res4.satisfied
    with pytest.raises(ValueError):
        smallness_condition(1e-3, 0.0, EosSpec(A=1.0, gamma=1.1), k)


def test_model_input_validation(eos15):
    with pytest.raises(ValueError):
        ModelInput(eos=eos15, rho_c=1.0, u_c=1.0)
    with pytest.raises(ValueError):
        ModelInput(eos=eos15)
    with pytest.raises(ValueError):
        ModelInput(eos=eos15, rho_c=-1.0)
    with pytest.raises(ValueError):
        ModelInput(eos=eos15, rho_c=1.0, Lambda=-1e-3)


def test_outcome_json(star_m0, tmp_path):
    profile, outcome = star_m0
    doc = outcome.to_json_dict()
    assert doc["tag"] == "MonotoneShort"
    for key in ("r_plus", "m_plus", "kappa_plus", "Q_plus", "B"):
        assert key in doc["payload"]
    json.dumps(doc)  # serializable


def test_profile_csv(star_m0, tmp_path):
    profile, _ = star_m0
    path = tmp_path / "profile.csv"
    profile.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# units=")
    assert lines[1] == "r,m,u,P,rho,kappa,Q,dPdr"
    assert len(lines) == profile.r.size + 2
    # deterministic rewrite
    path2 = tmp_path / "profile2.csv"
    profile.write_csv(path2)
    assert path.read_bytes() == path2.read_bytes()


def test_profile_has_tail_samples_for_fit(star_m0):
    profile, outcome = star_m0
    r_plus = outcome.boundary.r_plus
    x = r_plus - profile.r
    in_window = (x >= 1e-6 * r_plus) & (x <= 1e-2 * r_plus)
    assert int(in_window.sum()) >= 50

"""Limit analyses and verification experiments.

Lane-Emden first zeros, the mu = 1 closed-form study of the scaled-limit
equation with a constant offset, convergence of the scaled system to its
limit orbit, boundary exponent fits, and parameter sweeps over the homology
plane.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constants import Constants
from .eos import EosSpec
from .errors import AnalysisError, ModelError
from .integrate import EventSpec, StepControl, integrate_adaptive
from .model import (
    MONOTONE_SHORT,
    ModelInput,
    SolutionProfile,
    boundary_quantities,
    solve_scaled,
    solve_star,
)
from .odecore import ScalingParams, center_germ_scaled, rhs_lane_emden, scaled_germ_u_coeff

__all__ = [
    "lane_emden_first_zero",
    "lane_emden_solution",
    "mu1_exact",
    "scaled_limit_convergence",
    "boundary_exponent_fit",
    "ExponentFit",
    "regime_sweep",
    "SweepResult",
    "SweepCell",
    "perturbation_compare",
]

_LE_CTRL = StepControl(rel_tol=1e-12, abs_tol=1e-14)
_LE_GERM_R = 1e-6


def lane_emden_solution(mu: float, lam: float = 0.0, R_cap: float = 100.0,
                        ctrl: StepControl = _LE_CTRL, first_zero_only: bool = True):
    """Dense solution of the Lane-Emden system dM/dR = R^2 (U#)^mu,
    dU/dR = -(M - lam R^3/3)/R^2 from the center germ."""
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    R0 = _LE_GERM_R
    # the scaled germ at alpha = 0, beta = lam is exactly the Lane-Emden germ
    M0 = R0**3 / 3.0
    U0 = 1.0 - (1.0 - lam) * R0 * R0 / 6.0
    events = []
    if first_zero_only:
        events.append(EventSpec(guard=lambda R, y: y[1], direction="falling",
                                terminal=True, root_tol=1e-13, name="vacuum"))
        # Once a local minimum of U occurs with U > 0 the trajectory can never
        # reach zero afterwards: the damping term only lowers the oscillation
        # energy, so later minima sit above the first one.
        events.append(EventSpec(
            guard=lambda R, y: rhs_lane_emden(R, y, mu, lam)[1],
            direction="rising", terminal=True, root_tol=1e-10, name="turning_point"))
    return integrate_adaptive(
        lambda R, y: rhs_lane_emden(R, y, mu, lam),
        np.array([M0, U0]), (R0, R_cap), ctrl, events=events,
    )


def lane_emden_first_zero(mu: float, lam: float = 0.0, R_cap: float = 100.0,
                          ctrl: StepControl = _LE_CTRL):
    """First zero of U, event-located; None when U turns around above zero."""
    dense = lane_emden_solution(mu, lam, R_cap, ctrl)
    for ev in dense.events:
        if ev.name == "vacuum":
            return ev.x
        if ev.name == "turning_point" and ev.y[1] > 0.0:
            return None
    raise AnalysisError(
        f"no first zero below R_cap = {R_cap:g} (U still decreasing); "
        f"final U = {dense.y_end[1]:.6g}"
    )


# -- mu = 1 closed form ---------------------------------------------------------

def _sinc_jet(R: float) -> tuple:
    """(s, s', s'') for s(R) = sin(R)/R, series-stable near R = 0."""
    if abs(R) < 0.5:
        s = 0.0
        s1 = 0.0
        s2 = 0.0
        R2 = R * R
        term = 1.0
        for n in range(12):
            k = 2 * n
            # term = (-1)^n R^(2n) / (2n+1)!
            if n > 0:
                term *= -R2 / (2 * n * (2 * n + 1))
            s += term
            if n > 0:
                s1 += term * k / R
                s2 += term * k * (k - 1) / R2
        return s, s1, s2
    s = math.sin(R) / R
    c = math.cos(R)
    s1 = (c - s) / R
    s2 = (-math.sin(R) - 2.0 * s1) / R
    return s, s1, s2


def mu1_exact(lam: float, R: float) -> tuple:
    """(U, dU/dR) of the mu = 1 scaled-limit equation with offset lam:
    U(R) = lam + (1 - lam) sin(R)/R, U(0) = 1."""
    if R < 0.0:
        raise ValueError("R must be nonnegative")
    if R == 0.0:
        return 1.0, 0.0
    s, s1, _ = _sinc_jet(R)
    return lam + (1.0 - lam) * s, (1.0 - lam) * s1


def mu1_residual(lam: float, R: float) -> float:
    """Residual of the second-order form -(R^2 U')'/R^2 = U - lam at R."""
    s, s1, s2 = _sinc_jet(R)
    U = lam + (1.0 - lam) * s
    return -(1.0 - lam) * s2 - 2.0 * (1.0 - lam) * s1 / R - (U - lam)


# -- convergence of the scaled system to its limit orbit -------------------------

def scaled_limit_convergence(
    gamma: float,
    alphas,
    betas,
    eos: EosSpec | None = None,
    R0: float = 0.1,
    n_grid: int = 400,
    ctrl: StepControl = _LE_CTRL,
) -> list:
    """Distance of the scaled solution to the limit orbit, per (alpha, beta).

    For each pair on the grid product, integrates the scaled system and
    records sup |U - U_limit| on [R0, xi1] plus the located boundary radius.
    Both integrations share germ order and tolerances, so alpha = beta = 0
    reproduces the limit orbit bitwise and reports distance 0.
    """
    if eos is None:
        eos = EosSpec(A=1.0, gamma=gamma)
    mu = 1.0 / (gamma - 1.0)
    ref = lane_emden_solution(mu, 0.0, ctrl=ctrl)
    vac = [ev for ev in ref.events if ev.name == "vacuum"]
    if not vac:
        raise AnalysisError(f"limit solution has no first zero for gamma = {gamma}")
    xi1 = vac[0].x
    R_grid = np.linspace(R0, xi1 * (1.0 - 1e-9), n_grid)
    U_ref = np.array([ref(float(R))[1] for R in R_grid])

    rows = []
    for alpha in alphas:
        for beta in betas:
            star = solve_scaled(alpha, beta, eos, ctrl=ctrl, germ_radius=_LE_GERM_R)
            R_hi = star.R_plus if star.R_plus is not None else star.dense.x_end
            dist = 0.0
            for Rg, Ur in zip(R_grid, U_ref):
                if Rg > R_hi:
                    break
                dist = max(dist, abs(float(star.dense(float(Rg))[1]) - float(Ur)))
            rows.append({
                "alpha": alpha, "beta": beta, "sup_distance": dist,
                "R_plus": star.R_plus, "outcome": star.kind,
            })
    return rows


# -- boundary exponent fit -------------------------------------------------------

@dataclass(frozen=True)
class ExponentFit:
    """Log-log fit of the density against the boundary distance."""

    exponent: float            # fitted leading exponent of rho vs (r_+ - r)
    amplitude: float           # fitted prefactor of the leading power
    amplitude_target: float    # ((gamma-1) B / (gamma A))^(1/(gamma-1))
    correction_exponents: tuple
    correction_coeffs: tuple   # least-squares coefficients of u/(B x) - 1
    resid_rms: float           # RMS residual after the correction fit
    resid_decay_slope: float   # log-log slope of the residual after the x-term fit
    window: tuple              # (x/r_+ lower, upper) actually used
    n_samples: int
    B: float


def boundary_exponent_fit(
    profile: SolutionProfile,
    eos: EosSpec | None = None,
    window: tuple = (1e-6, 1e-2),
    min_samples: int = 50,
) -> ExponentFit:
    """Fit the vacuum-boundary behavior of a monotone-short profile.

    A log-log regression of rho against x = r_+ - r over the window
    x/r_+ in [1e-6, 1e-2] estimates the leading exponent (target
    1/(gamma-1)) and amplitude; the relative enthalpy residual
    u/(B x) - 1 is then fitted against {x, x^(mu+1)}.
    """
    eos = eos if eos is not None else profile.eos
    ev = profile.vacuum_event()
    if ev is None:
        raise ModelError("exponent fit needs a vacuum-terminated profile", profile=profile)
    bq = boundary_quantities(profile)
    r_plus = bq.r_plus
    x = r_plus - profile.r
    u_floor = 1e3 * np.finfo(float).eps * profile.u[0]
    mask = (
        (x >= window[0] * r_plus)
        & (x <= window[1] * r_plus)
        & (profile.rho > 0.0)
        & (profile.u > u_floor)
    )
    n = int(mask.sum())
    if n < min_samples:
        raise AnalysisError(
            f"only {n} usable samples in the fit window; need >= {min_samples}"
        )
    xs = x[mask]
    rho = profile.rho[mask]
    u = profile.u[mask]

    t = np.log(xs)
    y = np.log(rho)
    slope, intercept = np.polyfit(t, y, 1)
    mu = eos.mu
    amplitude_target = ((eos.gamma - 1.0) * bq.B / (eos.gamma * eos.A)) ** mu

    resid_rel = u / (bq.B * xs) - 1.0
    exps = (1.0, mu + 1.0)
    M = np.column_stack([xs ** e for e in exps])
    coeffs, *_ = np.linalg.lstsq(M, resid_rel, rcond=None)
    resid = resid_rel - M @ coeffs
    resid_rms = float(np.sqrt(np.mean(resid**2)))

    # decay diagnostic: anchor the linear coefficient on a low band (where the
    # higher powers are negligible but the samples sit well above the noise
    # floor), then measure the slope of what remains on the top decade
    x_top = float(xs.max())
    anchor = (xs >= 0.01 * x_top) & (xs <= 0.1 * x_top)
    meas = xs >= 0.1 * x_top
    if anchor.sum() >= 4 and meas.sum() >= 8:
        c_lin = float(np.mean(resid_rel[anchor] / xs[anchor]))
        r1 = np.abs(resid_rel - c_lin * xs)
        good = meas & (r1 > 0.0)
        decay_slope = float(np.polyfit(np.log(xs[good]), np.log(r1[good]), 1)[0])
    else:
        decay_slope = math.nan

    return ExponentFit(
        exponent=float(slope),
        amplitude=float(math.exp(intercept)),
        amplitude_target=float(amplitude_target),
        correction_exponents=exps,
        correction_coeffs=tuple(float(c) for c in coeffs),
        resid_rms=resid_rms,
        resid_decay_slope=decay_slope,
        window=(float(xs.min() / r_plus), float(xs.max() / r_plus)),
        n_samples=n,
        B=bq.B,
    )


# -- regime sweep ----------------------------------------------------------------

@dataclass(frozen=True)
class SweepCell:
    alpha: float
    beta: float
    outcome: str
    R_plus: float | None
    M_plus: float | None
    initial_rise: bool
    first_rise_R: float | None
    error: str = ""


@dataclass
class SweepResult:
    gamma: float
    alpha_grid: np.ndarray
    beta_grid: np.ndarray
    cells: list
    epsilon0_estimate: float

    def cell(self, i: int, j: int) -> SweepCell:
        return self.cells[i * self.beta_grid.size + j]

    def to_csv(self, path) -> None:
        lines = ["# regime sweep, scaled units (alpha = u_c/c^2, beta = scaled Lambda)"]
        lines.append("alpha,beta,outcome,R_plus,extra")
        for cell in self.cells:
            extra = f"initial_rise={int(cell.initial_rise)}"
            if cell.first_rise_R is not None:
                extra += f";first_rise_R={cell.first_rise_R!r}"
            if cell.error:
                extra += f";error={cell.error}"
            rp = "" if cell.R_plus is None else repr(cell.R_plus)
            lines.append(f"{cell.alpha!r},{cell.beta!r},{cell.outcome},{rp},{extra}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "alpha_grid": [float(a) for a in self.alpha_grid],
            "beta_grid": [float(b) for b in self.beta_grid],
            "epsilon0_estimate": self.epsilon0_estimate,
            "cells": [
                {
                    "alpha": c.alpha, "beta": c.beta, "outcome": c.outcome,
                    "R_plus": c.R_plus, "M_plus": c.M_plus,
                    "initial_rise": c.initial_rise, "first_rise_R": c.first_rise_R,
                    "error": c.error,
                }
                for c in self.cells
            ],
        }


def _sweep_cell(args) -> SweepCell:
    alpha, beta, eos, ctrl, R_max = args
    try:
        star = solve_scaled(alpha, beta, eos, ctrl=ctrl, R_max=R_max)
    except Exception as exc:  # per-cell failures recorded, sweep continues
        return SweepCell(alpha=alpha, beta=beta, outcome="error", R_plus=None,
                         M_plus=None, initial_rise=False, first_rise_R=None,
                         error=f"{type(exc).__name__}: {exc}")
    return SweepCell(
        alpha=alpha, beta=beta, outcome=star.kind, R_plus=star.R_plus,
        M_plus=star.M_plus, initial_rise=star.initial_rise,
        first_rise_R=star.first_rise_R,
    )


def regime_sweep(
    gamma: float,
    alpha_grid,
    beta_grid,
    eos: EosSpec | None = None,
    ctrl: StepControl = StepControl(rel_tol=1e-9, abs_tol=1e-12),
    R_max: float = 50.0,
    jobs: int = 1,
) -> SweepResult:
    """Classify the scaled system over a rectangular (alpha, beta) grid.

    The empirical epsilon0 estimate is the largest g such that every cell
    with alpha <= g and beta <= g is monotone-short.
    """
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    beta_grid = np.asarray(beta_grid, dtype=float)
    if alpha_grid.min() < 0.0 or beta_grid.min() < 0.0 or alpha_grid.max() > 1.0 or beta_grid.max() > 1.0:
        raise ValueError("sweep grids must lie within [0, 1]")
    if eos is None:
        eos = EosSpec(A=1.0, gamma=gamma)
    eos._tables  # build the transform tables once, before any fork

    tasks = [(float(a), float(b), eos, ctrl, R_max) for a in alpha_grid for b in beta_grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_sweep_cell, tasks, chunksize=4))
    else:
        cells = [_sweep_cell(t) for t in tasks]

    eps0 = 0.0
    candidates = sorted(set(float(g) for g in np.concatenate([alpha_grid, beta_grid])))
    for g in candidates:
        ok = all(
            c.outcome == MONOTONE_SHORT
            for c in cells
            if c.alpha <= g and c.beta <= g
        )
        if ok:
            eps0 = g
    return SweepResult(gamma=gamma, alpha_grid=alpha_grid, beta_grid=beta_grid,
                       cells=cells, epsilon0_estimate=eps0)


# -- persistence of short solutions under small Lambda ----------------------------

def perturbation_compare(
    rho_c: float,
    eos: EosSpec,
    Lambda_list,
    constants: Constants = Constants(),
    ctrl: StepControl = StepControl(rel_tol=1e-11, abs_tol=1e-13),
    r_max_scaled: float = 50.0,
) -> list:
    """Solve the Lambda = 0 star and each perturbed Lambda > 0 star.

    Returns rows (Lambda, outcome, r_plus, radius_shift_rel) with the shift
    measured against the Lambda = 0 boundary radius.
    """
    base_inp = ModelInput(eos=eos, Lambda=0.0, constants=constants, rho_c=rho_c,
                          ctrl=ctrl, r_max_scaled=r_max_scaled)
    base_prof, base_out = solve_star(base_inp)
    if base_out.kind != MONOTONE_SHORT:
        raise AnalysisError(
            f"Lambda = 0 model is not short (outcome {base_out.kind}); "
            "perturbation comparison needs a short baseline"
        )
    r0 = base_out.boundary.r_plus
    rows = [{
        "Lambda": 0.0, "outcome": base_out.kind, "r_plus": r0, "radius_shift_rel": 0.0,
    }]
    for Lam in Lambda_list:
        inp = ModelInput(eos=eos, Lambda=float(Lam), constants=constants, rho_c=rho_c,
                         ctrl=ctrl, r_max_scaled=r_max_scaled)
        prof, out = solve_star(inp)
        r_plus = out.boundary.r_plus if out.boundary is not None else None
        shift = abs(r_plus - r0) / r0 if r_plus is not None else math.nan
        rows.append({
            "Lambda": float(Lam), "outcome": out.kind,
            "r_plus": r_plus, "radius_shift_rel": shift,
        })
    return rows

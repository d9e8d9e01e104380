"""Stellar models: germ prolongation, outcome classification, boundary data.

A model is integrated in the enthalpy form (m, u) from the center germ with
three guards: u falling through zero (vacuum boundary, terminal), kappa
falling through kappa_min (horizon contact, terminal), and du/dr rising
through a small positive floor (monotonicity loss, recorded).  The outcome is
one of four tags:

    MonotoneShort      u -> 0 at finite radius with kappa_+ > 0, Q_+ > 0 and
                       du/dr < 0 throughout
    NonMonotone        du/dr >= 0 somewhere before termination
    HorizonDegenerate  kappa reached the horizon guard
    Unterminated       the prolongation cap was reached with u > 0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import Constants
from .eos import EosSpec
from .errors import ModelError
from .integrate import DenseSolution, EventSpec, StepControl, integrate_adaptive
from .odecore import (
    FOUR_PI,
    ScalingParams,
    center_germ_enthalpy,
    center_germ_scaled,
    kappa,
    kappa_scaled,
    q_factor,
    rhs_scaled,
    rhs_tovds_enthalpy,
    scaled_germ_u_coeff,
)

__all__ = [
    "ModelInput",
    "SolutionProfile",
    "BoundaryQuantities",
    "ModelOutcome",
    "ScaledStar",
    "solve_star",
    "solve_scaled",
    "boundary_quantities",
    "d2u_at_boundary",
    "smallness_condition",
    "SmallnessResult",
    "vacuum_continuation_lambda0",
    "MONOTONE_SHORT",
    "NON_MONOTONE",
    "HORIZON_DEGENERATE",
    "UNTERMINATED",
]

MONOTONE_SHORT = "MonotoneShort"
NON_MONOTONE = "NonMonotone"
HORIZON_DEGENERATE = "HorizonDegenerate"
UNTERMINATED = "Unterminated"

PROFILE_CSV_HEADER = "r,m,u,P,rho,kappa,Q,dPdr"


@dataclass(frozen=True)
class ModelInput:
    """Central data and solver policy for one star.

    Exactly one of rho_c / u_c must be given; the other is derived through
    the EOS.  r_max is a physical prolongation cap; when None it defaults to
    r_max_scaled homology units.
    """

    eos: EosSpec
    Lambda: float = 0.0
    constants: Constants = Constants()
    rho_c: float | None = None
    u_c: float | None = None
    r_max: float | None = None
    r_max_scaled: float = 50.0
    ctrl: StepControl = StepControl(rel_tol=1e-12, abs_tol=1e-14)
    germ_radius_scaled: float = 1e-6
    kappa_min: float = 1e-10
    mono_eps: float = 1e-6  # dU/dR floor distinguishing a rise from roundoff
    n_tail: int = 140       # extra profile samples packed against the boundary

    def __post_init__(self):
        if (self.rho_c is None) == (self.u_c is None):
            raise ValueError("give exactly one of rho_c or u_c")
        if self.rho_c is not None and self.rho_c <= 0.0:
            raise ValueError("rho_c must be positive")
        if self.u_c is not None and self.u_c <= 0.0:
            raise ValueError("u_c must be positive")
        if self.Lambda < 0.0:
            raise ValueError("Lambda must be nonnegative")

    def center_enthalpy(self) -> float:
        if self.u_c is not None:
            return self.u_c
        return self.eos.u_of_density(self.rho_c)

    def scaling(self) -> ScalingParams:
        return ScalingParams.from_center(self.center_enthalpy(), self.Lambda, self.eos, self.constants)


@dataclass(frozen=True)
class BoundaryQuantities:
    """Limits at the vacuum boundary of a monotone-short model."""

    r_plus: float
    m_plus: float
    kappa_plus: float
    Q_plus: float
    B: float                    # Q_+ / (r_+^2 kappa_+) = -du/dr|_{r_+ - 0}
    kappa_plus_prime: float     # d kappa/dr at r_+ - 0
    du_dr_minus: float          # one-sided derivative measured on the profile


@dataclass(frozen=True)
class ModelOutcome:
    """Classification record; exactly one tag."""

    kind: str
    boundary: BoundaryQuantities | None = None
    first_rise_r: float | None = None
    horizon_r: float | None = None
    end_r: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        payload: dict = dict(self.diagnostics)
        if self.boundary is not None:
            b = self.boundary
            payload.update(
                r_plus=b.r_plus, m_plus=b.m_plus, kappa_plus=b.kappa_plus,
                Q_plus=b.Q_plus, B=b.B, kappa_plus_prime=b.kappa_plus_prime,
                du_dr_minus=b.du_dr_minus,
            )
        if self.first_rise_r is not None:
            payload["first_rise_r"] = self.first_rise_r
        if self.horizon_r is not None:
            payload["horizon_r"] = self.horizon_r
        if self.end_r is not None:
            payload["end_r"] = self.end_r
        return {"tag": self.kind, "payload": payload}


@dataclass
class SolutionProfile:
    """Dense radial trajectory of (r, m, u, P, rho, kappa, Q, dP/dr)."""

    r: np.ndarray
    m: np.ndarray
    u: np.ndarray
    P: np.ndarray
    rho: np.ndarray
    kappa: np.ndarray
    Q: np.ndarray
    dPdr: np.ndarray
    events: list
    status: str
    eos: EosSpec
    constants: Constants
    Lambda: float
    scaling: ScalingParams
    dense: DenseSolution

    @property
    def r_end(self) -> float:
        return float(self.dense.x_end)

    def vacuum_event(self):
        for ev in self.events:
            if ev.name == "vacuum":
                return ev
        return None

    def horizon_event(self):
        for ev in self.events:
            if ev.name == "horizon":
                return ev
        return None

    def rise_events(self):
        return [ev for ev in self.events if ev.name == "pressure_rise"]

    def state_at(self, r: float) -> tuple:
        """(m, u) interpolated from the dense solution."""
        y = self.dense(r)
        return float(y[0]), float(y[1])

    def row_at(self, r: float) -> dict:
        m, u = self.state_at(r)
        return _profile_row(r, m, u, self.Lambda, self.eos, self.constants)

    def write_csv(self, path, units_label: str = "geom") -> None:
        k = self.constants
        lines = [f"# units={units_label} c={k.c!r} G={k.G!r} Lambda={self.Lambda!r}"]
        lines.append(PROFILE_CSV_HEADER)
        cols = (self.r, self.m, self.u, self.P, self.rho, self.kappa, self.Q, self.dPdr)
        for i in range(self.r.size):
            lines.append(",".join(repr(float(c[i])) for c in cols))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _profile_row(r, m, u, Lambda, eos, k) -> dict:
    eta = u / k.c2
    if u > 0.0:
        omega_rho, omega_P = eos.omega_rho_P_fast(eta)
        rho = eos.A1 * u**eos.mu * omega_rho
        P = eos.p_coeff * u ** (eos.mu + 1.0) * omega_P
    else:
        rho = 0.0
        P = 0.0
    kap = kappa(r, m, Lambda, k)
    Q = q_factor(r, m, P, Lambda, k)
    du_dr = -Q / (r * r * kap)
    return {
        "r": r, "m": m, "u": u, "P": P, "rho": rho,
        "kappa": kap, "Q": Q, "dPdr": (rho + P / k.c2) * du_dr,
    }


def _build_profile(dense, inp: ModelInput, scaling: ScalingParams) -> SolutionProfile:
    r_end = dense.x_end
    samples = [x for x in dense.xs if x <= r_end]
    if not samples or samples[-1] < r_end:
        samples.append(r_end)
    vacuum_hit = any(ev.name == "vacuum" and ev.terminal for ev in dense.events)
    if vacuum_hit and inp.n_tail > 0:
        # pack log-spaced samples against the boundary for the exponent fits
        offsets = r_end * np.logspace(-8.0, -1.2, inp.n_tail)
        tail = r_end - offsets
        samples = sorted(set(samples) | {float(t) for t in tail if t > dense.xs[0]})
    rr = np.array(samples)

    k = inp.constants
    n = rr.size
    cols = {name: np.empty(n) for name in ("m", "u", "P", "rho", "kappa", "Q", "dPdr")}
    for i, r in enumerate(rr):
        y = dense(float(r))
        row = _profile_row(float(r), float(y[0]), float(y[1]), inp.Lambda, inp.eos, k)
        for name in cols:
            cols[name][i] = row[name]
    return SolutionProfile(
        r=rr, events=list(dense.events), status=dense.status,
        eos=inp.eos, constants=k, Lambda=inp.Lambda, scaling=scaling, dense=dense,
        **cols,
    )


def _du_dr_scaled_guard(Lambda, eos, k, scaling):
    """dU/dR recomputed from the right-hand side, for the monotonicity guard."""
    ratio = scaling.a / scaling.b

    def guard(r, y):
        du = rhs_tovds_enthalpy(r, y, Lambda, eos, k)[1]
        return du * ratio

    return guard


def solve_star(inp: ModelInput) -> tuple:
    """Prolong the center germ rightward and classify the outcome.

    Returns (SolutionProfile, ModelOutcome).  Solver failures raise
    ModelError with the partial profile attached.
    """
    k = inp.constants
    eos = inp.eos
    u_c = inp.center_enthalpy()
    scaling = inp.scaling()

    r0 = inp.germ_radius_scaled * scaling.a
    r_max = inp.r_max if inp.r_max is not None else inp.r_max_scaled * scaling.a
    if r_max <= r0:
        raise ValueError("r_max must exceed the germ radius")
    m0, u0 = center_germ_enthalpy(u_c, inp.Lambda, eos, k, r0)
    y0 = np.array([m0, u0])

    guard_rise = _du_dr_scaled_guard(inp.Lambda, eos, k, scaling)
    events = [
        EventSpec(guard=lambda r, y: y[1], direction="falling", terminal=True,
                  root_tol=1e-12 * scaling.a, name="vacuum"),
        EventSpec(guard=lambda r, y: kappa(r, float(y[0]), inp.Lambda, k) - inp.kappa_min,
                  direction="falling", terminal=True, root_tol=1e-12 * scaling.a, name="horizon"),
        EventSpec(guard=lambda r, y: guard_rise(r, y) - inp.mono_eps,
                  direction="rising", terminal=False, root_tol=1e-10 * scaling.a,
                  name="pressure_rise"),
    ]

    initial_rise = guard_rise(r0, y0) >= inp.mono_eps

    y_scale = np.array([scaling.mass_scale, scaling.b])
    dense = integrate_adaptive(
        lambda r, y: rhs_tovds_enthalpy(r, y, inp.Lambda, eos, k),
        y0, (r0, r_max), inp.ctrl, events=events, y_scale=y_scale,
    )

    profile = _build_profile(dense, inp, scaling)

    if dense.status in ("step_budget", "step_underflow", "domain_error"):
        raise ModelError(f"solver failed: {dense.status}: {dense.message}", profile=profile)

    outcome = _classify(profile, inp, initial_rise, r0)
    return profile, outcome


def _classify(profile: SolutionProfile, inp: ModelInput, initial_rise: bool, r0: float) -> ModelOutcome:
    k = inp.constants
    rises = profile.rise_events()
    first_rise = r0 if initial_rise else (rises[0].x if rises else None)

    horizon = profile.horizon_event()
    if horizon is not None:
        r_h = horizon.x
        m_h, u_h = float(horizon.y[0]), float(horizon.y[1])
        P_h = inp.eos.pressure_of_u(u_h)
        diag = {
            "u_end": u_h,
            "Q_end": q_factor(r_h, m_h, P_h, inp.Lambda, k),
            "lambda_r2": inp.Lambda * r_h * r_h,
            "simultaneous_vacuum": bool(abs(u_h) < 1e-8 * profile.scaling.b),
        }
        if first_rise is not None:
            diag["first_rise_r"] = first_rise
        return ModelOutcome(kind=HORIZON_DEGENERATE, horizon_r=r_h, diagnostics=diag)

    vacuum = profile.vacuum_event()
    if first_rise is not None:
        return ModelOutcome(
            kind=NON_MONOTONE, first_rise_r=first_rise,
            end_r=profile.r_end,
            diagnostics={"initial_rise": bool(initial_rise)},
        )

    if vacuum is not None:
        bq = boundary_quantities(profile)
        kappa_floor = max(1e3 * inp.kappa_min, 1e-8)
        if bq.kappa_plus <= kappa_floor or bq.Q_plus <= 0.0:
            return ModelOutcome(
                kind=HORIZON_DEGENERATE, horizon_r=bq.r_plus,
                diagnostics={
                    "u_end": 0.0, "Q_end": bq.Q_plus,
                    "lambda_r2": inp.Lambda * bq.r_plus**2,
                    "simultaneous_vacuum": True,
                },
            )
        return ModelOutcome(kind=MONOTONE_SHORT, boundary=bq)

    P_end = profile.P[-1]
    P_c = profile.P[0]
    return ModelOutcome(
        kind=UNTERMINATED, end_r=profile.r_end,
        diagnostics={"P_end_over_Pc": float(P_end / P_c) if P_c else 0.0},
    )


def _one_sided_slope(dense, x_edge: float, h0: float, inward: float = 1.0) -> float:
    """Richardson-extrapolated one-sided du/dr at x_edge using values at
    x_edge - inward*h; error series in h eliminated through three levels."""
    u_edge = float(dense(x_edge)[1])
    est = []
    for lv in range(3):
        h = h0 / 2**lv
        u_in = float(dense(x_edge - inward * h)[1])
        est.append((u_edge - u_in) / (inward * h))
    # eliminate O(h) then O(h^2)
    r1 = [2.0 * est[i + 1] - est[i] for i in range(2)]
    return (4.0 * r1[1] - r1[0]) / 3.0


def boundary_quantities(profile: SolutionProfile) -> BoundaryQuantities:
    """Limits at r_+ of a vacuum-terminated profile."""
    ev = profile.vacuum_event()
    if ev is None:
        raise ModelError("profile did not terminate at a vacuum boundary", profile=profile)
    k = profile.constants
    r_plus = ev.x
    m_plus = float(ev.y[0])
    u_plus = float(ev.y[1])
    P_plus = profile.eos.pressure_of_u(u_plus)
    kappa_plus = kappa(r_plus, m_plus, profile.Lambda, k)
    Q_plus = q_factor(r_plus, m_plus, P_plus, profile.Lambda, k)
    B = Q_plus / (r_plus * r_plus * kappa_plus)
    # dm/dr -> 0 at the boundary, so only the explicit r-derivatives survive
    kappa_plus_prime = 2.0 * k.G * m_plus / (k.c2 * r_plus**2) - 2.0 * profile.Lambda * r_plus / 3.0
    du_dr_minus = _one_sided_slope(profile.dense, r_plus, 1e-3 * r_plus)
    return BoundaryQuantities(
        r_plus=r_plus, m_plus=m_plus, kappa_plus=kappa_plus, Q_plus=Q_plus,
        B=B, kappa_plus_prime=kappa_plus_prime, du_dr_minus=du_dr_minus,
    )


def d2u_at_boundary(bq: BoundaryQuantities, Lambda: float, c: float) -> float:
    """Second derivative of u at the boundary from the right-hand side:
    c^2 Lambda / kappa_+ + 2 Q_+ / (r_+^3 kappa_+) + 2 Q_+^2 / (c^2 r_+^4 kappa_+^2)."""
    c2 = c * c
    kp = bq.kappa_plus
    return (
        c2 * Lambda / kp
        + 2.0 * bq.Q_plus / (bq.r_plus**3 * kp)
        + 2.0 * bq.Q_plus**2 / (c2 * bq.r_plus**4 * kp * kp)
    )


# -- scaled-system solves ------------------------------------------------------

@dataclass
class ScaledStar:
    """Outcome of one homology-scaled solve."""

    alpha: float
    beta: float
    kind: str
    R_plus: float | None
    M_plus: float | None
    first_rise_R: float | None
    initial_rise: bool
    dense: DenseSolution

    @property
    def monotone_short(self) -> bool:
        return self.kind == MONOTONE_SHORT


def solve_scaled(
    alpha: float,
    beta: float,
    eos: EosSpec,
    ctrl: StepControl = StepControl(rel_tol=1e-12, abs_tol=1e-14),
    R_max: float = 50.0,
    germ_radius: float = 1e-6,
    kappa_min: float = 1e-10,
    mono_eps: float = 1e-6,
) -> ScaledStar:
    """Integrate the scaled system from its germ and classify the outcome."""
    R0 = germ_radius
    y0 = np.array(center_germ_scaled(alpha, beta, eos, R0))

    def guard_rise(R, y):
        return rhs_scaled(R, y, alpha, beta, eos)[1] - mono_eps

    events = [
        EventSpec(guard=lambda R, y: y[1], direction="falling", terminal=True,
                  root_tol=1e-12, name="vacuum"),
        EventSpec(guard=lambda R, y: kappa_scaled(R, float(y[0]), alpha, beta) - kappa_min,
                  direction="falling", terminal=True, root_tol=1e-12, name="horizon"),
        EventSpec(guard=guard_rise, direction="rising", terminal=False,
                  root_tol=1e-10, name="pressure_rise"),
    ]
    initial_rise = float(guard_rise(R0, y0)) >= 0.0

    dense = integrate_adaptive(
        lambda R, y: rhs_scaled(R, y, alpha, beta, eos),
        y0, (R0, R_max), ctrl, events=events,
    )
    if dense.status in ("step_budget", "step_underflow", "domain_error"):
        raise ModelError(f"scaled solve failed: {dense.status}: {dense.message}")

    rises = [ev for ev in dense.events if ev.name == "pressure_rise"]
    first_rise = R0 if initial_rise else (rises[0].x if rises else None)
    vacuum = next((ev for ev in dense.events if ev.name == "vacuum"), None)
    horizon = next((ev for ev in dense.events if ev.name == "horizon"), None)

    if horizon is not None:
        kind = HORIZON_DEGENERATE
        R_plus, M_plus = horizon.x, float(horizon.y[0])
    elif first_rise is not None:
        kind = NON_MONOTONE
        R_plus = vacuum.x if vacuum is not None else None
        M_plus = float(vacuum.y[0]) if vacuum is not None else None
    elif vacuum is not None:
        kap = kappa_scaled(vacuum.x, float(vacuum.y[0]), alpha, beta)
        Q_eq = float(vacuum.y[0]) - beta * vacuum.x**3 / 3.0
        kind = MONOTONE_SHORT if (kap > 1e-7 and Q_eq > 0.0) else HORIZON_DEGENERATE
        R_plus, M_plus = vacuum.x, float(vacuum.y[0])
    else:
        kind = UNTERMINATED
        R_plus, M_plus = None, None

    return ScaledStar(
        alpha=alpha, beta=beta, kind=kind, R_plus=R_plus, M_plus=M_plus,
        first_rise_R=first_rise, initial_rise=initial_rise, dense=dense,
    )


# -- regime condition and the Lambda = 0 vacuum continuation -------------------

@dataclass(frozen=True)
class SmallnessResult:
    alpha: float
    beta: float
    satisfied: bool
    epsilon0: float
    lambda_cap: float      # largest Lambda admitting any compliant u_c
    lambda_feasible: bool


def smallness_condition(u_c: float, Lambda: float, eos: EosSpec, k: Constants,
                        epsilon0: float = 1.0) -> SmallnessResult:
    """Check alpha <= epsilon0 and beta <= epsilon0 for the given center.

    Requires 6/5 < gamma < 2 and 0 < epsilon0 <= 1.  lambda_cap is the
    ceiling 4 pi c^(2(2-gamma)/(gamma-1)) G A1 epsilon0^(gamma/(gamma-1))
    above which no central enthalpy can satisfy both inequalities.
    """
    if not (1.2 < eos.gamma < 2.0):
        raise ValueError(f"smallness condition requires 6/5 < gamma < 2, got {eos.gamma}")
    if not (0.0 < epsilon0 <= 1.0):
        raise ValueError("epsilon0 must lie in (0, 1]")
    sp = ScalingParams.from_center(u_c, Lambda, eos, k)
    g = eos.gamma
    lambda_cap = (
        FOUR_PI * k.c ** (2.0 * (2.0 - g) / (g - 1.0)) * k.G * eos.A1
        * epsilon0 ** (g / (g - 1.0))
    )
    return SmallnessResult(
        alpha=sp.alpha,
        beta=sp.beta,
        satisfied=(sp.alpha <= epsilon0 and sp.beta <= epsilon0),
        epsilon0=epsilon0,
        lambda_cap=lambda_cap,
        lambda_feasible=(Lambda <= lambda_cap),
    )


def vacuum_continuation_lambda0(m_plus0: float, r_plus0: float, k: Constants, r) -> tuple:
    """Exterior continuation (m, u) of a Lambda = 0 star for r >= r_+.

    m stays at m_+; u = (c^2/2) [log(1 - 2Gm_+/(c^2 r_+)) - log(1 - 2Gm_+/(c^2 r))],
    which vanishes at r_+ and solves the Lambda = 0 enthalpy system in vacuum.
    """
    compactness = 2.0 * k.G * m_plus0 / (k.c2 * r_plus0)
    if compactness >= 1.0:
        raise ValueError("star inside its own Schwarzschild radius")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < r_plus0 * (1.0 - 1e-12)):
        raise ValueError("continuation is defined for r >= r_+")
    u = 0.5 * k.c2 * (
        math.log1p(-compactness)
        - np.log1p(-2.0 * k.G * m_plus0 / (k.c2 * r_arr))
    )
    m = np.full_like(u, m_plus0)
    if np.ndim(r) == 0:
        return float(m), float(u)
    return m, u

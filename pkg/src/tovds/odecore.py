"""Right-hand sides and center germs of the stellar-structure systems.

All functions are pure.  State conventions:

    physical pressure form   y = (m, P),   x = r
    physical enthalpy form   y = (m, u),   x = r
    scaled form              y = (M, U),   x = R

kappa(r, m) = 1 - 2Gm/(c^2 r) - Lambda r^2/3 and
Q(r, m, P) = G(m + 4 pi r^3 P / c^2) - c^2 Lambda r^3 / 3 are the only two
places those combinations are spelled out; every right-hand side calls them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import Constants
from .eos import EosSpec
from .errors import DomainCeilingError, KappaNonPositiveError

__all__ = [
    "kappa",
    "q_factor",
    "kappa_scaled",
    "rhs_tovds_pressure",
    "rhs_tovds_enthalpy",
    "rhs_tov",
    "rhs_scaled",
    "rhs_scaled_c",
    "rhs_lane_emden",
    "center_germ_physical",
    "center_germ_enthalpy",
    "center_germ_scaled",
    "ScalingParams",
]

FOUR_PI = 4.0 * math.pi

# Paper-domain ceiling for the scaled enthalpy; can be lifted per call.
U_CEILING = 2.0


def kappa(r: float, m: float, Lambda: float, k: Constants) -> float:
    """Metric potential 1 - 2Gm/(c^2 r) - Lambda r^2 / 3."""
    return 1.0 - 2.0 * k.G * m / (k.c2 * r) - Lambda * r * r / 3.0


def q_factor(r: float, m: float, P: float, Lambda: float, k: Constants) -> float:
    """Effective gravitating numerator G(m + 4 pi r^3 P/c^2) - c^2 Lambda r^3/3."""
    r3 = r * r * r
    return k.G * (m + FOUR_PI * r3 * P / k.c2) - k.c2 * Lambda * r3 / 3.0


def kappa_scaled(R: float, M: float, alpha: float, beta: float) -> float:
    return 1.0 - 2.0 * alpha * M / R - alpha * beta * R * R / 3.0


def _check_kappa(kap: float, r: float) -> None:
    if kap <= 0.0:
        raise KappaNonPositiveError(f"kappa = {kap:g} <= 0 at r = {r:g} (horizon contact)")


def rhs_tovds_pressure(r: float, y, Lambda: float, eos: EosSpec, k: Constants) -> np.ndarray:
    """(dm/dr, dP/dr) of the pressure-form system."""
    m, P = float(y[0]), float(y[1])
    rho = eos.density_of_pressure(P)
    kap = kappa(r, m, Lambda, k)
    _check_kappa(kap, r)
    Q = q_factor(r, m, P, Lambda, k)
    dm = FOUR_PI * r * r * rho
    dP = -(rho + P / k.c2) * Q / (r * r * kap)
    return np.array([dm, dP])


def rhs_tovds_enthalpy(r: float, y, Lambda: float, eos: EosSpec, k: Constants) -> np.ndarray:
    """(dm/dr, du/dr) of the enthalpy-form system.

    The positive part u# = max(u, 0) enters through the powers mu and mu+1,
    both C^1 across u = 0 because mu > 1; Omega_rho and Omega_P are
    evaluated at the true eta = u/c^2.
    """
    m, u = float(y[0]), float(y[1])
    eta = u / k.c2
    omega_rho, omega_P = eos.omega_rho_P_fast(eta)
    u_pos = u if u > 0.0 else 0.0
    rho = eos.A1 * u_pos**eos.mu * omega_rho
    P = eos.p_coeff * u_pos ** (eos.mu + 1.0) * omega_P
    kap = kappa(r, m, Lambda, k)
    _check_kappa(kap, r)
    Q = q_factor(r, m, P, Lambda, k)
    dm = FOUR_PI * r * r * rho
    du = -Q / (r * r * kap)
    return np.array([dm, du])


def rhs_tov(r: float, y, eos: EosSpec, k: Constants) -> np.ndarray:
    """Enthalpy-form system with Lambda = 0."""
    return rhs_tovds_enthalpy(r, y, 0.0, eos, k)


def rhs_scaled(R: float, y, alpha: float, beta: float, eos: EosSpec,
               enforce_ceiling: bool = True) -> np.ndarray:
    """(dM/dR, dU/dR) of the homology-scaled system.

    At alpha = beta = 0 this reduces exactly (bitwise) to the Lane-Emden
    right-hand side with lambda = 0.
    """
    M, U = float(y[0]), float(y[1])
    if enforce_ceiling and U >= U_CEILING:
        raise DomainCeilingError(f"scaled enthalpy U = {U:g} reached the domain ceiling {U_CEILING}")
    U_pos = U if U > 0.0 else 0.0
    if alpha == 0.0:
        omega_rho = 1.0
        omega_P = 1.0
    else:
        omega_rho, omega_P = eos.omega_rho_P_fast(alpha * U)
    g = eos.gamma
    dM = R * R * U_pos**eos.mu * omega_rho
    num = M + (g - 1.0) / g * alpha * R**3 * U_pos ** (eos.mu + 1.0) * omega_P - beta * R**3 / 3.0
    kap = kappa_scaled(R, M, alpha, beta)
    _check_kappa(kap, R)
    dU = -num / (R * R * kap)
    return np.array([dM, dU])


def rhs_scaled_c(R: float, y, lam: float, c: float, eos: EosSpec) -> np.ndarray:
    """Scaled system with the central enthalpy normalized to 1 and c explicit.

    Identical to rhs_scaled with alpha = 1/c^2 and beta = lam; as c -> inf it
    tends to the Lane-Emden-de Sitter right-hand side.
    """
    return rhs_scaled(R, y, 1.0 / (c * c), lam, eos, enforce_ceiling=False)


def rhs_lane_emden(R: float, y, mu: float, lam: float = 0.0) -> np.ndarray:
    """(dM/dR, dU/dR) = (R^2 (U#)^mu, -(M - lam R^3/3)/R^2)."""
    M, U = float(y[0]), float(y[1])
    U_pos = U if U > 0.0 else 0.0
    dM = R * R * U_pos**mu
    dU = -(M - lam * R**3 / 3.0) / (R * R)
    return np.array([dM, dU])


# -- center germs -------------------------------------------------------------

def center_germ_physical(rho_c: float, Lambda: float, eos: EosSpec, k: Constants,
                         r: float) -> tuple:
    """Leading series (m, P) at r -> +0; truncation errors O(r^5), O(r^4)."""
    P_c = eos.pressure_of_density(rho_c)
    m = FOUR_PI / 3.0 * rho_c * r**3
    coeff = (rho_c + P_c / k.c2) * (FOUR_PI * k.G * (rho_c + 3.0 * P_c / k.c2) - k.c2 * Lambda)
    P = P_c - coeff * r * r / 6.0
    return m, P


def center_germ_enthalpy(u_c: float, Lambda: float, eos: EosSpec, k: Constants,
                         r: float) -> tuple:
    """Leading series (m, u) at r -> +0 for the enthalpy form.

    The quadratic coefficient is the pressure-form one divided by
    (rho_c + P_c/c^2), since du = dP / (rho + P/c^2).
    """
    rho_c = eos.density_of_u(u_c)
    P_c = eos.pressure_of_u(u_c)
    m = FOUR_PI / 3.0 * rho_c * r**3
    u = u_c - (FOUR_PI * k.G * (rho_c + 3.0 * P_c / k.c2) - k.c2 * Lambda) * r * r / 6.0
    return m, u


def scaled_germ_u_coeff(alpha: float, eos: EosSpec, beta: float) -> float:
    """Quadratic coefficient of the scaled germ:
    Omega_rho(alpha) + 3 (gamma-1)/gamma alpha Omega_P(alpha) - beta."""
    if alpha == 0.0:
        omega_rho, omega_P = 1.0, 1.0
    else:
        omega_rho, omega_P = eos.omega_rho_P_fast(alpha)
    g = eos.gamma
    return omega_rho + 3.0 * (g - 1.0) / g * alpha * omega_P - beta


def center_germ_scaled(alpha: float, beta: float, eos: EosSpec, R: float) -> tuple:
    """Leading series (M, U) at R -> +0 of the scaled system."""
    if alpha == 0.0:
        omega_rho = 1.0
    else:
        omega_rho, _ = eos.omega_rho_P_fast(alpha)
    M = omega_rho * R**3 / 3.0
    U = 1.0 - scaled_germ_u_coeff(alpha, eos, beta) * R * R / 6.0
    return M, U


# -- homology scaling ---------------------------------------------------------

@dataclass(frozen=True)
class ScalingParams:
    """Homology scales mapping the physical system onto the scaled one.

    r = a R,  u = b U,  m = mass_scale * M  with  mass_scale = 4 pi A1 a^3 b^mu,
    and 4 pi G A1 a^2 b^(mu-1) = 1.  alpha = b/c^2 measures how relativistic
    the star is; beta = lam * b^(-mu) is the scaled cosmological constant.
    """

    a: float
    b: float
    alpha: float
    beta: float
    lam: float
    Lambda: float
    mass_scale: float
    mu: float
    A1: float
    G: float
    c: float

    @classmethod
    def from_center(cls, u_c: float, Lambda: float, eos: EosSpec, k: Constants) -> "ScalingParams":
        if u_c <= 0.0:
            raise ValueError("central enthalpy must be positive")
        if Lambda < 0.0:
            raise ValueError("Lambda must be nonnegative")
        b = u_c
        mu = eos.mu
        A1 = eos.A1
        a = (FOUR_PI * k.G * A1 * b ** (mu - 1.0)) ** -0.5
        lam = k.c2 * Lambda / (FOUR_PI * k.G * A1)
        return cls(
            a=a,
            b=b,
            alpha=b / k.c2,
            beta=lam * b**-mu,
            lam=lam,
            Lambda=Lambda,
            mass_scale=FOUR_PI * A1 * a**3 * b**mu,
            mu=mu,
            A1=A1,
            G=k.G,
            c=k.c,
        )

    def r_of_R(self, R):
        return self.a * R

    def R_of_r(self, r):
        return r / self.a

    def u_of_U(self, U):
        return self.b * U

    def m_of_M(self, M):
        return self.mass_scale * M

    def unscale_state(self, R: float, y) -> tuple:
        """(R, (M, U)) -> (r, (m, u))."""
        return self.a * R, np.array([self.mass_scale * y[0], self.b * y[1]])

    def scale_state(self, r: float, y) -> tuple:
        """(r, (m, u)) -> (R, (M, U))."""
        return r / self.a, np.array([y[0] / self.mass_scale, y[1] / self.b])

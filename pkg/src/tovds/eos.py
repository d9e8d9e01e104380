"""Barotropic equation of state with an analytic correction factor.

P(rho) = A rho^gamma Omega(zeta),  zeta = A rho^(gamma-1) / c^2,  Omega(0) = 1.

The enthalpy variable u = int_0^rho dP / (rho + P/c^2) linearises the vacuum
boundary.  Three derived correction functions express the state through u:

    u   = gamma A / (gamma - 1) * rho^(gamma-1) * Omega_u(zeta)
    rho = A1 * u^(1/(gamma-1))     * Omega_rho(eta),   eta = u / c^2
    P   = A A1^gamma * u^(gamma/(gamma-1)) * Omega_P(eta)

with A1 = ((gamma-1)/(gamma A))^(1/(gamma-1)).  Omega_u is a quadrature of
Omega; Omega_rho and Omega_P need the inverse map eta -> zeta, obtained by a
bracketed Newton search.  All three equal 1 at argument 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate as _quadlib

from .errors import EosDomainError, NonPhysicalEosError, QuadratureError, RootFindError

__all__ = [
    "OmegaOne",
    "OmegaSeries",
    "EosSpec",
    "ThermoState",
    "FermiEosParams",
    "fermi_eos",
    "fermi_fit_eos",
]


class OmegaOne:
    """Omega == 1: the pure polytrope P = A rho^gamma."""

    def value(self, zeta: float) -> float:
        return 1.0

    def deriv(self, zeta: float) -> float:
        return 0.0

    def deriv2(self, zeta: float) -> float:
        return 0.0

    def __eq__(self, other):
        return isinstance(other, OmegaOne)

    def __hash__(self):
        return hash("OmegaOne")

    def __repr__(self):
        return "OmegaOne()"


@dataclass(frozen=True)
class OmegaSeries:
    """Polynomial correction Omega(zeta) = sum_k coeffs[k] zeta^k, coeffs[0] = 1."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs or abs(self.coeffs[0] - 1.0) > 1e-12:
            raise NonPhysicalEosError("OmegaSeries requires coeffs[0] == 1 (Omega(0) = 1)")

    def value(self, zeta: float) -> float:
        return float(npoly.polyval(zeta, self.coeffs))

    def deriv(self, zeta: float) -> float:
        return float(npoly.polyval(zeta, npoly.polyder(self.coeffs)))

    def deriv2(self, zeta: float) -> float:
        return float(npoly.polyval(zeta, npoly.polyder(self.coeffs, 2)))


@dataclass(frozen=True)
class ThermoState:
    """One thermodynamic state expressed in every variable used here."""

    rho: float
    P: float
    u: float
    zeta: float  # A rho^(gamma-1) / c^2
    eta: float   # u / c^2


def _quad(f, a: float, b: float) -> float:
    out = _quadlib.quad(f, a, b, epsabs=1e-12, epsrel=1e-10, limit=200, full_output=1)
    if len(out) >= 4:
        raise QuadratureError(
            f"quadrature over [{a:g}, {b:g}] did not converge; "
            f"achieved error estimate {out[1]:.3e}"
        )
    return out[0]


# Sub-interval tables for the fast Omega_rho / Omega_P path: degree per piece
# and pieces per unit of eta are chosen so the tables reproduce the direct
# computation to ~1e-13 (asserted by the test suite).
_TAB_DEG = 12
_TAB_PIECES_MIN = 24
_TAB_PIECES_PER_UNIT = 6.0


@dataclass(frozen=True)
class _OmegaTables:
    lo: float
    hi: float
    n: int
    mids: tuple          # (n,) piece midpoints
    inv_halfw: float
    coef_rho: tuple      # n tuples of (deg+1) floats, lowest degree first
    coef_P: tuple


@dataclass(frozen=True)
class EosSpec:
    """Immutable EOS description; safe to share across workers.

    gamma may equal 2 (mu = 1) for the linear limiting case used by the
    scaled-system studies; the regime conditions require gamma < 2 strictly.
    """

    A: float
    gamma: float
    omega: object = field(default_factory=OmegaOne)
    delta_omega: float = 0.1
    c: float = 1.0
    eta_max: float = 8.0  # ceiling of the precomputed fast-transform tables

    def __post_init__(self):
        if not (1.0 < self.gamma <= 2.0):
            raise NonPhysicalEosError(f"gamma must satisfy 1 < gamma <= 2, got {self.gamma}")
        if self.A <= 0.0:
            raise NonPhysicalEosError(f"A must be positive, got {self.A}")
        if self.delta_omega <= 0.0:
            raise NonPhysicalEosError("delta_omega must be positive")
        if self.c <= 0.0:
            raise NonPhysicalEosError("c must be positive")
        if abs(self.omega.value(0.0) - 1.0) > 1e-12:
            raise NonPhysicalEosError("Omega(0) must equal 1")

    # -- derived constants -------------------------------------------------

    @property
    def mu(self) -> float:
        return 1.0 / (self.gamma - 1.0)

    @property
    def A1(self) -> float:
        return ((self.gamma - 1.0) / (self.gamma * self.A)) ** (1.0 / (self.gamma - 1.0))

    @property
    def p_coeff(self) -> float:
        # A * A1^gamma simplifies exactly to (gamma-1)/gamma * A1
        return (self.gamma - 1.0) / self.gamma * self.A1

    @property
    def c2(self) -> float:
        return self.c * self.c

    # -- raw polytrope-with-correction quantities ---------------------------

    def zeta_of_density(self, rho: float) -> float:
        return self.A * rho ** (self.gamma - 1.0) / self.c2

    def _check_zeta(self, zeta: float) -> None:
        if zeta < -self.delta_omega:
            raise EosDomainError(
                f"zeta = {zeta:g} below the Omega domain margin -{self.delta_omega:g}"
            )

    def _pressure_raw(self, rho: float) -> float:
        zeta = self.zeta_of_density(rho)
        self._check_zeta(zeta)
        return self.A * rho**self.gamma * self.omega.value(zeta)

    def _dpdrho_raw(self, rho: float) -> float:
        zeta = self.zeta_of_density(rho)
        self._check_zeta(zeta)
        bracket = self.omega.value(zeta) + (self.gamma - 1.0) / self.gamma * zeta * self.omega.deriv(zeta)
        return self.A * self.gamma * rho ** (self.gamma - 1.0) * bracket

    def pressure_of_density(self, rho: float) -> float:
        """P(rho); raises NonPhysicalEosError when P <= 0 or dP/drho not in (0, c^2)."""
        if rho <= 0.0:
            return 0.0
        P = self._pressure_raw(rho)
        dP = self._dpdrho_raw(rho)
        if P <= 0.0 or not (0.0 < dP < self.c2):
            raise NonPhysicalEosError(
                f"EOS not admissible at rho = {rho:g}: P = {P:g}, dP/drho = {dP:g} "
                f"(require P > 0 and 0 < dP/drho < c^2 = {self.c2:g})"
            )
        return P

    def dpressure_drho(self, rho: float) -> float:
        if rho <= 0.0:
            return 0.0
        return self._dpdrho_raw(rho)

    def validate_range(self, rho_lo: float, rho_hi: float, n: int = 64) -> None:
        """Check P > 0 and 0 < dP/drho < c^2 on a log grid of densities."""
        if not (0.0 < rho_lo < rho_hi):
            raise ValueError("need 0 < rho_lo < rho_hi")
        for rho in np.geomspace(rho_lo, rho_hi, n):
            self.pressure_of_density(float(rho))

    # -- the enthalpy transform ---------------------------------------------

    def _w(self, zp: float) -> float:
        """Integrand of Omega_u: [Omega + (gamma-1)/gamma z Omega'] / (1 + z Omega)."""
        om = self.omega.value(zp)
        den = 1.0 + zp * om
        if den <= 0.0:
            raise EosDomainError(f"1 + zeta*Omega(zeta) <= 0 at zeta = {zp:g}")
        num = om + (self.gamma - 1.0) / self.gamma * zp * self.omega.deriv(zp)
        return num / den

    def omega_u(self, zeta: float) -> float:
        """Omega_u(zeta) = (1/zeta) int_0^zeta w; removable singularity at 0."""
        self._check_zeta(zeta)
        if abs(zeta) < 1e-6:
            # series around 0 avoids the 0/0; w'(0), w''(0) from Omega's jet
            d1 = self.omega.deriv(0.0)
            d2 = self.omega.deriv2(0.0)
            w1 = (2.0 - 1.0 / self.gamma) * d1 - 1.0
            w2 = (3.0 - 2.0 / self.gamma) * d2 - (6.0 - 2.0 / self.gamma) * d1 + 2.0
            return 1.0 + 0.5 * w1 * zeta + w2 * zeta * zeta / 6.0
        return _quad(self._w, 0.0, zeta) / zeta

    def u_of_density(self, rho: float) -> float:
        """Enthalpy u(rho) through the closed transform; u(0) = 0."""
        if rho < 0.0:
            raise EosDomainError("rho must be nonnegative")
        if rho == 0.0:
            return 0.0
        zeta = self.zeta_of_density(rho)
        return self.gamma * self.A / (self.gamma - 1.0) * rho ** (self.gamma - 1.0) * self.omega_u(zeta)

    # -- eta <-> zeta inversion ----------------------------------------------

    def zeta_of_eta(self, eta: float) -> float:
        """Solve eta = gamma/(gamma-1) * zeta * Omega_u(zeta) for zeta.

        Bracketing plus Newton refinement safeguarded by bisection; the
        derivative of zeta*Omega_u(zeta) is the integrand w, so no extra
        quadrature is needed for the Newton slope.
        """
        if eta == 0.0:
            return 0.0
        if eta <= -self.delta_omega:
            raise EosDomainError(f"eta = {eta:g} below the domain margin -{self.delta_omega:g}")
        gfac = self.gamma / (self.gamma - 1.0)

        def F(z: float) -> float:
            return gfac * z * self.omega_u(z) - eta

        z0 = eta / gfac
        if eta > 0.0:
            lo, hi = 0.0, z0
            for _ in range(200):
                if F(hi) >= 0.0:
                    break
                hi *= 2.0
            else:
                raise RootFindError(f"could not bracket zeta(eta) for eta = {eta:g}")
        else:
            lo, hi = z0, 0.0
            zmin = -self.delta_omega * (1.0 - 1e-12)
            for _ in range(200):
                if lo <= zmin:
                    lo = zmin
                if F(lo) <= 0.0:
                    break
                if lo == zmin:
                    raise EosDomainError(
                        f"eta = {eta:g} maps below the Omega domain margin"
                    )
                lo *= 2.0
            else:
                raise RootFindError(f"could not bracket zeta(eta) for eta = {eta:g}")

        z = min(max(z0, lo), hi)
        for _ in range(100):
            f = F(z)
            if f < 0.0:
                lo = z
            else:
                hi = z
            slope = gfac * self._w(z)
            z_new = z - f / slope if slope > 0.0 else 0.5 * (lo + hi)
            if not (lo < z_new < hi):
                z_new = 0.5 * (lo + hi)
            if abs(z_new - z) <= 1e-15 * max(abs(z_new), 1e-30):
                return z_new
            z = z_new
        raise RootFindError(
            f"zeta(eta) did not converge for eta = {eta:g}; last bracket [{lo:g}, {hi:g}]"
        )

    def omega_rho_P(self, eta: float) -> tuple:
        """(Omega_rho(eta), Omega_P(eta)) by direct inversion of eta -> zeta.

        Omega_rho = Omega_u(zeta)^(-1/(gamma-1)) so that
        rho = A1 u^(1/(gamma-1)) Omega_rho(eta) reproduces the density, and
        Omega_P = Omega(zeta) * Omega_u(zeta)^(-gamma/(gamma-1)).
        """
        if eta == 0.0:
            return 1.0, 1.0
        zeta = self.zeta_of_eta(eta)
        # at the root, Omega_u(zeta) = (gamma-1)/gamma * eta / zeta exactly
        omu = (self.gamma - 1.0) / self.gamma * eta / zeta
        omega_rho = omu ** (-self.mu)
        omega_P = self.omega.value(zeta) * omu ** (-(self.mu + 1.0))
        return omega_rho, omega_P

    # -- fast tabulated path (used inside ODE right-hand sides) --------------

    @cached_property
    def _tables(self) -> _OmegaTables:
        lo = -0.98 * self.delta_omega
        hi = self.eta_max
        n = max(_TAB_PIECES_MIN, int(math.ceil((hi - lo) * _TAB_PIECES_PER_UNIT)))
        edges = np.linspace(lo, hi, n + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        halfw = 0.5 * (edges[1] - edges[0])
        # Chebyshev points of the first kind in the scaled piece variable
        s_nodes = np.cos(np.pi * (2.0 * np.arange(_TAB_DEG + 1) + 1.0) / (2.0 * (_TAB_DEG + 1)))
        coef_rho = []
        coef_P = []
        for mid in mids:
            etas = mid + halfw * s_nodes
            vals = np.array([self.omega_rho_P(float(e)) for e in etas])
            cr = npoly.polyfit(s_nodes, vals[:, 0], _TAB_DEG)
            cP = npoly.polyfit(s_nodes, vals[:, 1], _TAB_DEG)
            coef_rho.append(tuple(float(x) for x in cr))
            coef_P.append(tuple(float(x) for x in cP))
        return _OmegaTables(
            lo=float(lo),
            hi=float(hi),
            n=n,
            mids=tuple(float(m) for m in mids),
            inv_halfw=1.0 / float(halfw),
            coef_rho=tuple(coef_rho),
            coef_P=tuple(coef_P),
        )

    def omega_rho_P_fast(self, eta: float) -> tuple:
        """Tabulated (Omega_rho, Omega_P); falls back to the direct path
        outside the table domain.  Reproduces the direct values to ~1e-13."""
        tab = self._tables
        if eta < tab.lo or eta > tab.hi:
            return self.omega_rho_P(eta)
        i = int((eta - tab.lo) * tab.inv_halfw * 0.5)
        if i >= tab.n:
            i = tab.n - 1
        s = (eta - tab.mids[i]) * tab.inv_halfw
        cr = tab.coef_rho[i]
        cP = tab.coef_P[i]
        vr = cr[_TAB_DEG]
        vP = cP[_TAB_DEG]
        for k in range(_TAB_DEG - 1, -1, -1):
            vr = vr * s + cr[k]
            vP = vP * s + cP[k]
        return vr, vP

    # -- state reconstruction from u -----------------------------------------

    def density_of_u(self, u: float) -> float:
        """rho(u) = A1 u^mu Omega_rho(u/c^2); zero for u <= 0."""
        if u <= 0.0:
            return 0.0
        omega_rho, _ = self.omega_rho_P_fast(u / self.c2)
        return self.A1 * u**self.mu * omega_rho

    def pressure_of_u(self, u: float) -> float:
        """P(u) = A A1^gamma u^(mu+1) Omega_P(u/c^2); zero for u <= 0."""
        if u <= 0.0:
            return 0.0
        _, omega_P = self.omega_rho_P_fast(u / self.c2)
        return self.p_coeff * u ** (self.mu + 1.0) * omega_P

    def density_of_pressure(self, P: float) -> float:
        """Invert P(rho) by bracketed Newton on the uncorrected polytrope seed."""
        if P <= 0.0:
            return 0.0
        rho = (P / self.A) ** (1.0 / self.gamma)
        lo, hi = 0.0, 0.0
        for _ in range(200):
            f = self._pressure_raw(rho) - P
            if f == 0.0:
                break
            if f < 0.0:
                lo = rho
                if hi == 0.0:
                    cand = rho * 2.0
                else:
                    cand = rho - f / self._dpdrho_raw(rho)
            else:
                hi = rho
                cand = rho - f / self._dpdrho_raw(rho)
            if hi > 0.0 and not (lo < cand < hi):
                cand = 0.5 * (lo + hi)
            if abs(cand - rho) <= 1e-15 * max(abs(cand), 1e-300):
                rho = cand
                break
            rho = cand
        else:
            raise RootFindError(f"density_of_pressure did not converge for P = {P:g}")
        # final admissibility check at the found state
        self.pressure_of_density(rho)
        return rho

    def thermo_of_density(self, rho: float) -> ThermoState:
        u = self.u_of_density(rho)
        return ThermoState(
            rho=rho,
            P=self._pressure_raw(rho) if rho > 0.0 else 0.0,
            u=u,
            zeta=self.zeta_of_density(rho) if rho > 0.0 else 0.0,
            eta=u / self.c2,
        )


# -- relativistic zero-temperature Fermi gas ---------------------------------

@dataclass(frozen=True)
class FermiEosParams:
    """Scale constant of the ideal relativistic Fermi fluid.

    P  = K c^5 int_0^zeta q^4 / sqrt(1+q^2) dq
    rho = 3 K c^3 int_0^zeta sqrt(1+q^2) q^2 dq
    """

    K: float
    c: float = 1.0

    def __post_init__(self):
        if self.K <= 0.0:
            raise NonPhysicalEosError("Fermi constant K must be positive")


# binomial coefficients C(-1/2, k) and C(1/2, k) for the small-argument series
_BIN_M12 = [1.0]
_BIN_P12 = [1.0]
for _k in range(1, 16):
    _BIN_M12.append(_BIN_M12[-1] * (-0.5 - (_k - 1)) / _k)
    _BIN_P12.append(_BIN_P12[-1] * (0.5 - (_k - 1)) / _k)


def _fermi_pressure_dimless(z: float) -> float:
    """int_0^z q^4 / sqrt(1+q^2) dq, evaluated in closed form."""
    if z < 0.35:
        # the antiderivative cancels to O(z^5); sum the series instead
        acc = 0.0
        for k in range(15, -1, -1):
            acc += _BIN_M12[k] * z ** (5 + 2 * k) / (5 + 2 * k)
        return acc
    s = math.sqrt(1.0 + z * z)
    return 0.125 * (z * (2.0 * z * z - 3.0) * s + 3.0 * math.asinh(z))


def _fermi_density_dimless(z: float) -> float:
    """int_0^z sqrt(1+q^2) q^2 dq, evaluated in closed form."""
    if z < 0.35:
        acc = 0.0
        for k in range(15, -1, -1):
            acc += _BIN_P12[k] * z ** (3 + 2 * k) / (3 + 2 * k)
        return acc
    s = math.sqrt(1.0 + z * z)
    return 0.125 * (z * (2.0 * z * z + 1.0) * s - math.asinh(z))


def fermi_eos(zeta: float, params: FermiEosParams) -> tuple:
    """(rho, P) of the relativistic Fermi fluid at momentum parameter zeta."""
    if zeta < 0.0:
        raise EosDomainError("Fermi momentum parameter must be nonnegative")
    c = params.c
    P = params.K * c**5 * _fermi_pressure_dimless(zeta)
    rho = 3.0 * params.K * c**3 * _fermi_density_dimless(zeta)
    return rho, P


def fermi_fit_eos(
    params: FermiEosParams,
    zeta_fit_max: float = 0.75,
    deg: int = 10,
    n_samples: int = 80,
    delta_omega: float = 0.05,
) -> EosSpec:
    """EosSpec with gamma = 5/3 and a series Omega fitted to the Fermi fluid.

    The low-density expansion gives A = K^(-2/3)/5 and gamma = 5/3; the
    residual correction Omega(zeta) = P / (A rho^gamma) is fitted as a
    polynomial over the momentum window [0, zeta_fit_max].
    """
    gamma = 5.0 / 3.0
    A = params.K ** (-2.0 / 3.0) / 5.0
    c2 = params.c * params.c

    zs = np.linspace(1e-3, zeta_fit_max, n_samples)
    rows = np.array([fermi_eos(float(z), params) for z in zs])
    rho, P = rows[:, 0], rows[:, 1]
    zeta_var = A * rho ** (gamma - 1.0) / c2
    omega_vals = P / (A * rho**gamma)

    # least squares in the scaled variable keeps the Vandermonde well conditioned;
    # the constant term is pinned to Omega(0) = 1
    smax = zeta_var.max()
    s = zeta_var / smax
    M = np.vander(s, deg + 1, increasing=True)[:, 1:]
    coeffs_scaled, *_ = np.linalg.lstsq(M, omega_vals - 1.0, rcond=None)
    coeffs = [1.0] + [float(coeffs_scaled[k] / smax ** (k + 1)) for k in range(deg)]

    u_top = 0.5 * c2 * math.log1p(zeta_fit_max**2)
    return EosSpec(
        A=A,
        gamma=gamma,
        omega=OmegaSeries(tuple(coeffs)),
        delta_omega=delta_omega,
        c=params.c,
        eta_max=1.25 * u_top / c2,
    )

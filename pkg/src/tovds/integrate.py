"""Adaptive embedded Runge-Kutta 5(4) integration with dense output and events.

Dormand-Prince pair, FSAL, with the standard quartic free interpolant.
Event guards are root-located on the interpolant by a safeguarded
bisection/secant hybrid (scipy brentq), and a terminal event truncates the
solution at the located abscissa.  Everything is deterministic: identical
inputs give bitwise-identical trajectories within one build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainSignalError

__all__ = [
    "StepControl",
    "EventSpec",
    "EventRecord",
    "DenseSolution",
    "integrate_adaptive",
    "locate_event",
]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# fifth-order weights minus fourth-order weights: error estimate e = h * K^T E
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# quartic interpolant coefficients (Shampine); y(x0 + t*h) = y0 + h * (K^T P) . [t, t^2, t^3, t^4]
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_BRENT_RTOL = 4.0 * np.finfo(float).eps
_EVENT_MAXITER = 80


@dataclass(frozen=True)
class StepControl:
    """Dimensionless tolerances and step bounds for one integration."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    h_init: float | None = None
    h_max: float = math.inf
    max_steps: int = 500_000

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.h_init is not None and self.h_init > self.h_max:
            raise ValueError("h_init must not exceed h_max")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class EventSpec:
    """Scalar guard g(x, y) whose directed zero crossing is an event."""

    guard: object
    direction: str = "any"  # "falling" | "rising" | "any"
    root_tol: float = 1e-12
    terminal: bool = False
    name: str = ""

    def __post_init__(self):
        if self.direction not in ("falling", "rising", "any"):
            raise ValueError(f"bad direction {self.direction!r}")
        if self.root_tol <= 0.0:
            raise ValueError("root_tol must be positive")


@dataclass(frozen=True)
class EventRecord:
    x: float
    y: np.ndarray
    index: int
    name: str
    terminal: bool


@dataclass
class DenseSolution:
    """Accepted steps, interpolants, event log and termination status."""

    xs: np.ndarray            # accepted nodes, shape (n+1,)
    ys: np.ndarray            # states at nodes, shape (n+1, dim)
    interp: np.ndarray        # per-step quartic coefficients, shape (n, dim, 4)
    events: list = field(default_factory=list)
    status: str = "completed"  # completed|event|step_budget|step_underflow|domain_error
    message: str = ""
    x_end: float = 0.0
    y_end: np.ndarray | None = None
    n_steps: int = 0
    n_rhs: int = 0
    failure: Exception | None = None

    @property
    def x0(self) -> float:
        return float(self.xs[0])

    def _eval_scalar(self, x: float) -> np.ndarray:
        xs = self.xs
        # snap exactly onto stored nodes so endpoint states are reproduced exactly
        i = int(np.searchsorted(xs, x))
        if i < len(xs) and xs[i] == x:
            return self.ys[i].copy()
        if i == 0 or i > len(self.interp):
            raise ValueError(f"x = {x:g} outside the solution span [{xs[0]:g}, {self.x_end:g}]")
        k = i - 1
        h = xs[k + 1] - xs[k]
        t = (x - xs[k]) / h
        q = self.interp[k]
        acc = q[:, 3]
        for j in (2, 1, 0):
            acc = acc * t + q[:, j]
        return self.ys[k] + h * t * acc

    def __call__(self, x):
        if np.ndim(x) == 0:
            return self._eval_scalar(float(x))
        return np.array([self._eval_scalar(float(xi)) for xi in np.asarray(x).ravel()])

    def span(self) -> tuple:
        return float(self.xs[0]), float(self.x_end)


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(f, x0, y0, f0, rtol, atol_vec, h_max):
    # span-free on purpose: the same problem must start with the same step
    # whatever the integration cap is; the caller clamps to the span.
    scale = atol_vec + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    try:
        f1 = f(x0 + h0, y0 + h0 * f0)
        d2 = _rms((f1 - f0) / scale) / h0
        if not math.isfinite(d2):
            d2 = d1
    except DomainSignalError:
        d2 = d1
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, h_max)


def _locate_in_step(sol_eval, guard, x_lo, x_hi, g_lo, g_hi, root_tol):
    """Refine a sign change of guard on one interpolant segment."""
    if g_lo == 0.0:
        return x_lo
    if g_hi == 0.0:
        return x_hi

    def g(x):
        return guard(x, sol_eval(x))

    return brentq(
        g, x_lo, x_hi, xtol=root_tol, rtol=_BRENT_RTOL, maxiter=_EVENT_MAXITER
    )


def _crossed(g0: float, g1: float, direction: str) -> bool:
    if direction == "falling":
        return g0 > 0.0 >= g1
    if direction == "rising":
        return g0 < 0.0 <= g1
    return (g0 > 0.0 >= g1) or (g0 < 0.0 <= g1)


def integrate_adaptive(rhs, y0, span, ctrl=None, events=(), y_scale=None) -> DenseSolution:
    """Integrate dy/dx = rhs(x, y) over span = (x0, x1), locating events.

    Parameters
    ----------
    rhs : callable (x, y) -> ndarray
        May raise DomainSignalError to signal a domain exit; the step is
        then retried smaller and the run ends with status ``domain_error``
        if the boundary cannot be resolved.
    ctrl : StepControl
    events : sequence of EventSpec
        Terminal events truncate the solution at the located abscissa.
    y_scale : ndarray, optional
        Per-component magnitude scale; the absolute tolerance for component
        i is ctrl.abs_tol * y_scale[i].
    """
    ctrl = ctrl or StepControl()
    x0, x1 = float(span[0]), float(span[1])
    if not x1 > x0:
        raise ValueError("span must satisfy x1 > x0")
    y0 = np.asarray(y0, dtype=float)
    dim = y0.size
    atol_vec = ctrl.abs_tol * (np.ones(dim) if y_scale is None else np.asarray(y_scale, dtype=float))

    xs = [x0]
    ys = [y0.copy()]
    interp = []
    records: list = []
    n_rhs = 0

    def f(x, y):
        nonlocal n_rhs
        n_rhs += 1
        out = np.asarray(rhs(x, y), dtype=float)
        return out

    sol = DenseSolution(
        xs=np.array(xs), ys=np.array(ys), interp=np.empty((0, dim, 4)),
        x_end=x0, y_end=y0.copy(),
    )

    def _finish(status, message="", failure=None, x_end=None, y_end=None):
        sol.xs = np.array(xs)
        sol.ys = np.array(ys)
        sol.interp = np.array(interp) if interp else np.empty((0, dim, 4))
        sol.events = records
        sol.status = status
        sol.message = message
        sol.failure = failure
        sol.x_end = xs[-1] if x_end is None else x_end
        sol.y_end = ys[-1].copy() if y_end is None else y_end
        sol.n_steps = len(interp)
        sol.n_rhs = n_rhs
        return sol

    try:
        f0 = f(x0, y0)
    except DomainSignalError as exc:
        return _finish("domain_error", f"right-hand side undefined at start: {exc}", exc)

    g_prev = []
    for ev in events:
        g_prev.append(float(ev.guard(x0, y0)))

    h = ctrl.h_init
    if h is None:
        h = _initial_step(f, x0, y0, f0, ctrl.rel_tol, atol_vec, ctrl.h_max)
    h = min(h, ctrl.h_max, x1 - x0)

    x, y, fy = x0, y0.copy(), f0
    K = np.empty((7, dim))
    attempts = 0
    rejected = False

    while x < x1:
        if attempts >= ctrl.max_steps:
            return _finish("step_budget", f"step budget {ctrl.max_steps} exhausted at x = {x:g}")
        attempts += 1

        h = min(h, x1 - x)
        if h <= 16.0 * np.finfo(float).eps * max(abs(x), 1.0):
            return _finish("step_underflow", f"step size underflow at x = {x:g}")

        K[0] = fy
        domain_exc = None
        try:
            for s in range(1, 6):
                ysub = y + h * (K[:s].T @ _A[s])
                K[s] = f(x + _C[s] * h, ysub)
            y_new = y + h * (K[:6].T @ _B[:6])
            K[6] = f(x + h, y_new)
        except DomainSignalError as exc:
            domain_exc = exc

        if domain_exc is not None or not np.all(np.isfinite(K)):
            # boundary or blow-up inside the step: retry smaller
            h *= 0.25
            rejected = True
            if h <= 16.0 * np.finfo(float).eps * max(abs(x), 1.0):
                if domain_exc is not None:
                    return _finish("domain_error", f"domain exit at x = {x:g}: {domain_exc}", domain_exc)
                return _finish("step_underflow", f"non-finite right-hand side at x = {x:g}")
            continue

        err_vec = h * (K.T @ _E)
        scale = atol_vec + ctrl.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)

        if err > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            rejected = True
            continue

        # accepted
        factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
        if rejected:
            factor = min(1.0, factor)
        rejected = False

        q = (K.T @ _P)  # (dim, 4)
        x_new = x + h

        def step_eval(xq, _x0=x, _y0=y, _h=h, _q=q, _x1=x_new, _y1=y_new):
            if xq == _x1:
                return _y1.copy()
            t = (xq - _x0) / _h
            acc = _q[:, 3]
            for j in (2, 1, 0):
                acc = acc * t + _q[:, j]
            return _y0 + _h * t * acc

        xs.append(x_new)
        ys.append(y_new.copy())
        interp.append(q)

        hit = []  # (x_event, index)
        for idx, ev in enumerate(events):
            g_new = float(ev.guard(x_new, y_new))
            if _crossed(g_prev[idx], g_new, ev.direction):
                x_ev = _locate_in_step(
                    step_eval, ev.guard, x, x_new, g_prev[idx], g_new, ev.root_tol
                )
                hit.append((x_ev, idx))
            g_prev[idx] = g_new

        if hit:
            hit.sort()
            terminal_x = None
            for x_ev, idx in hit:
                ev = events[idx]
                y_ev = step_eval(x_ev)
                records.append(EventRecord(x=x_ev, y=y_ev, index=idx, name=ev.name, terminal=ev.terminal))
                if ev.terminal:
                    terminal_x = x_ev
                    break
            if terminal_x is not None:
                y_term = step_eval(terminal_x)
                return _finish("event", f"terminal event at x = {terminal_x:g}",
                               x_end=terminal_x, y_end=y_term)

        # K is a reused buffer: detach the FSAL slope before the next attempt
        x, y, fy = x_new, y_new, K[6].copy()
        h = min(h * factor, ctrl.h_max)

    return _finish("completed")


def locate_event(dense: DenseSolution, guard, direction="any", root_tol=1e-12):
    """Scan a dense solution for the first directed zero of guard(x, y(x)).

    Returns (x, y) at the located root, or None when the guard never
    crosses in the requested direction.
    """
    xs = dense.xs
    g0 = float(guard(xs[0], dense.ys[0]))
    for k in range(dense.interp.shape[0]):
        x_hi = min(float(xs[k + 1]), dense.x_end)
        if x_hi <= float(xs[k]):
            break
        y_hi = dense._eval_scalar(x_hi)
        g1 = float(guard(x_hi, y_hi))
        if _crossed(g0, g1, direction):
            x_ev = _locate_in_step(dense._eval_scalar, guard, float(xs[k]), x_hi, g0, g1, root_tol)
            return x_ev, dense._eval_scalar(x_ev)
        g0 = g1
    return None

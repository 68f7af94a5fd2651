"""Degree-profile ODE system driving the list-colouring dynamics.

The state is a pair of density vectors over remaining degree 0..Delta:
``u`` (vertices with a two-colour list) and ``w`` (vertices with all three
colours), both as fractions of n.  Time t is the number of free colouring
steps divided by n.  The module provides

* the conditioned-Poisson initial data (``phi``, ``initial_state``),
* the right-hand side with its rate constant kappa, evaluated on
  zero-clamped inputs,
* the spectral quantities lambda(t) (forced-cascade criticality) and
  gamma(t) (Molloy-Reed criterion for the residual graph),
* an embedded Runge-Kutta 4(5) integrator with dense output, gamma-zero
  detection (t*), and an achieved-margin report, and
* the d_max(alpha) feasibility bisection.

None of this depends on the disassortativity parameter beta: the dynamics
are a function of (d, alpha, Delta) only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DegenerateStateError, ParameterError
from .poisson import binomial_pmf, poisson_pmf, poisson_tail

STOP_EPSILON = 1e-10  # below this total two-list mass the alpha-power sums are meaningless
STATE_FLOOR = 1e-14  # components this small are projected to 0 between steps
DEFAULT_REL_TOL = 1e-8
DEFAULT_ABS_TOL = 1e-10
GRID_POINTS = 1000
TSTAR_TOL = 1e-8
REPORT_OVERSHOOT = 0.02


def default_delta(d: float, tail_target: float = 1e-8) -> int:
    """Smallest Delta with P[Po(d) > Delta] below the target."""
    delta = max(1, int(d))
    while poisson_tail(d, delta + 1) >= tail_target:
        delta += 1
    return delta


def phi(d: float, delta: int) -> float:
    """Probability that the neighbour at the end of a random edge has degree > Delta.

    Defined as d^{-1} sum_{i>Delta} i P[Po(d)=i]; the shift identity
    sum_{i>Delta} i P[Po(d)=i] = d P[Po(d) >= Delta] lets us evaluate the
    size-biased tail without truncating an infinite sum.
    """
    if d <= 0:
        raise ParameterError(f"d must be positive, got {d}")
    if delta < 0:
        raise ParameterError(f"delta must be >= 0, got {delta}")
    return poisson_tail(d, delta)


@dataclass
class OdeState:
    t: float
    u: np.ndarray
    w: np.ndarray


def initial_state(d: float, delta: int) -> OdeState:
    """Densities at t = 0.

    A vertex of conditioned-Poisson degree m keeps each neighbour
    independently with probability 1 - phi (the neighbour was not removed
    as high-degree); losing j >= 1 neighbours leaves it with a two-colour
    list and remaining degree m - j, losing none leaves it white.
    """
    if d <= 0 or delta < 1:
        raise ParameterError(f"need d > 0 and delta >= 1, got d={d}, delta={delta}")
    pmf = poisson_pmf(d, delta)
    cond = pmf / pmf.sum()
    f = phi(d, delta)
    w = cond * (1.0 - f) ** np.arange(delta + 1)
    u = np.zeros(delta + 1)
    for ell in range(delta + 1):
        acc = 0.0
        for j in range(1, delta - ell + 1):
            acc += cond[ell + j] * binomial_pmf(ell + j, f)[j]
        u[ell] = acc
    return OdeState(t=0.0, u=u, w=w)


# --- closed-form rates ------------------------------------------------------


def lambda_of(u: np.ndarray, w: np.ndarray) -> float:
    """Dominant eigenvalue of the forced-colouring offspring matrix."""
    i = np.arange(len(u))
    den = 3.0 * float(np.dot(i, u + w))
    if den <= 0.0:
        raise DegenerateStateError("lambda undefined: no remaining edge mass")
    return 2.0 * float(np.dot(i * (i - 1), u)) / den


def gamma_of(u: np.ndarray, w: np.ndarray) -> float:
    """Molloy-Reed criterion sum_l l(l-2)(u_l + w_l) of the residual graph."""
    i = np.arange(len(u))
    return float(np.dot(i * (i - 2), u + w))


def kappa_of(u: np.ndarray, w: np.ndarray, alpha: float) -> float:
    """Expected boundary-edge constant of one epoch's forced cascade."""
    i = np.arange(len(u))
    m1 = float(np.dot(i, u + w))
    den = float(np.dot(3 * i, w) + np.dot(5 * i - 2 * i**2, u))
    ua = float(np.dot(i**alpha, u))
    ua1 = float(np.dot(i ** (alpha + 1), u))
    if m1 <= 0.0 or ua <= 0.0 or den <= 0.0:
        raise DegenerateStateError(
            f"kappa undefined: m1={m1:.3g}, u_alpha={ua:.3g}, denominator={den:.3g}"
        )
    return 3.0 * m1 / den * ua1 / ua


@njit(cache=True)
def _rhs_into(y, i, ia, ia1, dy):
    """Derivative of the flat state y = (u, w) into dy; 0 on success, 1 if degenerate.

    Inputs are clamped at zero; the stored state itself is left raw.
    """
    n1 = y.shape[0] // 2
    m1 = 0.0
    ua = 0.0
    ua1 = 0.0
    den = 0.0
    for l in range(n1):
        u = y[l] if y[l] > 0.0 else 0.0
        w = y[n1 + l] if y[n1 + l] > 0.0 else 0.0
        il = i[l]
        m1 += il * (u + w)
        ua += ia[l] * u
        ua1 += ia1[l] * u
        den += 3.0 * il * w + (5.0 * il - 2.0 * il * il) * u
    if m1 <= 0.0 or ua <= 0.0 or den <= 0.0:
        return 1
    kap = 3.0 * m1 / den * ua1 / ua
    for l in range(n1):
        u = y[l] if y[l] > 0.0 else 0.0
        w = y[n1 + l] if y[n1 + l] > 0.0 else 0.0
        dy[n1 + l] = -kap * i[l] * w / m1
        inflow = 0.0
        if l < n1 - 1:
            up = y[l + 1] if y[l + 1] > 0.0 else 0.0
            wp = y[n1 + l + 1] if y[n1 + l + 1] > 0.0 else 0.0
            inflow = (i[l] + 1.0) * (wp + up / 3.0)
        dy[l] = kap * (inflow - i[l] * u) / m1 - ia[l] * u / ua
    return 0


class _RhsTables:
    """Degree-power tables shared by every evaluation at fixed (delta, alpha)."""

    def __init__(self, delta: int, alpha: float):
        self.i = np.arange(delta + 1, dtype=float)
        self.ia = self.i**alpha
        self.ia1 = self.i ** (alpha + 1)


def _make_rhs(delta: int, alpha: float):
    tab = _RhsTables(delta, alpha)

    def f(y: np.ndarray) -> np.ndarray:
        dy = np.empty_like(y)
        if _rhs_into(y, tab.i, tab.ia, tab.ia1, dy) != 0:
            raise DegenerateStateError("rhs undefined: vanished moment or kappa denominator")
        return dy

    return f


def rhs(u: np.ndarray, w: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives (du, dw); inputs are clamped at zero first."""
    delta = len(u) - 1
    dy = _make_rhs(delta, alpha)(np.concatenate([u, w]).astype(float))
    return dy[: delta + 1], dy[delta + 1 :]


# --- embedded Runge-Kutta 4(5) (Dormand-Prince) -----------------------------

_DP_A = np.zeros((7, 7))
_DP_A[1, :1] = [1 / 5]
_DP_A[2, :2] = [3 / 40, 9 / 40]
_DP_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_DP_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_DP_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_DP_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_BD = _DP_B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


@njit(cache=True)
def _post_accept(y_new, i, floor):
    """Floor tiny components in place; return (n_floored, usum, gamma)."""
    n1 = y_new.shape[0] // 2
    floored = 0
    usum = 0.0
    gam = 0.0
    for j in range(2 * n1):
        v = y_new[j]
        if v != 0.0 and -floor < v < floor:
            y_new[j] = 0.0
            floored += 1
    for l in range(n1):
        u = y_new[l] if y_new[l] > 0.0 else 0.0
        w = y_new[n1 + l] if y_new[n1 + l] > 0.0 else 0.0
        usum += u
        gam += i[l] * (i[l] - 2.0) * (u + w)
    return floored, usum, gam


@njit(cache=True)
def _dp_attempt(y, fy, h, i, ia, ia1, rel_tol, abs_tol, k, y_new, ytmp):
    """One trial step of size h: stages, 5th-order update, scaled error norm.

    Returns (status, err_norm): status 0 = evaluated, 1 = a stage hit a
    degenerate point (caller shrinks h).  On status 0, y_new holds the
    candidate state and k[6] its derivative (FSAL).
    """
    n = y.shape[0]
    for j in range(n):
        k[0, j] = fy[j]
    for s in range(1, 7):
        for j in range(n):
            acc = 0.0
            for q in range(s):
                acc += _DP_A[s, q] * k[q, j]
            ytmp[j] = y[j] + h * acc
        if _rhs_into(ytmp, i, ia, ia1, k[s]) != 0:
            return 1, 0.0
    err_sq = 0.0
    for j in range(n):
        acc5 = 0.0
        acce = 0.0
        for q in range(7):
            acc5 += _DP_B5[q] * k[q, j]
            acce += _DP_BD[q] * k[q, j]
        y_new[j] = y[j] + h * acc5
        e = h * acce
        ya = abs(y[j])
        yb = abs(y_new[j])
        sc = abs_tol + rel_tol * (ya if ya > yb else yb)
        err_sq += (e / sc) ** 2
    return 0, math.sqrt(err_sq / n)


@dataclass
class _Step:
    t0: float
    t1: float
    y0: np.ndarray
    y1: np.ndarray
    f0: np.ndarray
    f1: np.ndarray

    def interpolate(self, t: float) -> np.ndarray:
        """Cubic Hermite interpolation inside the step."""
        h = self.t1 - self.t0
        if h == 0.0:
            return self.y0
        s = (t - self.t0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s**2 * (3 - 2 * s)
        h11 = s**2 * (s - 1)
        return h00 * self.y0 + h10 * h * self.f0 + h01 * self.y1 + h11 * h * self.f1


class _StepUnderflow(Exception):
    pass


def _merge_pairs(steps: list[_Step]) -> list[_Step]:
    """Halve the dense-output skeleton by joining adjacent steps.

    Hermite data stays valid: a merged step keeps the endpoint states and
    derivatives of the pair it spans.
    """
    out = []
    for a in range(0, len(steps) - 1, 2):
        s0, s1 = steps[a], steps[a + 1]
        out.append(_Step(s0.t0, s1.t1, s0.y0, s1.y1, s0.f0, s1.f1))
    if len(steps) % 2:
        out.append(steps[-1])
    return out


def _rk45_steps(f, tab, t0, y0, t_end, rel_tol, abs_tol, max_attempts=4_000_000):
    """Generate accepted steps until t_end or a DegenerateStateError.

    Yields (step, usum, gamma) triples; raises _StepUnderflow when the
    controller cannot make progress, DegenerateStateError when the RHS
    turns undefined at the starting point itself.

    Components whose magnitude falls below STATE_FLOOR are projected to
    exactly zero between steps so that long-dead degree shells cannot keep
    forcing tiny steps through their decay rate alone.
    """
    t = t0
    y = y0.copy()
    fy = f(y)
    scale0 = abs_tol + rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale0) ** 2))
    d1 = np.sqrt(np.mean((fy / scale0) ** 2))
    h = 1e-6 if d1 <= 0 else min(1e-2, 0.01 * d0 / d1 if d0 > 0 else 1e-6)
    h = min(h, t_end - t0)
    n_attempts = 0
    n = len(y)
    k = np.empty((7, n))
    y_new = np.empty(n)
    ytmp = np.empty(n)
    while t < t_end:
        if n_attempts >= max_attempts:
            raise _StepUnderflow(f"attempt cap {max_attempts} reached at t={t:.6g}")
        h = min(h, t_end - t)
        if h < 1e-14 * max(1.0, t):
            raise _StepUnderflow(f"step size underflow at t={t:.6g}")
        status, err_norm = _dp_attempt(
            y, fy, h, tab.i, tab.ia, tab.ia1, rel_tol, abs_tol, k, y_new, ytmp
        )
        n_attempts += 1
        if status != 0:
            h *= 0.5
            continue
        if err_norm <= 1.0:
            yn = y_new.copy()
            floored, usum, gam = _post_accept(yn, tab.i, STATE_FLOOR)
            fn = f(yn) if floored else k[6].copy()  # k[6] is FSAL f(t+h, y_new)
            step = _Step(t, t + h, y, yn, fy, fn)
            t += h
            y = yn
            fy = fn
            yield step, usum, gam
            factor = 5.0 if err_norm == 0.0 else min(5.0, 0.9 * err_norm**-0.2)
            h *= factor
        else:
            h *= max(0.2, 0.9 * err_norm**-0.2)


@dataclass
class AssumptionReport:
    """Achieved margins for the three solvability conditions."""

    t_star: float | None
    xi_positivity: float | None
    xi_gamma: float | None
    xi_lambda: float | None
    feasible: bool

    def as_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "xi_positivity": self.xi_positivity,
            "xi_gamma": self.xi_gamma,
            "xi_lambda": self.xi_lambda,
            "feasible": self.feasible,
        }


@dataclass
class OdeTrajectory:
    d: float
    alpha: float
    delta: int
    t: np.ndarray  # uniform grid, t[-1] = stop time
    u: np.ndarray  # (len(t), delta+1)
    w: np.ndarray
    lam: np.ndarray
    gam: np.ndarray
    t_star: float | None
    stop_reason: str  # gamma_zero | t_end | u_exhausted | degenerate | step_underflow
    report: AssumptionReport
    steps: list = field(default_factory=list, repr=False)

    @property
    def failed(self) -> bool:
        return self.stop_reason in ("degenerate", "step_underflow")

    def max_lambda_supercritical(self) -> float:
        """sup of lambda over grid points with gamma > 0 (-inf if none)."""
        mask = self.gam > 0.0
        return float(self.lam[mask].max()) if mask.any() else -math.inf


def _lam_gam(y: np.ndarray, delta: int) -> tuple[float, float]:
    u = np.maximum(y[: delta + 1], 0.0)
    w = np.maximum(y[delta + 1 :], 0.0)
    return lambda_of(u, w), gamma_of(u, w)


def _bisect_gamma_zero(step: _Step, delta: int) -> tuple[float, np.ndarray]:
    lo, hi = step.t0, step.t1
    while hi - lo > TSTAR_TOL:
        mid = 0.5 * (lo + hi)
        g = gamma_of(
            np.maximum(step.interpolate(mid)[: delta + 1], 0.0),
            np.maximum(step.interpolate(mid)[delta + 1 :], 0.0),
        )
        if g > 0.0:
            lo = mid
        else:
            hi = mid
    return hi, step.interpolate(hi)


def integrate_from(
    state0: OdeState,
    alpha: float,
    t_end: float = 1.0,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    grid_points: int = GRID_POINTS,
    d: float = math.nan,
    with_report: bool = True,
    stop_at_gamma_zero: bool = True,
) -> OdeTrajectory:
    """Integrate the system from an explicit initial state (see integrate())."""
    delta = len(state0.u) - 1
    if rel_tol <= 0 or abs_tol <= 0:
        raise ParameterError("tolerances must be positive")
    tab = _RhsTables(delta, alpha)

    def f(y: np.ndarray) -> np.ndarray:
        dy = np.empty_like(y)
        if _rhs_into(y, tab.i, tab.ia, tab.ia1, dy) != 0:
            raise DegenerateStateError("rhs undefined: vanished moment or kappa denominator")
        return dy

    y0 = np.concatenate([state0.u, state0.w]).astype(float)
    steps: list[_Step] = []
    keep = 20_000  # dense-output skeleton cap; adjacent steps merge beyond it
    t_star = None
    stop_reason = "t_end"
    t_stop = t_end
    y_stop = y0

    gam0 = gamma_of(np.maximum(state0.u, 0.0), np.maximum(state0.w, 0.0))
    if stop_at_gamma_zero and gam0 <= 0.0:
        # already subcritical: t* = 0, no interior trajectory
        t_star, t_stop, stop_reason = state0.t, state0.t, "gamma_zero"
    elif float(np.maximum(state0.u, 0.0).sum()) < STOP_EPSILON:
        t_stop, stop_reason = state0.t, "u_exhausted"
    else:
        try:
            for step, usum, gam in _rk45_steps(f, tab, state0.t, y0, t_end, rel_tol, abs_tol):
                steps.append(step)
                if len(steps) >= 2 * keep:
                    steps = _merge_pairs(steps)
                if stop_at_gamma_zero and gam <= 0.0:
                    t_star, y_stop = _bisect_gamma_zero(step, delta)
                    t_stop, stop_reason = t_star, "gamma_zero"
                    break
                if usum < STOP_EPSILON:
                    t_stop, y_stop, stop_reason = step.t1, step.y1, "u_exhausted"
                    break
                t_stop, y_stop = step.t1, step.y1
        except DegenerateStateError:
            stop_reason = "degenerate"
            t_stop = steps[-1].t1 if steps else state0.t
            y_stop = steps[-1].y1 if steps else y0
        except _StepUnderflow:
            stop_reason = "step_underflow"
            t_stop = steps[-1].t1 if steps else state0.t
            y_stop = steps[-1].y1 if steps else y0

    grid, ug, wg, lam, gam = _sample_grid(steps, state0, y_stop, t_stop, delta, grid_points)
    report = AssumptionReport(t_star, None, None, None, False)
    traj = OdeTrajectory(
        d=d, alpha=alpha, delta=delta, t=grid, u=ug, w=wg, lam=lam, gam=gam,
        t_star=t_star, stop_reason=stop_reason, report=report, steps=steps,
    )
    if with_report:
        _fill_report(traj, y_stop, alpha, rel_tol, abs_tol)
    return traj


def integrate(
    d: float,
    alpha: float,
    delta: int,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    grid_points: int = GRID_POINTS,
    with_report: bool = True,
) -> OdeTrajectory:
    """Solve the system from the conditioned-Poisson initial data.

    Stops at the first of: t = 1, gamma(t) <= 0 (bisected to TSTAR_TOL and
    recorded as t*), total two-list mass below STOP_EPSILON, or an undefined
    right-hand side.  The trajectory is sampled on a uniform grid.
    """
    return integrate_from(
        initial_state(d, delta), alpha,
        rel_tol=rel_tol, abs_tol=abs_tol, grid_points=grid_points,
        d=d, with_report=with_report,
    )


def _sample_grid(steps, state0, y_stop, t_stop, delta, grid_points):
    if not steps or t_stop <= state0.t:
        grid = np.array([state0.t])
        ys = np.array([np.concatenate([state0.u, state0.w])])
    else:
        grid = np.linspace(state0.t, t_stop, grid_points)
        ends = np.array([s.t1 for s in steps])
        ys = np.empty((len(grid), 2 * (delta + 1)))
        for j, t in enumerate(grid):
            idx = min(int(np.searchsorted(ends, t, side="left")), len(steps) - 1)
            ys[j] = steps[idx].interpolate(min(t, steps[idx].t1))
        ys[-1] = y_stop
    ug = np.maximum(ys[:, : delta + 1], 0.0)
    wg = np.maximum(ys[:, delta + 1 :], 0.0)
    lam = np.full(len(grid), np.nan)
    gam = np.empty(len(grid))
    for j in range(len(grid)):
        gam[j] = gamma_of(ug[j], wg[j])
        try:
            lam[j] = lambda_of(ug[j], wg[j])
        except DegenerateStateError:
            pass
    return grid, ug, wg, lam, gam


def _fill_report(traj: OdeTrajectory, y_stop: np.ndarray, alpha, rel_tol, abs_tol) -> None:
    """Measure achieved margins, continuing briefly past t* where possible.

    Positivity uses the raw (unclamped) trajectory so a solver excursion
    below zero shows up as a negative margin instead of being hidden.
    """
    delta = traj.delta
    if traj.steps:
        min_uw = min(float(s.y1.min()) for s in traj.steps)
        min_uw = min(min_uw, float(traj.steps[0].y0.min()))
    else:
        min_uw = float(min(traj.u[0].min(), traj.w[0].min()))
    ratios = [1.5 * l for l in traj.lam[~np.isnan(traj.lam)]]
    xi_gamma = None
    if traj.t_star is not None and traj.stop_reason == "gamma_zero" and traj.t_star < 1.0:
        over = OdeState(
            t=traj.t_star, u=y_stop[: delta + 1].copy(), w=y_stop[delta + 1 :].copy()
        )
        tail = integrate_from(
            over, alpha, t_end=min(1.0, traj.t_star + REPORT_OVERSHOOT),
            rel_tol=rel_tol, abs_tol=abs_tol, grid_points=64,
            d=traj.d, with_report=False, stop_at_gamma_zero=False,
        )
        for s in tail.steps:
            u1 = np.maximum(s.y1[: delta + 1], 0.0)
            w1 = np.maximum(s.y1[delta + 1 :], 0.0)
            xi_gamma = -gamma_of(u1, w1)
            min_uw = min(min_uw, float(s.y1.min()))
            try:
                ratios.append(1.5 * lambda_of(u1, w1))
            except DegenerateStateError:
                pass
        if xi_gamma is None:
            xi_gamma = 0.0
    xi_lambda = 1.5 - max(ratios) if ratios else None
    traj.report = AssumptionReport(
        t_star=traj.t_star,
        xi_positivity=min_uw,
        xi_gamma=xi_gamma,
        xi_lambda=xi_lambda,
        feasible=(not traj.failed) and traj.max_lambda_supercritical() < 1.0,
    )


@dataclass
class DmaxResult:
    alpha: float
    delta: int
    d_max: float | None
    probes: list  # (d, feasible) in evaluation order


def feasible(d: float, alpha: float, delta: int, **kw) -> bool:
    """Integration reaches a regular stop and sup_{gamma>0} lambda < 1."""
    traj = integrate(d, alpha, delta, with_report=False, **kw)
    return (not traj.failed) and traj.max_lambda_supercritical() < 1.0


def d_max(
    alpha: float,
    delta: int,
    d_lo: float = 1.5,
    d_hi: float = 8.0,
    resolution: float = 1e-3,
    probe_rel_tol: float = 1e-6,
    probe_abs_tol: float = 1e-9,
    confirm: bool = True,
) -> DmaxResult:
    """Largest d for which lambda stays below 1 while gamma > 0, by bisection.

    Probes run at a relaxed tolerance (lambda is tolerance-stable far below
    the 1e-3 bisection resolution); the final bracket is re-confirmed at
    the default tight tolerances.
    """
    if alpha < 1:
        raise ParameterError(f"alpha must be >= 1, got {alpha}")
    probes: list[tuple[float, bool]] = []

    def ok(d: float, tight: bool = False) -> bool:
        kw = {} if tight else {"rel_tol": probe_rel_tol, "abs_tol": probe_abs_tol}
        good = feasible(d, alpha, delta, **kw)
        probes.append((d, good))
        return good

    lo, hi = d_lo, d_hi
    if not ok(lo):
        return DmaxResult(alpha, delta, None, probes)
    if ok(hi):
        return DmaxResult(alpha, delta, hi, probes)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    if confirm:
        while not ok(lo, tight=True):  # loose probe was optimistic: walk down
            hi = lo
            lo -= resolution
            if lo <= d_lo:
                return DmaxResult(alpha, delta, None, probes)
        while ok(hi, tight=True):  # loose probe was pessimistic: walk up
            lo = hi
            hi += resolution
    return DmaxResult(alpha, delta, 0.5 * (lo + hi), probes)

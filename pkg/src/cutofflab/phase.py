"""Polar reduction of the second-order equation and its barrier analysis.

Writing (u, u') = r*(cos theta, sin theta) decouples the angle, which obeys
a scalar ODE with basins -pi/2, 0, pi/2 separated by explicit barrier
curves; the radius is integrated alongside in the log domain to avoid
overflow of growing solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidInput, SolverFailure, StiffnessError
from .potential import Potential
from .wkb import WkbSeries, remainder_system_terms

__all__ = [
    "PhaseSystem",
    "PhaseTrajectory",
    "PhaseSummary",
    "theta_rhs",
    "stationary_roots",
    "barriers",
    "default_horizon",
    "integrate_phase",
    "integrate_phase_summary",
    "distinguished_trajectory",
    "remainder_validation",
    "RemainderReport",
]


@dataclass(frozen=True)
class PhaseSystem:
    """Drift f and forcing g of -u'' + f u' = g u, as monomial sums in t.

    The monomial representation keeps the hot integration kernel free of
    Python callbacks; `f` and `g` evaluate the sums for callers.
    """

    f_coeffs: tuple[float, ...]
    f_powers: tuple[float, ...]
    g_coeffs: tuple[float, ...]
    g_powers: tuple[float, ...]
    t_start: float

    def __post_init__(self) -> None:
        if len(self.f_coeffs) != len(self.f_powers) or len(self.g_coeffs) != len(self.g_powers):
            raise InvalidInput("coefficient and power lists must have equal length")
        if not self.t_start > 0.0:
            raise InvalidInput(f"t_start must be positive, got {self.t_start}")

    def f(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.zeros_like(t_arr)
        for c, q in zip(self.f_coeffs, self.f_powers):
            out += c * t_arr**q
        return out if out.ndim else float(out)

    def g(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.zeros_like(t_arr)
        for c, q in zip(self.g_coeffs, self.g_powers):
            out += c * t_arr**q
        return out if out.ndim else float(out)

    @classmethod
    def power_drift(cls, exponent: float, forcing: float, t_start: float) -> "PhaseSystem":
        """f(t) = t**exponent with constant forcing; t_start must be past
        the discriminant zero f^2 = 4g."""
        return cls(
            f_coeffs=(1.0,),
            f_powers=(exponent,),
            g_coeffs=(forcing,),
            g_powers=(0.0,),
            t_start=t_start,
        )

    @classmethod
    def for_eigenfunction(cls, p: Potential, lam: float, t_start: float) -> "PhaseSystem":
        """The original eigenvalue equation: f = V', g = lam, from t_start > 0."""
        return cls.power_drift(p.gamma, lam, t_start)

    @classmethod
    def from_wkb_remainder(cls, series: WkbSeries, t_start: float | None = None) -> "PhaseSystem":
        """Remainder equation of a growth expansion: drift -2*sum S_j',
        forcing the level-N source; closed monomial forms from the ladder."""
        drift, forcing = remainder_system_terms(series)
        start = series.x_star if t_start is None else t_start
        return cls(
            f_coeffs=tuple(c for c, _ in drift),
            f_powers=tuple(q for _, q in drift),
            g_coeffs=tuple(c for c, _ in forcing),
            g_powers=tuple(q for _, q in forcing),
            t_start=start,
        )


def theta_rhs(sys: PhaseSystem, t: float, theta: float) -> float:
    """Angle velocity: -1 - (g-1)*cos^2(theta) + (f/2)*sin(2*theta)."""
    f = sys.f(t)
    g = sys.g(t)
    return -1.0 - (g - 1.0) * math.cos(theta) ** 2 + 0.5 * f * math.sin(2.0 * theta)


def stationary_roots(sys: PhaseSystem, t: float) -> tuple[float, float]:
    """tan(theta) values of the two stationary angles: (f ± sqrt(f^2-4g))/2."""
    f = sys.f(t)
    g = sys.g(t)
    disc = f * f - 4.0 * g
    if disc < 0.0:
        raise SolverFailure(f"discriminant negative at t={t}: no stationary angles")
    root = math.sqrt(disc)
    return (f - root) / 2.0, (f + root) / 2.0


def _tail_samples(t: float, horizon: float, count: int = 512) -> np.ndarray:
    return np.geomspace(t, max(horizon, t * (1.0 + 1e-9)), count)


def barriers(sys: PhaseSystem, t: float, horizon: float | None = None) -> tuple[float, float]:
    """Barrier angles (theta_l, theta_u) separating the -pi/2 and pi/2 basins.

    theta_u is the tail sup of arctan((f - sqrt(f^2 - 4*g_plus))/2) and
    theta_l the tail inf with g_minus; the sup/inf run over a geometric
    sample of [t, horizon] (tails of the intended systems are monotone, so
    the sample is exhaustive in practice).
    """
    if horizon is None:
        horizon = max(1e4, 256.0 * t)
    s = _tail_samples(t, horizon)
    f = sys.f(s)
    g = sys.g(s)
    g_plus = np.maximum(g, 0.0)
    g_minus = np.maximum(-g, 0.0)
    disc = f * f - 4.0 * g_plus
    if np.any(disc < 0.0):
        raise SolverFailure("f^2 < 4*max(g,0) within the range; barriers undefined")
    theta_u = float(np.max(np.arctan((f - np.sqrt(disc)) / 2.0)))
    theta_l = float(np.min(np.arctan((f - np.sqrt(f * f + 4.0 * g_minus)) / 2.0)))
    return theta_l, theta_u


def default_horizon(sys: PhaseSystem, tol: float = 0.01) -> float:
    """Horizon at which both outer basins are within ~tol/2 of their limits.

    Doubles from 50*(t_start+1) until the upper barrier and the gap
    pi/2 - arctan(x_plus) both fall under tol/2.
    """
    horizon = 50.0 * (sys.t_start + 1.0)
    for _ in range(40):
        f = float(sys.f(horizon))
        g = float(sys.g(horizon))
        disc = f * f - 4.0 * max(g, 0.0)
        if disc >= 0.0:
            x_minus = (f - math.sqrt(disc)) / 2.0
            x_plus = (f + math.sqrt(disc)) / 2.0
            upper_gap = math.pi / 2.0 - math.atan(x_plus) if x_plus > 0 else math.pi
            if math.atan(abs(x_minus)) <= 0.5 * tol and upper_gap <= 0.5 * tol:
                return horizon
        horizon *= 2.0
    raise SolverFailure("no horizon found with converged barriers; check f growth")


@dataclass(frozen=True)
class PhaseTrajectory:
    """Sampled (t, theta, log r) along one integrated trajectory."""

    times: np.ndarray
    theta: np.ndarray
    log_r: np.ndarray


@dataclass(frozen=True)
class PhaseSummary:
    theta_end: float
    log_r_end: float
    tail_oscillation: float
    n_steps: int


def _run_kernel(
    sys: PhaseSystem, theta0, horizon, step, tail_start, stride, n_out,
    t_origin=0.0, t_sign=1.0, s_start=None,
):
    f_c = np.asarray(sys.f_coeffs, dtype=float)
    f_p = np.asarray(sys.f_powers, dtype=float)
    g_c = np.asarray(sys.g_coeffs, dtype=float)
    g_p = np.asarray(sys.g_powers, dtype=float)
    out_t = np.empty(n_out)
    out_th = np.empty(n_out)
    out_lr = np.empty(n_out)
    res = _kernels.phase_rk4(
        f_c, f_p, g_c, g_p, sys.t_start if s_start is None else s_start,
        theta0, horizon, step, tail_start, stride,
        out_t, out_th, out_lr, t_origin, t_sign,
    )
    count, theta_end, logr_end, tail_min, tail_max, n_acc, status = res
    if status == 1:
        raise StiffnessError("phase step underflow; the angle equation is too stiff here")
    if status == 2:
        raise StiffnessError("phase step halving limit reached")
    return count, theta_end, logr_end, tail_min, tail_max, n_acc, out_t, out_th, out_lr


def integrate_phase(
    sys: PhaseSystem,
    theta0: float,
    horizon: float,
    step: float = 1e-3,
    max_samples: int = 4096,
) -> PhaseTrajectory:
    """Integrate the angle and log-radius from t_start to horizon.

    Two passes: the first counts accepted steps, the second records a
    decimated trajectory of at most ``max_samples`` points (always
    including both endpoints).
    """
    if not horizon > sys.t_start:
        raise InvalidInput("horizon must exceed t_start")
    if not step > 0.0:
        raise InvalidInput("step must be positive")
    _, _, _, _, _, n_acc, _, _, _ = _run_kernel(
        sys, theta0, horizon, step, math.inf, 0, 1
    )
    stride = max(1, int(math.ceil((n_acc + 1) / max_samples)))
    n_out = n_acc // stride + 3
    count, _, _, _, _, _, out_t, out_th, out_lr = _run_kernel(
        sys, theta0, horizon, step, math.inf, stride, n_out
    )
    traj = PhaseTrajectory(out_t[:count].copy(), out_th[:count].copy(), out_lr[:count].copy())
    jumps = np.abs(np.diff(traj.theta))
    if jumps.size and float(np.max(jumps)) > math.pi / 2.0:
        raise SolverFailure("angle jumped by more than pi/2 between samples")
    return traj


def integrate_phase_summary(
    sys: PhaseSystem,
    theta0: float,
    horizon: float,
    step: float = 1e-3,
    tail_fraction: float = 0.2,
) -> PhaseSummary:
    """Single-pass integration reporting only the end state and tail extrema."""
    if not horizon > sys.t_start:
        raise InvalidInput("horizon must exceed t_start")
    tail_start = horizon - tail_fraction * (horizon - sys.t_start)
    _, theta_end, logr_end, tail_min, tail_max, n_acc, _, _, _ = _run_kernel(
        sys, theta0, horizon, step, tail_start, 0, 1
    )
    return PhaseSummary(
        theta_end=theta_end,
        log_r_end=logr_end,
        tail_oscillation=tail_max - tail_min,
        n_steps=n_acc,
    )


def distinguished_trajectory(
    sys: PhaseSystem,
    horizon: float,
    step: float = 1e-3,
    max_samples: int = 4096,
) -> PhaseTrajectory:
    """The in-basin solution whose angle tracks the zero attractor.

    Forward in time this branch is a separatrix (any numerical start peels
    off to one of the +-pi/2 basins at rate exp(int f)), but it attracts in
    reverse time, so it is computed by integrating backward from the
    stationary angle arctan(x_minus) at the horizon.  The returned
    trajectory is in forward order with log r normalized to 0 at t_start.
    """
    if not horizon > sys.t_start:
        raise InvalidInput("horizon must exceed t_start")
    x_minus, _ = stationary_roots(sys, horizon)
    theta_h = math.atan(x_minus)
    origin = sys.t_start + horizon  # physical time = origin - s
    _, _, _, _, _, n_acc, _, _, _ = _run_kernel(
        sys, theta_h, horizon, step, math.inf, 0, 1, t_origin=origin, t_sign=-1.0
    )
    stride = max(1, int(math.ceil((n_acc + 1) / max_samples)))
    n_out = n_acc // stride + 3
    count, _, logr_end, _, _, _, out_t, out_th, out_lr = _run_kernel(
        sys, theta_h, horizon, step, math.inf, stride, n_out,
        t_origin=origin, t_sign=-1.0,
    )
    times = out_t[:count][::-1].copy()
    theta = out_th[:count][::-1].copy()
    log_r = logr_end - out_lr[:count][::-1]
    return PhaseTrajectory(times, theta, log_r)


@dataclass(frozen=True)
class RemainderReport:
    theta_end: float
    theta_start: float
    in_basin: bool
    tail_oscillation: float
    horizon: float
    theta_tol: float
    oscillation_tol: float

    @property
    def passed(self) -> bool:
        return (
            self.in_basin
            and abs(self.theta_end) < self.theta_tol
            and self.tail_oscillation < self.oscillation_tol
        )


def remainder_validation(
    p: Potential,
    lam: float,
    series: WkbSeries,
    horizon: float | None = None,
    theta_tol: float = 0.02,
    oscillation_tol: float = 0.05,
) -> RemainderReport:
    """Numerically witness that the expansion remainder stays bounded.

    Instantiates the remainder equation from the ladder and computes its
    distinguished in-basin solution; reported are the terminal angle, the
    membership of the initial angle in the barrier interval and the tail
    oscillation of log r (the boundedness claim).  Requires a truncation
    strictly above (1+gamma)/(2*gamma), the threshold for an integrable
    source.
    """
    # resonant equality N = (1+gamma)/(2 gamma) still has a decaying source
    # (the resonant derivative term falls like 1/x), so only N strictly
    # below the threshold is rejected
    threshold = (1.0 + p.gamma) / (2.0 * p.gamma)
    if series.truncation < threshold - 1e-9:
        raise InvalidInput(
            f"truncation {series.truncation} below (1+gamma)/(2 gamma) = {threshold:.6g}"
        )
    sys = PhaseSystem.from_wkb_remainder(series)
    # start just past the turning point so f^2 >= 4 g_plus holds on the range
    start = sys.t_start
    for _ in range(200):
        f = float(sys.f(start))
        g = float(sys.g(start))
        if f > 0.0 and f * f >= 4.0 * max(g, 0.0):
            break
        start *= 1.05
    sys = PhaseSystem(sys.f_coeffs, sys.f_powers, sys.g_coeffs, sys.g_powers, start)
    if horizon is None:
        horizon = 50.0 * (sys.t_start + 1.0)
    traj = distinguished_trajectory(sys, horizon)
    theta_l, theta_u = barriers(sys, sys.t_start, horizon=horizon)
    in_basin = theta_l - 1e-9 <= traj.theta[0] <= theta_u + 1e-9
    tail = traj.times >= horizon - 0.5 * (horizon - sys.t_start)
    osc = float(np.max(traj.log_r[tail]) - np.min(traj.log_r[tail]))
    return RemainderReport(
        theta_end=float(traj.theta[-1]),
        theta_start=float(traj.theta[0]),
        in_basin=in_basin,
        tail_oscillation=osc,
        horizon=horizon,
        theta_tol=theta_tol,
        oscillation_tol=oscillation_tol,
    )

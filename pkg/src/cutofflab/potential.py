"""Monomial confining well, its derivatives, partition constants and turning points.

The potential is the even convex well ``|x|**(gamma+1) / (gamma+1)`` with
exponent ``gamma > 0``; the prefactor is pinned so that ``V'(x) =
sign(x)*|x|**gamma`` exactly, which every downstream closed form relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect
from scipy.special import gammaln

from .errors import DomainError, InvalidInput, SolverFailure

__all__ = [
    "Potential",
    "PartitionConstants",
    "log_partition",
    "log_partition_quadrature",
    "turning_point",
    "schrodinger_potential",
]


@dataclass(frozen=True)
class Potential:
    """Even monomial well with exponent ``gamma`` and prefactor ``1/(gamma+1)``.

    A prefactor other than ``1/(gamma+1)`` is rejected at construction:
    the scaling law, the WKB ladder and the partition closed form are all
    derived for this normalization.
    """

    gamma: float
    k_gamma: float | None = None

    def __post_init__(self) -> None:
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise InvalidInput(f"gamma must be a positive finite real, got {self.gamma}")
        expected = 1.0 / (self.gamma + 1.0)
        if self.k_gamma is None:
            object.__setattr__(self, "k_gamma", expected)
        elif abs(self.k_gamma - expected) > 1e-15 * expected:
            raise InvalidInput(
                f"prefactor is fixed to 1/(gamma+1)={expected!r}, got {self.k_gamma!r}"
            )

    def value(self, x):
        """V(x) = |x|**(gamma+1) / (gamma+1); even in x."""
        return np.abs(x) ** (self.gamma + 1.0) * self.k_gamma

    def derivative(self, x):
        """V'(x) = sign(x)*|x|**gamma; odd, continuous, V'(0)=0."""
        return np.sign(x) * np.abs(x) ** self.gamma

    def second_derivative(self, x):
        """V''(x) = gamma*|x|**(gamma-1); singular at x=0 when gamma < 1."""
        x_arr = np.asarray(x, dtype=float)
        if self.gamma < 1.0 and np.any(x_arr == 0.0):
            raise DomainError(
                f"V'' is singular at x=0 for gamma={self.gamma} < 1; "
                "use the divergence form instead"
            )
        out = self.gamma * np.abs(x_arr) ** (self.gamma - 1.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class PartitionConstants:
    """Log of the normalization constant and of the partition function.

    ``log_c_eps == -log_z_eps`` by definition; the equilibrium density is
    ``exp(log_c_eps - V(x)/epsilon)``.
    """

    epsilon: float
    log_c_eps: float
    log_z_eps: float


def log_partition(p: Potential, epsilon: float) -> PartitionConstants:
    """Closed-form log partition function of ``C_eps**-1 = ∫ exp(-V/eps) dx``.

    Uses ``Z = 2*((gamma+1)*eps)**(1/(gamma+1)) * Gamma(1 + 1/(gamma+1))``;
    the adaptive-quadrature route is `log_partition_quadrature`.
    """
    if not epsilon > 0.0:
        raise InvalidInput(f"epsilon must be positive, got {epsilon}")
    a = 1.0 / (p.gamma + 1.0)
    log_z = math.log(2.0) + a * math.log((p.gamma + 1.0) * epsilon) + gammaln(1.0 + a)
    return PartitionConstants(epsilon=epsilon, log_c_eps=-log_z, log_z_eps=log_z)


def log_partition_quadrature(p: Potential, epsilon: float) -> float:
    """log Z by adaptive quadrature of exp(-V/eps); oracle for `log_partition`."""
    if not epsilon > 0.0:
        raise InvalidInput(f"epsilon must be positive, got {epsilon}")
    integral, abserr = quad(
        lambda x: math.exp(-p.value(x) / epsilon), 0.0, np.inf, epsabs=1e-14, epsrel=1e-13
    )
    if not integral > 0.0:
        raise SolverFailure("partition quadrature returned a non-positive integral")
    return math.log(2.0 * integral)


def schrodinger_potential(p: Potential, x, lam: float):
    """T(x) = V'(x)**2/4 - V''(x)/2 - lam, the shifted Witten potential."""
    return p.derivative(x) ** 2 / 4.0 - p.second_derivative(x) / 2.0 - lam


def turning_point(p: Potential, lam: float, search_bound: float | None = None) -> float:
    """Smallest ``x* > 0`` with ``T(x) >= 0`` for all ``x >= x*``.

    T is strictly increasing past its minimum and negative near zero for
    every gamma > 0, so the turning point is the unique positive root,
    located by bracketing plus bisection to 1e-12 absolute.
    """
    if not lam > 0.0:
        raise InvalidInput(f"lambda must be positive, got {lam}")
    if search_bound is None:
        # T(x) ~ x**(2*gamma)/4 eventually dominates, so this bound is generous.
        search_bound = 10.0 * (4.0 * lam + 2.0) ** (1.0 / p.gamma)

    def t_fun(x: float) -> float:
        return float(schrodinger_potential(p, x, lam))

    lo = 1e-12
    if t_fun(search_bound) <= 0.0:
        raise SolverFailure(
            f"no sign change of T below search bound {search_bound}; "
            "check lambda and gamma"
        )
    if t_fun(lo) >= 0.0:
        raise SolverFailure("T is non-negative arbitrarily close to 0; unexpected regime")
    return float(bisect(t_fun, lo, search_bound, xtol=1e-12))

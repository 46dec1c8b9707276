"""Exact log-derivative expansion of eigenfunction growth as monomial ladders.

Each expansion level n is a sum over 1 <= i <= n of terms
``lam**i * A[n,i](gamma) * |x|**(-(a*gamma+b))`` with ``a = n+i-1`` and
``b = n-i``; the coefficients ``A[n,i]`` are polynomials in gamma with
rational coefficients, generated exactly by the closed recurrence (a
derivative step that multiplies by the negated exponent, plus a convolution
of lower levels).  Evaluation at a numeric gamma happens only when a series
is instantiated, so the diagonal Catalan identity, the degree bound and the
alternating-sign structure are exact statements about the table.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, InvalidInput
from .potential import Potential, turning_point

__all__ = [
    "CoeffPoly",
    "WkbTerm",
    "WkbSeries",
    "ResonanceConditionWarning",
    "build_coeff_table",
    "catalan_leading",
    "default_truncation",
    "build_series",
    "eval_log_growth",
    "sprime_terms",
    "remainder_system_terms",
    "decay_bound_check",
    "DecayReport",
]

MAX_TABLE_LEVEL = 12

# |1 - (a*gamma+b)| below the first bound integrates to a logarithm; between
# the bounds the reciprocal is ill-conditioned and a warning is issued.
RESONANCE_GUARD = 1e-6
RESONANCE_WARN_BAND = 1e-3


class ResonanceConditionWarning(UserWarning):
    """gamma sits near, but not on, a resonance; integration is ill-conditioned."""


@dataclass(frozen=True)
class CoeffPoly:
    """Polynomial in gamma with exact rational coefficients, ascending degree."""

    coeffs: tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, gamma: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * gamma + float(c)
        return acc

    def eval_exact(self, gamma: Fraction) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * gamma + c
        return acc

    def add(self, other: "CoeffPoly") -> "CoeffPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [Fraction(0)] * (n - len(self.coeffs))
        b = list(other.coeffs) + [Fraction(0)] * (n - len(other.coeffs))
        return CoeffPoly(_trim(tuple(x + y for x, y in zip(a, b))))

    def mul(self, other: "CoeffPoly") -> "CoeffPoly":
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return CoeffPoly(_trim(tuple(out)))

    def mul_linear(self, const: Fraction, slope: Fraction) -> "CoeffPoly":
        """Multiply by (const + slope*gamma)."""
        return self.mul(CoeffPoly((const, slope)))


def _trim(coeffs: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    n = len(coeffs)
    while n > 1 and coeffs[n - 1] == 0:
        n -= 1
    return coeffs[:n]


_ZERO = CoeffPoly((Fraction(0),))
_ONE = CoeffPoly((Fraction(1),))


def build_coeff_table(n_max: int) -> dict[tuple[int, int], CoeffPoly]:
    """Exact coefficient table for levels 1..n_max, indexed by (level, lambda power)."""
    if not 1 <= n_max <= MAX_TABLE_LEVEL:
        raise InvalidInput(f"n_max must be in 1..{MAX_TABLE_LEVEL}, got {n_max}")
    table: dict[tuple[int, int], CoeffPoly] = {(1, 1): _ONE}
    for n in range(2, n_max + 1):
        for i in range(1, n + 1):
            acc = _ZERO
            if i <= n - 1:
                # derivative route: d/dx then division by |x|**gamma multiplies
                # the (n-1, i) term by minus its exponent a*gamma + b
                a_prev = Fraction((n - 1) + i - 1)
                b_prev = Fraction((n - 1) - i)
                acc = acc.add(table[(n - 1, i)].mul_linear(-b_prev, -a_prev))
            for j in range(1, n):
                for a in range(1, j + 1):
                    b = i - a
                    if 1 <= b <= n - j:
                        acc = acc.add(table[(j, a)].mul(table[(n - j, b)]))
            table[(n, i)] = acc
    return table


def catalan_leading(n: int) -> Fraction:
    """Closed form of the diagonal entry: binom(2(n-1), n-1)/n."""
    return Fraction(comb(2 * (n - 1), n - 1), n)


@dataclass(frozen=True)
class WkbTerm:
    """One monomial of a ladder level: coeff(gamma) * lam**i * |x|**-(a*gamma+b)."""

    level: int
    lambda_power: int
    coeff: CoeffPoly
    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a != self.level + self.lambda_power - 1 or self.b != self.level - self.lambda_power:
            raise InvalidInput("exponent pair inconsistent with (level, lambda_power)")


@dataclass(frozen=True)
class WkbSeries:
    """Instantiated growth expansion for one (gamma, lambda) pair.

    ``integrated`` holds (coefficient, power) monomials of the summed
    antiderivative with integration constants dropped (growth is only
    defined up to a multiplicative constant); a resonant level contributes
    ``log_coefficient * log(x)`` instead.
    """

    gamma: float
    lam: float
    truncation: int
    x_star: float
    terms: tuple[WkbTerm, ...]
    integrated: tuple[tuple[float, float], ...]
    log_coefficient: float
    resonance: int | None


def default_truncation(gamma: float) -> int:
    """Smallest level count making the remainder bounded: ceil((1+gamma)/(2*gamma))."""
    return int(math.ceil((1.0 + gamma) / (2.0 * gamma)))


def build_series(p: Potential, lam: float, truncation: int | None = None) -> WkbSeries:
    """Instantiate the ladder at numeric (gamma, lambda) and integrate it.

    A term whose integrated power lands within the resonance guard of zero
    becomes the logarithmic term (this happens exactly at gamma = 1/(2m-1));
    powers merely near the guard band raise `ResonanceConditionWarning`.
    """
    if not lam > 0.0:
        raise InvalidInput(f"lambda must be positive, got {lam}")
    n_levels = default_truncation(p.gamma) if truncation is None else truncation
    if not 1 <= n_levels <= MAX_TABLE_LEVEL:
        raise InvalidInput(f"truncation must be in 1..{MAX_TABLE_LEVEL}, got {n_levels}")
    table = build_coeff_table(n_levels)
    x_star = turning_point(p, lam)

    terms: list[WkbTerm] = []
    integrated: list[tuple[float, float]] = []
    log_coeff = 0.0
    resonance: int | None = None
    for n in range(1, n_levels + 1):
        for i in range(1, n + 1):
            poly = table[(n, i)]
            a, b = n + i - 1, n - i
            terms.append(WkbTerm(n, i, poly, a, b))
            c = lam**i * poly(p.gamma)
            if c == 0.0:
                continue
            q = 1.0 - (a * p.gamma + b)
            if abs(q) < RESONANCE_GUARD:
                log_coeff += c
                if resonance is None and b == 0:
                    resonance = n
            else:
                if abs(q) < RESONANCE_WARN_BAND:
                    warnings.warn(
                        f"integrated power {q:.3e} of level-{n} term is nearly "
                        f"resonant (condition number {1.0 / abs(q):.2e})",
                        ResonanceConditionWarning,
                        stacklevel=2,
                    )
                integrated.append((c / q, q))
    return WkbSeries(
        gamma=p.gamma,
        lam=lam,
        truncation=n_levels,
        x_star=x_star,
        terms=tuple(terms),
        integrated=tuple(integrated),
        log_coefficient=log_coeff,
        resonance=resonance,
    )


def eval_log_growth(series: WkbSeries, x):
    """Predicted log of eigenfunction growth at x >= turning point.

    Stays in the log domain; the result is only meaningful up to one
    additive constant, which downstream comparisons fit.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < series.x_star * (1.0 - 1e-12)):
        raise DomainError(f"evaluation below the turning point {series.x_star}")
    out = np.zeros_like(x_arr)
    for c, q in series.integrated:
        out += c * x_arr**q
    if series.log_coefficient != 0.0:
        out += series.log_coefficient * np.log(x_arr)
    return out if out.ndim else float(out)


def sprime_terms(series: WkbSeries, level: int) -> list[tuple[float, float]]:
    """Level's derivative ladder as (coefficient, power) monomials at numeric gamma."""
    if not 1 <= level <= series.truncation:
        raise InvalidInput(f"level {level} outside 1..{series.truncation}")
    out = []
    for t in series.terms:
        if t.level == level:
            c = series.lam**t.lambda_power * t.coeff(series.gamma)
            if c != 0.0:
                out.append((c, -(t.a * series.gamma + t.b)))
    return out


def _merge(terms: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[tuple[float, float]] = []
    for c, q in sorted(terms, key=lambda t: t[1]):
        if merged and abs(merged[-1][1] - q) < 1e-12:
            merged[-1] = (merged[-1][0] + c, merged[-1][1])
        else:
            merged.append((c, q))
    return [(c, q) for c, q in merged if c != 0.0]


def remainder_system_terms(
    series: WkbSeries,
) -> tuple[list[tuple[float, float]], list[tuple[float, float]]]:
    """Drift and forcing monomials of the equation satisfied by the remainder.

    Drift is ``-2 * sum_{j=0..N} S_j'`` (the j=0 term contributes
    ``+|x|**gamma``); forcing is ``S_N'' + sum of S'_{n1} S'_{n2}`` over
    ordered pairs with ``n1+n2 >= N+1`` and both at most N.
    """
    n_levels = series.truncation
    drift: list[tuple[float, float]] = [(1.0, series.gamma)]
    for j in range(1, n_levels + 1):
        drift.extend((-2.0 * c, q) for c, q in sprime_terms(series, j))

    forcing: list[tuple[float, float]] = []
    for c, q in sprime_terms(series, n_levels):
        forcing.append((c * q, q - 1.0))
    by_level = {j: sprime_terms(series, j) for j in range(1, n_levels + 1)}
    for n1 in range(1, n_levels + 1):
        for n2 in range(1, n_levels + 1):
            if n1 + n2 >= n_levels + 1:
                for c1, q1 in by_level[n1]:
                    for c2, q2 in by_level[n2]:
                        forcing.append((c1 * c2, q1 + q2))
    return _merge(drift), _merge(forcing)


@dataclass(frozen=True)
class DecayReport:
    """Fitted tail envelopes of the ladder levels and the remainder-ratio integral.

    The envelope constants are reported, never asserted against specific
    values; finiteness and integrability of the source ratio are the checks.
    """

    x_lo: float
    x_hi: float
    envelope_constants: dict[int, float]
    envelope_finite: bool
    ratio_integral: float
    ratio_integral_converged: bool


def decay_bound_check(series: WkbSeries, x_range: tuple[float, float]) -> DecayReport:
    """Fit sup |S_k'(x)| * |x|**w over the range and test source integrability.

    The weight exponent w is (2k-1)*gamma for gamma <= 1 and k*gamma+k-1
    for gamma > 1.  The source ratio (forcing over total drift) is
    integrated by adaptive quadrature on the range and on a doubled range
    to witness convergence of the tail.
    """
    x_lo, x_hi = x_range
    if x_lo < series.x_star * (1.0 - 1e-12):
        raise InvalidInput("range must start at or beyond the turning point")
    xs = np.geomspace(x_lo, x_hi, 4001)
    consts: dict[int, float] = {}
    finite = True
    for k in range(1, series.truncation + 1):
        vals = np.zeros_like(xs)
        for c, q in sprime_terms(series, k):
            vals += c * xs**q
        w = (2 * k - 1) * series.gamma if series.gamma <= 1.0 else k * series.gamma + k - 1
        env = np.abs(vals) * xs**w
        c_k = float(np.max(env))
        consts[k] = c_k
        finite = finite and bool(np.isfinite(c_k))

    drift, forcing = remainder_system_terms(series)

    def ratio_logx(u: float) -> float:
        # substitution x = e^u conditions the long algebraic tail
        x = math.exp(u)
        num = sum(c * x**q for c, q in forcing)
        den = sum(c * x**q for c, q in drift)
        return abs(num / den) * x

    integral, _ = quad(ratio_logx, math.log(x_lo), math.log(x_hi), limit=400)
    extended, _ = quad(ratio_logx, math.log(x_lo), math.log(4.0 * x_hi), limit=400)
    tail = abs(extended - integral)
    converged = tail < max(1e-8, 1e-3 * abs(extended))
    return DecayReport(
        x_lo=x_lo,
        x_hi=x_hi,
        envelope_constants=consts,
        envelope_finite=finite,
        ratio_integral=extended,
        ratio_integral_converged=converged,
    )

"""Closed-form moments of the CIR variance and of its time average.

The variance of the time-averaged variance exists in two forms. ``printed``
reproduces the published expression, whose theta bracket carries
``2*exp(kappa*T)*kappa*T``; it goes negative for realistic inputs and is kept
only for regression against published numbers. ``corrected`` uses
``2*exp(2*kappa*T)*kappa*T``, which equals the double integral of the CIR
covariance and is the default everywhere.
"""

from __future__ import annotations

import math
from enum import Enum

from .params import HestonParams

# below this kappa*T the closed forms lose digits to cancellation
SERIES_THRESHOLD = 1e-2
_SERIES_TERMS = 12


class FormulaMode(str, Enum):
    PRINTED = "printed"
    CORRECTED = "corrected"


def _mode(mode: FormulaMode | str) -> FormulaMode:
    try:
        return FormulaMode(mode)
    except ValueError:
        raise ValueError(f"mode must be 'printed' or 'corrected', got {mode!r}") from None


def one_minus_exp_ratio(x: float) -> float:
    """(1 - exp(-x)) / x, continuous at x = 0."""
    if x == 0.0:
        return 1.0
    return -math.expm1(-x) / x


def cir_mean(p: HestonParams, t: float) -> float:
    """E[V_t] = theta + (v0 - theta) exp(-kappa t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    # weighted form returns v0 exactly at t = 0
    return p.v0 * math.exp(-p.kappa * t) - p.theta * math.expm1(-p.kappa * t)


def cir_variance(p: HestonParams, t: float) -> float:
    """Var[V_t] of the CIR process started at v0."""
    if t < 0:
        raise ValueError("t must be >= 0")
    k = p.kappa
    e1 = math.exp(-k * t)
    om = -math.expm1(-k * t)
    # sigma^2/k [v0 e(1-e) + theta/2 (1-e)^2]: a sum of nonnegative terms
    return p.sigma**2 / k * (p.v0 * e1 * om + 0.5 * p.theta * om * om)


def cir_cross_moment(p: HestonParams, t: float, s: float) -> float:
    """E[V_t V_s] from the mean product plus the CIR covariance."""
    if t < 0 or s < 0:
        raise ValueError("t and s must be >= 0")
    return cir_mean(p, t) * cir_mean(p, s) + cir_covariance(p, t, s)


def cir_covariance(p: HestonParams, t: float, s: float) -> float:
    """Cov(V_t, V_s) = sigma^2 e^{-k(t+s)} [theta/(2k)(e^{2k m}-1) + (v0-theta)/k (e^{k m}-1)], m = min(t, s)."""
    k = p.kappa
    x = math.expm1(k * min(t, s))
    # the bracket equals x/k (theta x/2 + v0) with x = e^{k m} - 1, nonnegative
    return p.sigma**2 * math.exp(-k * (t + s)) * x / k * (0.5 * p.theta * x + p.v0)


def integrated_variance_mean(p: HestonParams, T: float) -> float:
    """E[(1/T) int_0^T V_t dt]; this is the Heston fair variance strike."""
    if T <= 0:
        raise ValueError("T must be > 0")
    return p.theta + (p.v0 - p.theta) * one_minus_exp_ratio(p.kappa * T)


def _series_coefficients() -> tuple[list[float], list[float]]:
    # f1(x) = 2 - 4x e^{-x} - 2e^{-2x},  f2(x) = 2x - 3 + 4e^{-x} - e^{-2x};
    # both start at x^3, coefficients of x^n for n >= 3 listed here.
    c1, c2 = [], []
    for n in range(3, 3 + _SERIES_TERMS):
        fact = math.factorial(n)
        c1.append(-4.0 * (-1.0) ** (n - 1) / math.factorial(n - 1) - 2.0 * (-2.0) ** n / fact)
        c2.append(4.0 * (-1.0) ** n / fact - (-2.0) ** n / fact)
    return c1, c2


_C1, _C2 = _series_coefficients()


def _poly(coeffs: list[float], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def integrated_variance_variance(
    p: HestonParams, T: float, mode: FormulaMode | str = FormulaMode.CORRECTED
) -> float:
    """Var[(1/T) int_0^T V_t dt].

    Args:
        p: Heston parameters.
        T: horizon in years.
        mode: ``"corrected"`` (default, a true variance) or ``"printed"``.

    Returns:
        The variance of realised variance. Printed mode can be negative.
    """
    if T <= 0:
        raise ValueError("T must be > 0")
    mode = _mode(mode)
    k, th, v0, s2 = p.kappa, p.theta, p.v0, p.sigma**2
    if s2 == 0.0:
        return 0.0
    x = k * T
    if mode is FormulaMode.PRINTED:
        e1, e2 = math.exp(x), math.exp(2.0 * x)
        bracket = (v0 - th) * (2.0 * e2 - 4.0 * e1 * x - 2.0) + th * (2.0 * e1 * x - 3.0 * e2 + 4.0 * e1 - 1.0)
        return s2 * math.exp(-2.0 * x) / (2.0 * k**3 * T**2) * bracket
    # sigma^2 T / 2 * [(v0 - theta) f1(x)/x^3 + theta f2(x)/x^3]
    if x < SERIES_THRESHOLD:
        g1, g2 = _poly(_C1, x), _poly(_C2, x)
    else:
        em1, em2 = math.exp(-x), math.exp(-2.0 * x)
        g1 = (2.0 - 4.0 * x * em1 - 2.0 * em2) / x**3
        g2 = (2.0 * x - 3.0 + 4.0 * em1 - em2) / x**3
    return 0.5 * s2 * T * ((v0 - th) * g1 + th * g2)


__all__ = [
    "FormulaMode",
    "cir_covariance",
    "cir_cross_moment",
    "cir_mean",
    "cir_variance",
    "integrated_variance_mean",
    "integrated_variance_variance",
    "one_minus_exp_ratio",
]

"""Laplace-transform pricing of volatility swaps and VIX futures.

For a nonnegative random variable X with Laplace transform L(s) = E[exp(-sX)],

    E[sqrt(X)] = 1/(2 sqrt(pi)) * int_0^inf (1 - L(s)) / s^{3/2} ds.

The transforms below are written in log form so that ``1 - L(s)`` can be
taken with ``expm1`` and stays accurate for small s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from scipy import integrate

from . import moments
from .params import BatesParams, HestonParams, JumpParams, MertonParams
from .swaps import (
    VIX_SCALE,
    Method,
    StrikeQuote,
    jump_rv_variance,
    variance_strike_merton,
    vix_weights,
)

_INV_2SQRTPI = 0.5 / math.sqrt(math.pi)
_U_MAX = 1.0 - 2.0**-53


class QuadratureError(ArithmeticError):
    """The improper integral did not converge to the requested tolerance."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"quadrature failed to converge: {message} (error estimate {error_estimate:.3g})")
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    # below s * mean < series_cutoff, 1 - L(s) comes from its two-term expansion
    series_cutoff: float = 1e-6

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")
        # QUADPACK's algebraic-weight rule needs room for one bisection
        if self.max_subdivisions < 2:
            raise ValueError("max_subdivisions must be >= 2")


@dataclass(frozen=True)
class LaplaceTransform:
    """s -> E[exp(-s X)] for a nonnegative X, stored as its logarithm.

    ``mean`` and ``variance`` of X are optional; when known they set the
    integration scale, drive the small-s expansion, and a zero variance
    short-circuits the square-root expectation to sqrt(mean).
    """

    log_eval: Callable[[float], float]
    mean: float | None = None
    variance: float | None = None

    def __call__(self, s: float) -> float:
        return math.exp(self.log_eval(s))

    def one_minus(self, s: float) -> float:
        return -math.expm1(self.log_eval(s))


class QuadResult(NamedTuple):
    value: float
    error: float


# ---------------------------------------------------------------------------
# transforms


def _heston_log_laplace(p: HestonParams, T: float, s: float) -> float:
    if s == 0.0:
        return 0.0
    k, th, sig2 = p.kappa, p.theta, p.sigma**2
    if sig2 == 0.0:
        return -s * moments.integrated_variance_mean(p, T)
    q = 2.0 * sig2 * s / T
    gamma = math.sqrt(k * k + q)
    gk = gamma + k
    d = q / gk  # gamma - kappa without cancellation
    e = math.exp(-T * gamma)
    # log of 2 gamma e^{T(gamma+kappa)/2} / ((gamma+kappa)(e^{T gamma}-1) + 2 gamma)
    log_ratio = math.log1p(d / gk) - math.log1p(d * e / gk) - 0.5 * T * d
    A = 2.0 * k * th / sig2 * log_ratio
    B = 2.0 * s * -math.expm1(-T * gamma) / (T * (gk + d * e))
    return A - B * p.v0


def _jump_log_laplace(j: JumpParams, T: float, s: float) -> float:
    if s == 0.0 or j.lam == 0.0:
        return 0.0
    two_sb2 = 2.0 * s * j.b2
    inner = -s * j.a**2 / (T + two_sb2) - 0.5 * math.log1p(two_sb2 / T)
    return j.lam * T * math.expm1(inner)


def laplace_rv_heston(p: HestonParams, T: float) -> LaplaceTransform:
    """Transform of (1/T) int_0^T V_t dt under Heston."""
    if T <= 0:
        raise ValueError("T must be > 0")
    return LaplaceTransform(
        lambda s: _heston_log_laplace(p, T, s),
        mean=moments.integrated_variance_mean(p, T),
        variance=moments.integrated_variance_variance(p, T),
    )


def laplace_rv_merton(p: MertonParams, T: float) -> LaplaceTransform:
    """Transform of sigma^2 + (1/T) sum (ln Y_i)^2."""
    if T <= 0:
        raise ValueError("T must be > 0")
    sig2 = p.sigma**2
    return LaplaceTransform(
        lambda s: -s * sig2 + _jump_log_laplace(p.jumps, T, s),
        mean=variance_strike_merton(p, T).value,
        variance=jump_rv_variance(p, T),
    )


def laplace_rv_bates(p: BatesParams, T: float) -> LaplaceTransform:
    """Product of the Heston diffusion transform and the jump transform."""
    if T <= 0:
        raise ValueError("T must be > 0")
    h = p.heston
    return LaplaceTransform(
        lambda s: _heston_log_laplace(h, T, s) + _jump_log_laplace(p.jumps, T, s),
        mean=moments.integrated_variance_mean(h, T) + p.jumps.lam * p.jumps.second_moment,
        variance=moments.integrated_variance_variance(h, T) + jump_rv_variance(p, T),
    )


def laplace_rv(model: HestonParams | MertonParams | BatesParams, T: float) -> LaplaceTransform:
    if isinstance(model, HestonParams):
        return laplace_rv_heston(model, T)
    if isinstance(model, MertonParams):
        return laplace_rv_merton(model, T)
    if isinstance(model, BatesParams):
        return laplace_rv_bates(model, T)
    raise TypeError(f"no Laplace transform for {type(model).__name__}")


# ---------------------------------------------------------------------------
# square-root expectation


def sqrt_expectation(
    L: LaplaceTransform | Callable[[float], float], q: QuadratureConfig | None = None
) -> QuadResult:
    """E[sqrt(X)] from the Laplace transform of X.

    The half line is mapped to [0, 1) by s = c u / (1 - u), with c = 1/E[X]
    when the mean is known. That leaves integrable u^{-1/2} and (1-u)^{-1/2}
    endpoint singularities, handled by QUADPACK's algebraic-weight rule on
    [0, 1/2] and [1/2, 1].

    Raises:
        QuadratureError: if QUADPACK reports non-convergence.
    """
    q = q or QuadratureConfig()
    if isinstance(L, LaplaceTransform):
        one_minus = L.one_minus
        mean, var = L.mean, L.variance
    else:
        def one_minus(s: float) -> float:
            return 1.0 - L(s)

        mean = var = None

    if mean is not None and var == 0.0:
        return QuadResult(math.sqrt(mean), 0.0)

    c = 1.0 / mean if mean is not None and mean > 0 else 1.0
    m2 = var + mean**2 if (mean is not None and var is not None) else None

    def g(s: float) -> float:
        if m2 is not None and s * mean < q.series_cutoff:
            return s * mean - 0.5 * s * s * m2
        return one_minus(s)

    if mean is not None:
        slope_at_zero = c * mean
    else:
        u0 = 1e-7
        slope_at_zero = g(c * u0 / (1.0 - u0)) / u0

    def left(u: float) -> float:
        if u == 0.0:
            return slope_at_zero
        return g(c * u / (1.0 - u)) / (u * math.sqrt(1.0 - u))

    def right(u: float) -> float:
        u = min(u, _U_MAX)
        return g(c * u / (1.0 - u)) / u**1.5

    total, err = 0.0, 0.0
    for fn, a, b, wvar in ((left, 0.0, 0.5, (-0.5, 0.0)), (right, 0.5, 1.0, (0.0, -0.5))):
        out = integrate.quad(
            fn, a, b, weight="alg", wvar=wvar,
            epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subdivisions, full_output=1,
        )
        value, abserr, info = out[0], out[1], out[2]
        if len(out) > 3 and out[3]:
            raise QuadratureError(str(out[3]).splitlines()[0], abserr)
        if not math.isfinite(value):
            raise QuadratureError("non-finite integrand", abserr)
        total += value
        err += abserr
    scale = _INV_2SQRTPI / math.sqrt(c)
    return QuadResult(total * scale, err * scale)


def vol_strike_laplace(
    model: HestonParams | MertonParams | BatesParams, T: float, q: QuadratureConfig | None = None
) -> StrikeQuote:
    res = sqrt_expectation(laplace_rv(model, T), q)
    return StrikeQuote(res.value, Method.LAPLACE, quad_error=res.error)


# ---------------------------------------------------------------------------
# CIR terminal transform and VIX futures


def cir_mgf_domain(p: HestonParams, T: float) -> float:
    """Explosion threshold of E[exp(phi V_T)]; +inf when sigma = 0."""
    if p.sigma == 0.0 or T == 0.0:
        return math.inf
    return 2.0 * p.kappa / (p.sigma**2 * -math.expm1(-p.kappa * T))


def cir_log_mgf(p: HestonParams, T: float, phi: float) -> float:
    """log E[exp(phi V_T)] = C(phi, T) + D(phi, T) v0."""
    if T < 0:
        raise ValueError("T must be >= 0")
    if phi >= cir_mgf_domain(p, T):
        raise ValueError("phi beyond MGF domain")
    if phi == 0.0:
        return 0.0
    k, th, sig2 = p.kappa, p.theta, p.sigma**2
    if sig2 == 0.0:
        return phi * moments.cir_mean(p, T)
    if T == 0.0:
        return phi * p.v0
    em1 = math.expm1(-k * T)  # e^{-kT} - 1
    z = sig2 * phi / (2.0 * k) * em1
    C = -2.0 * k * th / sig2 * math.log1p(z)
    # D = 2 k phi / (sig2 phi + (2k - sig2 phi) e^{kT}), rewritten with e^{-kT}
    D = phi * math.exp(-k * T) / (1.0 + z)
    return C + D * p.v0


def cir_mgf(p: HestonParams, T: float, phi: float) -> float:
    """E[exp(phi V_T)] for phi below :func:`cir_mgf_domain`."""
    return math.exp(cir_log_mgf(p, T, phi))


def laplace_vix_squared(model: HestonParams | BatesParams, T: float, tau: float) -> LaplaceTransform:
    """Transform of X = VIX_T^2 = 100^2 (A V_T + B)."""
    h = model.heston if isinstance(model, BatesParams) else model
    A, B = vix_weights(model, tau)
    scale = VIX_SCALE**2

    def log_eval(s: float) -> float:
        return -scale * s * B + cir_log_mgf(h, T, -scale * s * A)

    return LaplaceTransform(
        log_eval,
        mean=scale * (A * moments.cir_mean(h, T) + B),
        variance=scale**2 * A**2 * moments.cir_variance(h, T),
    )


def vix_future_closed_form(
    model: HestonParams | BatesParams,
    T: float,
    tau: float = 30.0 / 365.0,
    q: QuadratureConfig | None = None,
) -> StrikeQuote:
    """VIX future price E[VIX_T] in index points from the CIR transform of V_T."""
    if T < 0:
        raise ValueError("T must be >= 0")
    L = laplace_vix_squared(model, T, tau)
    if L.mean is None or not L.mean > 0:
        raise ValueError("M must be positive")
    if L.variance == 0.0:
        # V_T deterministic: same expression as the convexity route
        from .swaps import vix_future_convexity

        return StrikeQuote(vix_future_convexity(model, T, tau).value, Method.LAPLACE, quad_error=0.0)
    res = sqrt_expectation(L, q)
    return StrikeQuote(res.value, Method.LAPLACE, quad_error=res.error)


__all__ = [
    "LaplaceTransform",
    "QuadResult",
    "QuadratureConfig",
    "QuadratureError",
    "cir_log_mgf",
    "cir_mgf",
    "cir_mgf_domain",
    "laplace_rv",
    "laplace_rv_bates",
    "laplace_rv_heston",
    "laplace_rv_merton",
    "laplace_vix_squared",
    "sqrt_expectation",
    "vix_future_closed_form",
    "vol_strike_laplace",
]

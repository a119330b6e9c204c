"""Fair variance strikes, convexity-corrected volatility strikes and VIX futures."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

from . import moments
from .moments import FormulaMode
from .params import BatesParams, HestonParams, LevyHestonParams, MertonParams, StableParams

VIX_SCALE = 100.0


class Method(str, Enum):
    ANALYTIC = "analytic"
    CONVEXITY = "convexity"
    LAPLACE = "laplace"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class StrikeQuote:
    """A priced strike.

    ``std_error`` is set for Monte Carlo quotes, ``quad_error`` for quotes
    produced by numerical quadrature.
    """

    value: float
    method: Method
    std_error: float | None = None
    quad_error: float | None = None

    def __float__(self) -> float:
        return float(self.value)


class ConvexityWarning(UserWarning):
    """Convexity correction fell outside the validity of the Taylor expansion."""


# ---------------------------------------------------------------------------
# variance strikes


def variance_strike_heston(p: HestonParams, T: float) -> StrikeQuote:
    return StrikeQuote(moments.integrated_variance_mean(p, T), Method.ANALYTIC)


def variance_strike_merton(p: MertonParams, T: float) -> StrikeQuote:
    if T <= 0:
        raise ValueError("T must be > 0")
    return StrikeQuote(p.sigma**2 + p.jumps.lam * p.jumps.second_moment, Method.ANALYTIC)


def variance_strike_bates(p: BatesParams, T: float) -> StrikeQuote:
    value = moments.integrated_variance_mean(p.heston, T) + p.jumps.lam * p.jumps.second_moment
    return StrikeQuote(value, Method.ANALYTIC)


def variance_strike_levy_heston(p: HestonParams, s: StableParams, T: float) -> StrikeQuote:
    """Variance strike when the variance is driven by an alpha-stable process.

    The location ``delta`` enters as the drift of the driving process
    (E[L_t] = delta * t), which only has a meaning for alpha > 1.
    """
    if T <= 0:
        raise ValueError("T must be > 0")
    if s.delta != 0.0 and s.alpha <= 1.0:
        raise ValueError("delta requires alpha > 1")
    if s.delta == 0.0:
        return variance_strike_heston(p, T)
    k, th, d = p.kappa, p.theta, s.delta
    x = k * T
    value = th + (-math.expm1(-x)) * (k * p.v0 - k * th + d) / (k**2 * T) - d * math.exp(-x) / k
    return StrikeQuote(value, Method.ANALYTIC)


# ---------------------------------------------------------------------------
# convexity correction


def vol_strike_convexity(mean: float, var: float, extra_jump_var: float = 0.0) -> StrikeQuote:
    """Second-order Taylor estimate of E[sqrt(RV)].

    ``sqrt(mean) - (var + extra_jump_var) / (8 mean^{3/2})``. A negative result
    means the expansion is outside its radius of convergence; it is clamped to
    zero with a :class:`ConvexityWarning`.
    """
    if not mean > 0:
        raise ValueError("mean must be positive")
    value = math.sqrt(mean) - (var + extra_jump_var) / (8.0 * mean**1.5)
    if value < 0:
        warnings.warn(
            f"convexity-corrected value {value:.6g} < 0 clamped to 0", ConvexityWarning, stacklevel=2
        )
        value = 0.0
    return StrikeQuote(value, Method.CONVEXITY)


def jump_rv_variance(p: MertonParams | BatesParams, T: float) -> float:
    """Var[(1/T) sum (ln Y_i)^2] = lambda E[(ln Y)^4] / T."""
    return p.jumps.lam * p.jumps.fourth_moment / T


def vol_strike_convexity_heston(
    p: HestonParams, T: float, mode: FormulaMode | str = FormulaMode.CORRECTED
) -> StrikeQuote:
    mean = moments.integrated_variance_mean(p, T)
    return vol_strike_convexity(mean, moments.integrated_variance_variance(p, T, mode))


def vol_strike_convexity_merton(p: MertonParams, T: float) -> StrikeQuote:
    return vol_strike_convexity(variance_strike_merton(p, T).value, 0.0, jump_rv_variance(p, T))


def vol_strike_convexity_bates(
    p: BatesParams, T: float, mode: FormulaMode | str = FormulaMode.CORRECTED
) -> StrikeQuote:
    mean = variance_strike_bates(p, T).value
    var = moments.integrated_variance_variance(p.heston, T, mode)
    return vol_strike_convexity(mean, var, jump_rv_variance(p, T))


def vol_strike_convexity_model(
    model: HestonParams | MertonParams | BatesParams,
    T: float,
    mode: FormulaMode | str = FormulaMode.CORRECTED,
) -> StrikeQuote:
    if isinstance(model, HestonParams):
        return vol_strike_convexity_heston(model, T, mode)
    if isinstance(model, MertonParams):
        return vol_strike_convexity_merton(model, T)
    if isinstance(model, BatesParams):
        return vol_strike_convexity_bates(model, T, mode)
    raise TypeError(f"no convexity formula for {type(model).__name__}")


def variance_strike(model, T: float) -> StrikeQuote:
    if isinstance(model, HestonParams):
        return variance_strike_heston(model, T)
    if isinstance(model, MertonParams):
        return variance_strike_merton(model, T)
    if isinstance(model, BatesParams):
        return variance_strike_bates(model, T)
    if isinstance(model, LevyHestonParams):
        return variance_strike_levy_heston(model.heston, model.stable, T)
    raise TypeError(f"unsupported model {type(model).__name__}")


# ---------------------------------------------------------------------------
# VIX


def _split_vix_model(model: HestonParams | BatesParams) -> tuple[HestonParams, float]:
    if isinstance(model, BatesParams):
        return model.heston, model.jump_vix_shift
    if isinstance(model, HestonParams):
        return model, 0.0
    raise TypeError(f"VIX pricing needs Heston or Bates parameters, got {type(model).__name__}")


def vix_weights(model: HestonParams | BatesParams, tau: float) -> tuple[float, float]:
    """(A, B) with VIX_t^2 / 100^2 = A * V_t + B."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    h, shift = _split_vix_model(model)
    A = moments.one_minus_exp_ratio(h.kappa * tau)
    return A, h.theta * (1.0 - A) + shift


def vix_level(model: HestonParams | BatesParams, v, tau: float):
    """VIX_t^2 / 100^2 as a function of the spot variance (scalar or array)."""
    h, shift = _split_vix_model(model)
    A = moments.one_minus_exp_ratio(h.kappa * tau)
    return h.theta + (v - h.theta) * A + shift


def vix_squared(model: HestonParams | BatesParams, v_t: float, tau: float = 30.0 / 365.0) -> float:
    """VIX_t^2 in index points squared given the spot variance ``v_t``."""
    if v_t < 0:
        raise ValueError("v_t must be >= 0")
    if tau <= 0:
        raise ValueError("tau must be > 0")
    return VIX_SCALE**2 * vix_level(model, v_t, tau)


def vix_future_convexity(
    model: HestonParams | BatesParams, T: float, tau: float = 30.0 / 365.0
) -> StrikeQuote:
    """Convexity-corrected VIX future price in index points.

    ``T = 0`` is allowed and returns the spot VIX.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    h, _ = _split_vix_model(model)
    A, _ = vix_weights(model, tau)
    M = vix_level(model, moments.cir_mean(h, T), tau)
    if not M > 0:
        raise ValueError("M must be positive")
    var_vt = moments.cir_variance(h, T) if T > 0 else 0.0
    if var_vt == 0.0:
        return StrikeQuote(VIX_SCALE * math.sqrt(M), Method.CONVEXITY)
    value = VIX_SCALE * (math.sqrt(M) - A**2 * var_vt / (8.0 * M**1.5))
    if value < 0:
        warnings.warn(f"convexity VIX future {value:.6g} < 0 clamped to 0", ConvexityWarning, stacklevel=2)
        value = 0.0
    return StrikeQuote(value, Method.CONVEXITY)


__all__ = [
    "ConvexityWarning",
    "Method",
    "StrikeQuote",
    "VIX_SCALE",
    "jump_rv_variance",
    "variance_strike",
    "variance_strike_bates",
    "variance_strike_heston",
    "variance_strike_levy_heston",
    "variance_strike_merton",
    "vix_future_convexity",
    "vix_level",
    "vix_squared",
    "vix_weights",
    "vol_strike_convexity",
    "vol_strike_convexity_bates",
    "vol_strike_convexity_heston",
    "vol_strike_convexity_merton",
    "vol_strike_convexity_model",
]

"""Variance swaps, volatility swaps and VIX futures under stochastic volatility with jumps.

Pricing routes: exact variance strikes, second-order convexity corrections,
Laplace-transform quadrature, and Monte Carlo references. Models: Heston,
Merton jump diffusion, Bates, and a Heston variance driven by an alpha-stable
process.
"""

__version__ = "0.1.0"

from .laplace import QuadratureConfig, QuadratureError, sqrt_expectation, vix_future_closed_form, vol_strike_laplace
from .moments import FormulaMode, integrated_variance_mean, integrated_variance_variance
from .params import (
    EXAMPLE_MERTON,
    SPX_BATES,
    SPX_HESTON,
    SPX_JUMPS,
    BatesParams,
    Contract,
    HestonParams,
    JumpParams,
    LevyHestonParams,
    MertonParams,
    ParameterError,
    StableParams,
)
from .swaps import (
    Method,
    StrikeQuote,
    variance_strike,
    vix_future_convexity,
    vix_squared,
    vol_strike_convexity_model,
)

__all__ = [
    "BatesParams",
    "Contract",
    "EXAMPLE_MERTON",
    "FormulaMode",
    "HestonParams",
    "JumpParams",
    "LevyHestonParams",
    "MertonParams",
    "Method",
    "ParameterError",
    "QuadratureConfig",
    "QuadratureError",
    "StableParams",
    "StrikeQuote",
    "SPX_BATES",
    "SPX_HESTON",
    "SPX_JUMPS",
    "integrated_variance_mean",
    "integrated_variance_variance",
    "sqrt_expectation",
    "variance_strike",
    "vix_future_closed_form",
    "vix_future_convexity",
    "vix_squared",
    "vol_strike_convexity_model",
    "vol_strike_laplace",
]

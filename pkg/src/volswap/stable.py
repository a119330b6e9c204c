"""Alpha-stable variates and their fractional absolute moments.

Convention: the symmetric law has characteristic function
``exp(i*delta*u - sigma_s*|u|^alpha)``, so ``alpha = 2`` is Normal(delta, 2*sigma_s)
and the conventional scale parameter is ``sigma_s ** (1/alpha)``. Skewed laws
(``beta != 0``) follow the usual S1 parameterisation with that same scale.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .moments import FormulaMode, _mode
from .params import StableParams


def _standard_cms(alpha: float, beta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Chambers-Mallows-Stuck draws with unit scale and zero location (S1)."""
    V = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, n)
    W = rng.standard_exponential(n)
    if alpha == 1.0:
        half_pi = 0.5 * math.pi
        bv = half_pi + beta * V
        return (bv * np.tan(V) - beta * np.log(half_pi * W * np.cos(V) / bv)) / half_pi
    t = beta * math.tan(0.5 * math.pi * alpha)
    B = math.atan(t) / alpha
    S = (1.0 + t * t) ** (0.5 / alpha)
    aVB = alpha * (V + B)
    return (
        S
        * np.sin(aVB)
        / np.cos(V) ** (1.0 / alpha)
        * (np.cos(V - aVB) / W) ** ((1.0 - alpha) / alpha)
    )


def sample_alpha_stable(
    s: StableParams, n: int, seed: int | np.random.Generator | None = None
) -> np.ndarray:
    """Draw ``n`` alpha-stable variates by the Chambers-Mallows-Stuck method.

    ``alpha = 1, beta = 0`` gives a Cauchy law with scale ``sigma_s``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = _standard_cms(s.alpha, s.beta, n, rng)
    scale = s.scale
    if s.alpha == 1.0 and s.beta != 0.0:
        return scale * x + (2.0 / math.pi) * s.beta * scale * math.log(scale) + s.delta
    return scale * x + s.delta


def stable_fractional_moment(
    p: float,
    alpha: float,
    sigma_s: float = 1.0,
    mode: FormulaMode | str = FormulaMode.CORRECTED,
) -> float:
    """E|X|^p for the symmetric stable law with delta = 0, valid for 0 < p < alpha.

    ``corrected`` is 2^p G((p+1)/2) G(1-p/alpha) / (sqrt(pi) G(1-p/2)) sigma_s^(p/alpha).
    ``printed`` carries an extra 1/alpha factor; it breaks the p -> 0 limit and
    the Gaussian case and is kept for comparison only.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError("alpha must be in (0, 2]")
    if not 0.0 < p < alpha:
        raise ValueError("p must be in (0, alpha)")
    if sigma_s <= 0:
        raise ValueError("sigma_s must be > 0")
    log_d = (
        p * math.log(2.0)
        + gammaln(0.5 * (p + 1.0))
        + gammaln(1.0 - p / alpha)
        - 0.5 * math.log(math.pi)
        - gammaln(1.0 - 0.5 * p)
    )
    if _mode(mode) is FormulaMode.PRINTED:
        log_d -= math.log(alpha)
    return math.exp(log_d + p / alpha * math.log(sigma_s))


__all__ = ["sample_alpha_stable", "stable_fractional_moment"]

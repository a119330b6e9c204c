"""Model parameter sets and their validity rules.

All parameter containers are frozen dataclasses; construction validates the
invariants and raises :class:`ParameterError` naming the first violation.
Rates, variances and intensities are annualised.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib


class ParameterError(ValueError):
    """Raised when a parameter set violates one of its invariants."""


class FellerWarning(UserWarning):
    """The variance process can touch zero (2*kappa*theta < sigma**2)."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ParameterError(message)


def _finite(obj: Any) -> None:
    for f in fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, float) and not math.isfinite(value):
            raise ParameterError(f"{f.name} must be finite")


@dataclass(frozen=True)
class HestonParams:
    """Heston / CIR parameters.

    ``sigma = 0`` is accepted and gives a deterministic variance path; every
    pricing route handles that limit explicitly.
    """

    kappa: float
    theta: float
    sigma: float
    rho: float = 0.0
    v0: float = 0.0
    r: float = 0.0

    def __post_init__(self) -> None:
        _finite(self)
        _require(self.kappa > 0, "kappa must be > 0")
        _require(self.theta > 0, "theta must be > 0")
        _require(self.sigma >= 0, "sigma must be >= 0")
        _require(-1.0 <= self.rho <= 1.0, "rho out of range [-1, 1]")
        _require(self.v0 >= 0, "v0 must be >= 0")

    @property
    def feller(self) -> bool:
        return 2.0 * self.kappa * self.theta >= self.sigma**2


@dataclass(frozen=True)
class JumpParams:
    """Compound Poisson jumps with log-normal sizes, ``ln Y ~ N(a, b2)``."""

    lam: float
    a: float
    b2: float

    def __post_init__(self) -> None:
        _finite(self)
        _require(self.lam >= 0, "lambda must be >= 0")
        _require(self.b2 > 0, "b2 must be > 0")

    @property
    def m(self) -> float:
        """Mean relative jump size E[Y - 1] = exp(a + b2/2) - 1."""
        return math.expm1(self.a + 0.5 * self.b2)

    @property
    def second_moment(self) -> float:
        """E[(ln Y)^2]."""
        return self.a**2 + self.b2

    @property
    def fourth_moment(self) -> float:
        """E[(ln Y)^4]."""
        a, b2 = self.a, self.b2
        return a**4 + 6.0 * a**2 * b2 + 3.0 * b2**2


@dataclass(frozen=True)
class MertonParams:
    sigma: float
    jumps: JumpParams
    r: float = 0.0

    def __post_init__(self) -> None:
        _require(isinstance(self.jumps, JumpParams), "jumps must be JumpParams")
        _require(math.isfinite(self.sigma), "sigma must be finite")
        _require(self.sigma > 0, "sigma must be > 0")


@dataclass(frozen=True)
class BatesParams:
    """Heston variance plus price jumps independent of both Brownian motions."""

    heston: HestonParams
    jumps: JumpParams

    def __post_init__(self) -> None:
        _require(isinstance(self.heston, HestonParams), "heston must be HestonParams")
        _require(isinstance(self.jumps, JumpParams), "jumps must be JumpParams")

    @property
    def jump_vix_shift(self) -> float:
        """Jump contribution 2*lambda*(m - a) to VIX^2 / 100^2."""
        j = self.jumps
        return 2.0 * j.lam * (j.m - j.a)


@dataclass(frozen=True)
class StableParams:
    """Alpha-stable law with characteristic function exp(i*delta*u - sigma_s*|u|^alpha).

    With this convention ``alpha = 2`` is Normal(delta, 2*sigma_s) and the usual
    scale parameter is ``sigma_s ** (1/alpha)``.
    """

    alpha: float
    sigma_s: float = 1.0
    beta: float = 0.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        _finite(self)
        _require(0.0 < self.alpha <= 2.0, "alpha must be in (0, 2]")
        _require(self.sigma_s > 0, "sigma_s must be > 0")
        _require(-1.0 <= self.beta <= 1.0, "beta out of range [-1, 1]")

    @property
    def symmetric(self) -> bool:
        return self.beta == 0.0 and self.delta == 0.0

    @property
    def scale(self) -> float:
        return self.sigma_s ** (1.0 / self.alpha)


@dataclass(frozen=True)
class LevyHestonParams:
    """Heston variance driven by an alpha-stable Levy process instead of a BM."""

    heston: HestonParams
    stable: StableParams

    def __post_init__(self) -> None:
        _require(isinstance(self.heston, HestonParams), "heston must be HestonParams")
        _require(isinstance(self.stable, StableParams), "stable must be StableParams")


@dataclass(frozen=True)
class Contract:
    maturity_T: float
    tau: float = 30.0 / 365.0

    def __post_init__(self) -> None:
        _require(self.maturity_T > 0, "maturity_T must be > 0")
        _require(self.tau > 0, "tau must be > 0")


Model = HestonParams | MertonParams | BatesParams | LevyHestonParams


def validate(params: Any) -> Any:
    """Re-check every invariant of ``params`` and return it unchanged.

    Construction already validates, so this mainly guards objects built with
    ``object.__setattr__`` tricks or loaded from elsewhere. Feller violations
    are reported as a :class:`FellerWarning`, never as an error.
    """
    if isinstance(params, (HestonParams, JumpParams, StableParams, Contract)):
        params.__post_init__()
    elif isinstance(params, (MertonParams, BatesParams, LevyHestonParams)):
        for f in fields(params):
            sub = getattr(params, f.name)
            if hasattr(sub, "__dataclass_fields__"):
                validate(sub)
        params.__post_init__()
    else:
        raise ParameterError(f"unsupported parameter type {type(params).__name__}")
    heston = params if isinstance(params, HestonParams) else getattr(params, "heston", None)
    if heston is not None and not heston.feller:
        warnings.warn(
            f"Feller condition violated: 2*kappa*theta={2 * heston.kappa * heston.theta:.6g}"
            f" < sigma^2={heston.sigma**2:.6g}",
            FellerWarning,
            stacklevel=2,
        )
    return params


# Posterior means fitted to S&P 500 daily returns; the Merton set reuses their jump parameters.
SPX_HESTON = HestonParams(kappa=0.8519, theta=0.1574, sigma=0.2403, rho=-0.8740, v0=0.0093, r=-0.0018)
SPX_JUMPS = JumpParams(lam=0.0038, a=-0.0001, b2=0.05)
SPX_BATES = BatesParams(
    heston=HestonParams(kappa=0.8269, theta=0.1793, sigma=0.2916, rho=-0.8734, v0=0.0103, r=-0.0044),
    jumps=SPX_JUMPS,
)
EXAMPLE_MERTON = MertonParams(sigma=0.1, jumps=SPX_JUMPS, r=-0.0044)


# ---------------------------------------------------------------------------
# config files

_HESTON_KEYS = ("kappa", "theta", "sigma", "rho", "v0", "r")
_JUMP_KEYS = {"lambda": "lam", "lam": "lam", "a": "a", "b2": "b2"}
_STABLE_KEYS = ("alpha", "sigma_s", "beta", "delta")
MODEL_KINDS = ("heston", "merton", "bates", "levy-heston")


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a flat TOML key/value file. Nested tables are rejected."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    for key, value in data.items():
        if isinstance(value, dict):
            raise ParameterError(f"config key {key!r}: nested tables are not supported")
    return data


def build_model(kind: str, values: Mapping[str, Any]) -> Model:
    """Construct a model of ``kind`` from flat key/value pairs.

    Keys are the field names (``kappa``, ``theta``, ``sigma``, ``rho``, ``v0``,
    ``r``, ``lambda``, ``a``, ``b2``, ``alpha``, ``sigma_s``, ``beta``,
    ``delta``). Unknown keys other than contract keys raise.
    """
    vals = {k: v for k, v in values.items() if v is not None}
    allowed = set(_HESTON_KEYS) | set(_JUMP_KEYS) | set(_STABLE_KEYS) | {"T", "tau", "model"}
    unknown = sorted(set(vals) - allowed)
    if unknown:
        raise ParameterError(f"unknown parameter key(s): {', '.join(unknown)}")

    def need(keys: tuple[str, ...] | list[str]) -> None:
        missing = [k for k in keys if k not in vals]
        if missing:
            raise ParameterError(f"missing parameter(s) for {kind}: {', '.join(missing)}")

    def heston() -> HestonParams:
        need(["kappa", "theta", "sigma"])
        return HestonParams(**{k: float(vals[k]) for k in _HESTON_KEYS if k in vals})

    def jumps() -> JumpParams:
        lam = vals.get("lambda", vals.get("lam"))
        if lam is None:
            raise ParameterError(f"missing parameter(s) for {kind}: lambda")
        need(["a", "b2"])
        return JumpParams(lam=float(lam), a=float(vals["a"]), b2=float(vals["b2"]))

    if kind == "heston":
        return heston()
    if kind == "merton":
        need(["sigma"])
        return MertonParams(sigma=float(vals["sigma"]), jumps=jumps(), r=float(vals.get("r", 0.0)))
    if kind == "bates":
        return BatesParams(heston=heston(), jumps=jumps())
    if kind == "levy-heston":
        need(["alpha"])
        stable = StableParams(**{k: float(vals[k]) for k in _STABLE_KEYS if k in vals})
        return LevyHestonParams(heston=heston(), stable=stable)
    raise ParameterError(f"unknown model kind {kind!r}; expected one of {', '.join(MODEL_KINDS)}")


def with_updates(params: Any, **changes: Any) -> Any:
    """``dataclasses.replace`` that re-validates."""
    return replace(params, **changes)


__all__ = [
    "BatesParams",
    "Contract",
    "EXAMPLE_MERTON",
    "FellerWarning",
    "HestonParams",
    "JumpParams",
    "LevyHestonParams",
    "MertonParams",
    "MODEL_KINDS",
    "Model",
    "ParameterError",
    "StableParams",
    "SPX_BATES",
    "SPX_HESTON",
    "SPX_JUMPS",
    "build_model",
    "load_config",
    "validate",
    "with_updates",
]

"""Monte Carlo reference prices for every model.

Paths are generated in fixed-size blocks. Each block draws from its own
generator seeded by ``SeedSequence(seed, spawn_key=(block, stream))`` so a
given ``(seed, SimConfig)`` yields bit-identical estimates whatever the number
of worker threads. Block partial sums are reduced in block order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import moments
from .params import BatesParams, HestonParams, JumpParams, LevyHestonParams, MertonParams, StableParams
from .stable import _standard_cms, sample_alpha_stable, stable_fractional_moment
from .swaps import VIX_SCALE, vix_level

_DIFFUSION, _JUMPS, _PRICE, _STABLE = 0, 1, 2, 3


class Scheme(str, Enum):
    EXACT_CIR = "exact_cir"
    FULL_TRUNCATION_EULER = "full_truncation_euler"


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    Attributes:
        n_paths: number of paths.
        n_steps: time steps per year of horizon; a horizon T uses
            ``max(1, ceil(n_steps * T))`` steps.
        seed: root seed.
        scheme: variance transition scheme.
        block_size: paths per RNG block. Part of the reproducibility key.
        workers: threads used to run blocks; does not affect results.
    """

    n_paths: int = 200_000
    n_steps: int = 1000
    seed: int = 0
    scheme: Scheme | str = Scheme.EXACT_CIR
    block_size: int = 8192
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    def steps_for(self, T: float) -> int:
        return max(1, math.ceil(self.n_steps * T - 1e-9))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n: int

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_se * self.std_error


@dataclass(frozen=True)
class JumpRecord:
    """Compound Poisson jumps for a batch of paths, stored flat.

    Path ``i`` owns ``times[offsets[i]:offsets[i+1]]`` and the matching log sizes.
    """

    counts: np.ndarray
    times: np.ndarray
    log_sizes: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.counts)))

    def sum_sq(self) -> np.ndarray:
        """Per-path sum of (ln Y)^2."""
        owner = np.repeat(np.arange(self.counts.size), self.counts)
        return np.bincount(owner, weights=self.log_sizes**2, minlength=self.counts.size)


# ---------------------------------------------------------------------------
# random streams and reduction


def _rng(seed: int, block: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block, stream))))


def _blocks(n: int, size: int) -> list[tuple[int, int]]:
    return [(b, min(size, n - b * size)) for b in range(math.ceil(n / size))]


class _Moments:
    """Shifted running sums; exact zero spread when every sample is equal."""

    def __init__(self) -> None:
        self.n = 0
        self.shift: float | None = None
        self.s1 = 0.0
        self.s2 = 0.0

    def add(self, x: np.ndarray) -> None:
        if x.size == 0:
            return
        if self.shift is None:
            self.shift = float(x[0])
        d = x - self.shift
        self.n += x.size
        self.s1 += float(d.sum())
        self.s2 += float(d @ d)

    def estimate(self) -> McEstimate:
        if self.n == 0:
            raise ValueError("no samples")
        mean = self.shift + self.s1 / self.n
        if self.n == 1:
            return McEstimate(mean, 0.0, 1)
        var = max(self.s2 - self.s1 * self.s1 / self.n, 0.0) / (self.n - 1)
        return McEstimate(mean, math.sqrt(var / self.n), self.n)


def _run_blocks(cfg: SimConfig, work: Callable[[int, int], tuple[np.ndarray, ...]], n_out: int) -> list[McEstimate]:
    blocks = _blocks(cfg.n_paths, cfg.block_size)
    accs = [_Moments() for _ in range(n_out)]
    if cfg.workers == 1:
        results = (work(b, n) for b, n in blocks)
    else:
        pool = ThreadPoolExecutor(max_workers=cfg.workers)
        results = pool.map(lambda bn: work(*bn), blocks)
    try:
        for res in results:
            for acc, x in zip(accs, res):
                acc.add(x)
    finally:
        if cfg.workers != 1:
            pool.shutdown()
    return [a.estimate() for a in accs]


# ---------------------------------------------------------------------------
# variance paths


def _ncx2(df: float, nc: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Noncentral chi-square draws; for df > 1 split into central chi-square plus a shifted normal square."""
    if df > 1.0:
        z = rng.standard_normal(nc.size) + np.sqrt(nc)
        return 2.0 * rng.standard_gamma(0.5 * (df - 1.0), nc.size) + z * z
    return rng.noncentral_chisquare(df, np.maximum(nc, 1e-300))


def _advance(p: HestonParams, v: np.ndarray, dt: float, scheme: Scheme, rng: np.random.Generator) -> np.ndarray:
    """One variance transition over ``dt``."""
    k, th, sig = p.kappa, p.theta, p.sigma
    if sig == 0.0:
        return th + (v - th) * math.exp(-k * dt)
    if scheme is Scheme.EXACT_CIR:
        c = sig**2 * -math.expm1(-k * dt) / (4.0 * k)
        return c * _ncx2(4.0 * k * th / sig**2, v * (math.exp(-k * dt) / c), rng)
    vp = np.maximum(v, 0.0)
    return v + k * (th - vp) * dt + sig * np.sqrt(vp * dt) * rng.standard_normal(v.size)


def _cir_block(
    p: HestonParams,
    n: int,
    steps: int,
    dt: float,
    scheme: Scheme,
    rng: np.random.Generator,
    record: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Advance ``n`` CIR paths; returns (V_T, trapezoid average of V, paths or None)."""
    v = np.full(n, p.v0, dtype=float)
    paths = np.empty((n, steps + 1)) if record else None
    if record:
        paths[:, 0] = v
    acc = 0.5 * v
    for i in range(1, steps + 1):
        v = _advance(p, v, dt, scheme, rng)
        if record:
            paths[:, i] = v
        vp = np.maximum(v, 0.0)
        acc = acc + (vp if i < steps else 0.5 * vp)
    return v, acc / steps, paths


def _deterministic_path(p: HestonParams, times: np.ndarray) -> np.ndarray:
    return p.theta + (p.v0 - p.theta) * np.exp(-p.kappa * times)


def simulate_cir(p: HestonParams, T: float, cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Full variance paths on a uniform grid.

    Returns:
        ``(times, paths)`` with ``paths`` of shape ``(n_paths, steps + 1)``.
        Euler paths hold the untruncated state, which can dip below zero;
        apply ``max(v, 0)`` before use, as ``realized_variance`` does.
        Meant for moderate sizes; the estimators below stream instead.
    """
    if T <= 0:
        raise ValueError("T must be > 0")
    steps = cfg.steps_for(T)
    times = np.linspace(0.0, T, steps + 1)
    if p.sigma == 0.0:
        return times, np.broadcast_to(_deterministic_path(p, times), (cfg.n_paths, steps + 1)).copy()
    out = np.empty((cfg.n_paths, steps + 1))
    for b, n in _blocks(cfg.n_paths, cfg.block_size):
        start = b * cfg.block_size
        _, _, paths = _cir_block(p, n, steps, T / steps, cfg.scheme, _rng(cfg.seed, b, _DIFFUSION), record=True)
        out[start:start + n] = paths
    return times, out


def simulate_cir_terminal(p: HestonParams, T: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draws of V_T in one noncentral chi-square step."""
    if T == 0.0 or p.sigma == 0.0:
        return np.full(n, moments.cir_mean(p, T))
    k = p.kappa
    c = p.sigma**2 * -math.expm1(-k * T) / (4.0 * k)
    df = 4.0 * k * p.theta / p.sigma**2
    return c * _ncx2(df, np.full(n, p.v0 * math.exp(-k * T) / c), rng)


# ---------------------------------------------------------------------------
# jumps and realised variance


def _jumps_block(j: JumpParams, T: float, n: int, rng: np.random.Generator) -> JumpRecord:
    counts = rng.poisson(j.lam * T, n) if j.lam > 0 else np.zeros(n, dtype=np.int64)
    total = int(counts.sum())
    times = np.sort(rng.uniform(0.0, T, total)) if total else np.empty(0)
    sizes = rng.normal(j.a, math.sqrt(j.b2), total) if total else np.empty(0)
    return JumpRecord(counts, times, sizes)


def simulate_jumps(j: JumpParams, T: float, cfg: SimConfig) -> JumpRecord:
    """Jump counts ~ Poisson(lam T), times uniform on [0, T], ln Y ~ N(a, b2).

    Within a path the jump times are not sorted; only their set matters here.
    """
    if T <= 0:
        raise ValueError("T must be > 0")
    parts = [_jumps_block(j, T, n, _rng(cfg.seed, b, _JUMPS)) for b, n in _blocks(cfg.n_paths, cfg.block_size)]
    return JumpRecord(
        np.concatenate([r.counts for r in parts]),
        np.concatenate([r.times for r in parts]),
        np.concatenate([r.log_sizes for r in parts]),
    )


def realized_variance(
    T: float,
    variance_paths: np.ndarray | None = None,
    jumps: JumpRecord | None = None,
    sigma: float | None = None,
) -> np.ndarray:
    """Realised variance per path.

    Args:
        T: horizon in years.
        variance_paths: ``(n, steps + 1)`` variance values on a uniform grid,
            integrated by the trapezoid rule. Negative values count as zero.
        jumps: optional jumps whose squared log sizes are added, divided by T.
        sigma: constant volatility (Merton); used when no paths are given.
    """
    if T <= 0:
        raise ValueError("T must be > 0")
    if variance_paths is not None:
        vp = np.maximum(np.atleast_2d(variance_paths), 0.0)
        steps = vp.shape[1] - 1
        if steps < 1:
            raise ValueError("variance_paths need at least two grid points")
        rv = (0.5 * (vp[:, 0] + vp[:, -1]) + vp[:, 1:-1].sum(axis=1)) / steps
    elif sigma is not None:
        n = jumps.counts.size if jumps is not None else 1
        rv = np.full(n, float(sigma) ** 2)
    else:
        raise ValueError("need variance_paths or sigma")
    if jumps is not None:
        rv = rv + jumps.sum_sq() / T
    return rv


# ---------------------------------------------------------------------------
# estimators


def _levy_block(
    p: HestonParams,
    s: StableParams,
    n: int,
    steps: int,
    dt: float,
    rng: np.random.Generator,
    out: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Euler paths driven by stable increments; returns (trapezoid average of V+, negative count)."""
    v = np.full(n, p.v0, dtype=float)
    if out is not None:
        out[:, 0] = v
    acc = 0.5 * v
    negatives = 0
    inc_scale = (s.sigma_s * dt) ** (1.0 / s.alpha)
    for i in range(1, steps + 1):
        vp = np.maximum(v, 0.0)
        dL = s.delta * dt + inc_scale * _standard_cms(s.alpha, s.beta, n, rng)
        v = v + p.kappa * (p.theta - vp) * dt + p.sigma * np.sqrt(vp) * dL
        negatives += int(np.count_nonzero(v < 0))
        if out is not None:
            out[:, i] = v
        vp = np.maximum(v, 0.0)
        acc = acc + (vp if i < steps else 0.5 * vp)
    return acc / steps, negatives


@dataclass(frozen=True)
class LevyCirResult:
    k_var: McEstimate
    negative_fraction: float
    times: np.ndarray | None = None
    paths: np.ndarray | None = None


def simulate_levy_cir(
    p: HestonParams, s: StableParams, T: float, cfg: SimConfig, record_paths: bool = False
) -> LevyCirResult:
    """Variance driven by an alpha-stable process, full-truncation Euler.

    Increments of the driver over ``dt`` are ``delta*dt + (sigma_s*dt)^(1/alpha) X``
    with X standard stable. With ``alpha = 2`` and ``sigma_s = 1/2`` the driver is a
    standard Brownian motion. For ``alpha < 2`` jumps can push the Euler state
    below zero; it is truncated and ``negative_fraction`` reports how often
    (share of path-steps), as a gauge of the induced bias.
    """
    if s.alpha <= 1.0:
        raise ValueError("alpha ≤ 1 unsupported in simulation")
    if T <= 0:
        raise ValueError("T must be > 0")
    steps = cfg.steps_for(T)
    times = np.linspace(0.0, T, steps + 1)
    if p.sigma == 0.0:
        k_var = moments.integrated_variance_mean(p, T)
        paths = None
        if record_paths:
            paths = np.broadcast_to(_deterministic_path(p, times), (cfg.n_paths, steps + 1)).copy()
        return LevyCirResult(McEstimate(k_var, 0.0, cfg.n_paths), 0.0, times, paths)
    dt = T / steps
    negatives = 0
    acc = _Moments()
    paths = np.empty((cfg.n_paths, steps + 1)) if record_paths else None
    for b, n in _blocks(cfg.n_paths, cfg.block_size):
        start = b * cfg.block_size
        out = paths[start:start + n] if record_paths else None
        rv, neg = _levy_block(p, s, n, steps, dt, _rng(cfg.seed, b, _STABLE), out)
        negatives += neg
        acc.add(rv)
    frac = negatives / (cfg.n_paths * steps)
    return LevyCirResult(acc.estimate(), frac, times if record_paths else None, paths)


def _rv_sampler(model, T: float, cfg: SimConfig) -> Callable[[int, int], np.ndarray]:
    steps = cfg.steps_for(T)
    dt = T / steps

    def diffusion(h: HestonParams, b: int, n: int) -> np.ndarray:
        if h.sigma == 0.0:
            return np.full(n, moments.integrated_variance_mean(h, T))
        _, rv, _ = _cir_block(h, n, steps, dt, cfg.scheme, _rng(cfg.seed, b, _DIFFUSION))
        return rv

    def jump_leg(j: JumpParams, b: int, n: int) -> np.ndarray:
        if j.lam == 0.0:
            return np.zeros(n)
        return _jumps_block(j, T, n, _rng(cfg.seed, b, _JUMPS)).sum_sq() / T

    if isinstance(model, HestonParams):
        return lambda b, n: diffusion(model, b, n)
    if isinstance(model, MertonParams):
        return lambda b, n: model.sigma**2 + jump_leg(model.jumps, b, n)
    if isinstance(model, BatesParams):
        return lambda b, n: diffusion(model.heston, b, n) + jump_leg(model.jumps, b, n)
    if isinstance(model, LevyHestonParams):
        h, s = model.heston, model.stable
        if s.alpha <= 1.0:
            raise ValueError("alpha ≤ 1 unsupported in simulation")
        if h.sigma == 0.0:
            return lambda b, n: np.full(n, moments.integrated_variance_mean(h, T))
        return lambda b, n: _levy_block(h, s, n, steps, dt, _rng(cfg.seed, b, _STABLE))[0]
    raise TypeError(f"unsupported model {type(model).__name__}")


def estimate_strikes(model, T: float, cfg: SimConfig) -> tuple[McEstimate, McEstimate]:
    """Sample means of RV and sqrt(RV) with their standard errors."""
    if T <= 0:
        raise ValueError("T must be > 0")
    sampler = _rv_sampler(model, T, cfg)

    def work(b: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        rv = sampler(b, n)
        return rv, np.sqrt(rv)

    k_var, k_vol = _run_blocks(cfg, work, 2)
    return k_var, k_vol


def estimate_laplace(model, T: float, s: float, cfg: SimConfig) -> McEstimate:
    """Sample mean of exp(-s RV); reference for the Laplace transforms."""
    sampler = _rv_sampler(model, T, cfg)
    return _run_blocks(cfg, lambda b, n: (np.exp(-s * sampler(b, n)),), 1)[0]


def _heston_of(model) -> HestonParams:
    if isinstance(model, BatesParams):
        return model.heston
    if isinstance(model, HestonParams):
        return model
    raise TypeError(f"VIX simulation needs Heston or Bates parameters, got {type(model).__name__}")


def estimate_vix_future(model, T: float, tau: float, cfg: SimConfig) -> McEstimate:
    """E[VIX_T] in index points from exact draws of V_T."""
    if T < 0:
        raise ValueError("T must be >= 0")
    if tau <= 0:
        raise ValueError("tau must be > 0")
    h = _heston_of(model)

    def work(b: int, n: int) -> tuple[np.ndarray]:
        v_T = simulate_cir_terminal(h, T, n, _rng(cfg.seed, b, _DIFFUSION))
        return (VIX_SCALE * np.sqrt(vix_level(model, v_T, tau)),)

    return _run_blocks(cfg, work, 1)[0]


def estimate_cir_mgf(p: HestonParams, T: float, phi: float, cfg: SimConfig) -> McEstimate:
    """Sample mean of exp(phi V_T) over exact terminal draws."""

    def work(b: int, n: int) -> tuple[np.ndarray]:
        return (np.exp(phi * simulate_cir_terminal(p, T, n, _rng(cfg.seed, b, _DIFFUSION))),)

    return _run_blocks(cfg, work, 1)[0]


def estimate_vix_log_contract(model: HestonParams, t: float, tau: float, cfg: SimConfig) -> McEstimate:
    """E[VIX_t^2] from the log contract -(2/tau) ln(S_{t+tau} / (S_t e^{r tau})) * 100^2.

    V is drawn exactly at t, then (ln S, V) are stepped jointly over [t, t+tau].
    The price increment uses the variance increment to recover the correlated
    part of the Brownian driver, so both schemes share one discretisation.
    """
    if not isinstance(model, HestonParams):
        raise TypeError("log-contract estimator is defined for Heston parameters only")
    if t < 0 or tau <= 0:
        raise ValueError("need t >= 0 and tau > 0")
    p = model
    steps = cfg.steps_for(tau)
    dt = tau / steps
    rho_bar = math.sqrt(max(1.0 - p.rho**2, 0.0))

    def work(b: int, n: int) -> tuple[np.ndarray]:
        rng_v = _rng(cfg.seed, b, _DIFFUSION)
        rng_s = _rng(cfg.seed, b, _PRICE)
        v = simulate_cir_terminal(p, t, n, rng_v) if t > 0 else np.full(n, p.v0)
        x = np.zeros(n)  # ln S_{t+u} - ln S_t - r u
        for _ in range(steps):
            v_new = _advance(p, v, dt, cfg.scheme, rng_v)
            vp, vp_new = np.maximum(v, 0.0), np.maximum(v_new, 0.0)
            integral = 0.5 * (vp + vp_new) * dt
            if p.sigma == 0.0:
                corr = 0.0
            else:
                # int sqrt(V) dW_v from the variance dynamics
                corr = (v_new - v - p.kappa * p.theta * dt + p.kappa * integral) / p.sigma
            x += -0.5 * integral + p.rho * corr + rho_bar * np.sqrt(integral) * rng_s.standard_normal(n)
            v = v_new
        return (-(2.0 / tau) * x * VIX_SCALE**2,)

    return _run_blocks(cfg, work, 1)[0]


__all__ = [
    "JumpRecord",
    "LevyCirResult",
    "McEstimate",
    "Scheme",
    "SimConfig",
    "estimate_cir_mgf",
    "estimate_laplace",
    "estimate_strikes",
    "estimate_vix_future",
    "estimate_vix_log_contract",
    "realized_variance",
    "sample_alpha_stable",
    "simulate_cir",
    "simulate_cir_terminal",
    "simulate_jumps",
    "simulate_levy_cir",
    "stable_fractional_moment",
]

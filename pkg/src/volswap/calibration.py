"""Bayesian calibration of Heston and Bates models from daily log returns.

The model is discretised with an Euler step of length ``dt`` on (ln S, V):

    y_t = r dt - V_{t-1} dt / 2 + sqrt(V_{t-1} dt) e_t + Z_t B_t
    V_t = V_{t-1} + kappa (theta - V_{t-1}) dt + sqrt(V_{t-1} dt) (psi e_t + sqrt(Omega) u_t)

with ``psi = rho sigma`` and ``Omega = sigma^2 (1 - rho^2)``. Parameters are
drawn from their full conditionals (conjugate where possible) and the latent
variances by a single-site random-walk Metropolis-Hastings sweep on log V.
Jump indicators ``B_t`` are Bernoulli with per-observation probability
``lambda``, jump sizes ``Z_t ~ N(a, b2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtri_exp

from .params import BatesParams, HestonParams, JumpParams

MIN_OBSERVATIONS = 100
HESTON_PARAMS = ("r", "kappa", "theta", "sigma", "rho", "psi", "Omega")
BATES_PARAMS = HESTON_PARAMS + ("lambda", "a", "b2")


class CalibrationError(RuntimeError):
    """Base class for calibration failures."""


class InsufficientDataError(CalibrationError, ValueError):
    """Too few or non-finite returns."""


class ChainDivergenceError(CalibrationError, ArithmeticError):
    """A latent variance left the admissible range or a draw became non-finite."""


@dataclass(frozen=True)
class PriorConfig:
    """Prior hyperparameters.

    Normal priors are (mean, sd); inverse-gamma priors are (shape, scale), so
    the density is proportional to x^(-shape-1) exp(-scale/x). ``kappa`` and
    ``theta`` priors are truncated to positive values. ``psi | Omega`` is
    Normal(0, Omega / psi_precision).
    """

    r: tuple[float, float] = (0.0, 1.0)
    kappa: tuple[float, float] = (0.0, 1.0)
    theta: tuple[float, float] = (0.0, 1.0)
    psi_precision: float = 2.0
    omega: tuple[float, float] = (2.0, 1.0 / 200.0)
    lam: tuple[float, float] = (2.0, 40.0)
    a: tuple[float, float] = (0.0, 1.0)
    b2: tuple[float, float] = (5.0, 0.2)

    def __post_init__(self) -> None:
        for name in ("r", "kappa", "theta", "a"):
            if not getattr(self, name)[1] > 0:
                raise ValueError(f"{name} prior sd must be > 0")
        for name in ("omega", "lam", "b2"):
            x, y = getattr(self, name)
            if not (x > 0 and y > 0):
                raise ValueError(f"{name} prior hyperparameters must be > 0")
        if not self.psi_precision > 0:
            raise ValueError("psi_precision must be > 0")


@dataclass(frozen=True)
class ChainConfig:
    n_burn: int = 3000
    n_keep: int = 8000
    n_runs: int = 10
    dt: float = 1.0 / 252.0
    seed: int = 0
    variance_cap: float = 25.0
    initial_proposal_scale: float = 0.3
    prior_only: bool = False

    def __post_init__(self) -> None:
        for name in ("n_burn", "n_keep", "n_runs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.variance_cap > 0:
            raise ValueError("variance_cap must be > 0")
        if self.initial_proposal_scale < 0:
            raise ValueError("initial_proposal_scale must be >= 0")


DESK_CHAIN = ChainConfig(n_burn=500, n_keep=1500, n_runs=2)


@dataclass(frozen=True)
class PosteriorSummary:
    """Posterior means and standard deviations.

    ``mean`` averages the per-run posterior means; ``std_dev`` averages the
    within-run standard deviations. ``sigma`` and ``rho`` are transformed draw
    by draw from ``(psi, Omega)``. ``v0`` is the posterior mean of the latest
    latent variance and ``latent_mean`` the posterior mean of the whole
    latent path. ``draws`` holds every retained draw, runs concatenated.
    """

    kind: str
    mean: dict[str, float]
    std_dev: dict[str, float]
    v0: float | None
    n_runs: int
    n_keep: int
    acceptance_rate: float | None
    latent_mean: np.ndarray | None = field(repr=False, default=None)
    draws: dict[str, np.ndarray] = field(repr=False, default_factory=dict)

    def to_params(self) -> HestonParams | BatesParams:
        """Posterior means as model parameters.

        ``lambda`` passes through unchanged: the per-observation jump
        probability is used as the pricing intensity, as the reference
        parameter sets do. Divide by ``dt`` for a per-year rate.
        """
        m = self.mean
        h = HestonParams(
            kappa=m["kappa"], theta=m["theta"], sigma=m["sigma"], rho=m["rho"], v0=self.v0 or 0.0, r=m["r"]
        )
        if self.kind == "heston":
            return h
        return BatesParams(heston=h, jumps=JumpParams(lam=m["lambda"], a=m["a"], b2=m["b2"]))

    def rows(self) -> list[tuple[str, float, float]]:
        out = [(k, self.mean[k], self.std_dev[k]) for k in self.mean]
        if self.v0 is not None:
            out.append(("v0", self.v0, float("nan")))
        return out


# ---------------------------------------------------------------------------
# chain state and conditionals


@dataclass
class ChainState:
    r: float
    kappa: float
    theta: float
    psi: float
    omega: float
    lam: float
    a: float
    b2: float
    v: np.ndarray
    jump_on: np.ndarray
    jump_size: np.ndarray

    @property
    def sigma(self) -> float:
        return math.sqrt(self.omega + self.psi**2)

    @property
    def rho(self) -> float:
        return self.psi / self.sigma


def _positive_normal(mu: float, sd: float, rng: np.random.Generator) -> float:
    """Normal(mu, sd) truncated to (0, inf), by inverse CDF in log space."""
    log_mass = log_ndtr(mu / sd)
    z = -ndtri_exp(math.log(rng.uniform()) + log_mass)
    return max(mu + sd * float(z), np.finfo(float).tiny)


def _inv_gamma(shape: float, scale: float, rng: np.random.Generator) -> float:
    return scale / rng.standard_gamma(shape)


def _residuals(state: ChainState, y: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standardised return residuals e_t (all t) and variance residuals w_t (t < N)."""
    prev = state.v
    sd = np.sqrt(prev * dt)
    e = (y - state.r * dt + 0.5 * prev * dt - state.jump_size * state.jump_on) / sd
    w = (prev[1:] - prev[:-1] - state.kappa * (state.theta - prev[:-1]) * dt) / sd[:-1]
    return e, w, sd


def _term_loglik(
    v: np.ndarray, y: np.ndarray, dt: float, r: float, kappa: float, theta: float, psi: float, omega: float,
    jumps: np.ndarray,
) -> np.ndarray:
    """Log density per observation, up to constants; term t holds return t and transition t -> t+1."""
    log_x = np.log(v * dt)
    sd = np.exp(0.5 * log_x)
    e = (y - r * dt + 0.5 * v * dt - jumps) / sd
    out = -0.5 * log_x - 0.5 * e * e
    w = (v[1:] - v[:-1] - kappa * (theta - v[:-1]) * dt) / sd[:-1]
    out[:-1] += -0.5 * log_x[:-1] - 0.5 * (w - psi * e[:-1]) ** 2 / omega
    return out


def update_variance_path(
    state: ChainState, returns: np.ndarray, dt: float, proposal_scale: float, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """One single-site Metropolis-Hastings sweep over the latent variances.

    Each site gets a random-walk proposal on log V; even and odd sites are
    updated in two vectorised half-sweeps since a site only interacts with its
    neighbours. Rejected proposals keep the current value.

    Returns:
        The new variance path and the fraction of accepted proposals.
    """
    v = state.v.copy()
    n = v.size
    jumps = state.jump_size * state.jump_on
    args = (returns, dt, state.r, state.kappa, state.theta, state.psi, state.omega, jumps)
    accepted = 0
    for parity in (0, 1):
        sites = np.arange(parity, n, 2)
        step = proposal_scale * rng.standard_normal(sites.size)
        log_u = np.log(rng.uniform(size=sites.size))
        if proposal_scale == 0.0:
            accepted += sites.size
            continue
        prop = v.copy()
        prop[sites] = v[sites] * np.exp(step)
        d = _term_loglik(prop, *args) - _term_loglik(v, *args)
        # site j enters term j (own return and transition out) and term j-1 (transition in)
        local = d[sites].copy()
        has_prev = sites >= 1
        local[has_prev] += d[sites[has_prev] - 1]
        log_ratio = local + step  # Jacobian of the log-scale walk
        ok = np.isfinite(log_ratio) & (log_u < log_ratio)
        v[sites[ok]] = prop[sites[ok]]
        accepted += int(ok.sum())
    return v, accepted / n


def _update_jumps(state: ChainState, y: np.ndarray, dt: float, rng: np.random.Generator) -> None:
    v = state.v
    n = v.size
    x = v * dt
    base = y - state.r * dt + 0.5 * x  # return residual before jumps
    # weight of e_t and its target from the variance equation (zero when no transition)
    weight = np.ones(n)
    target = np.zeros(n)
    _, w, _ = _residuals(state, y, dt)
    weight[:-1] = (state.omega + state.psi**2) / state.omega
    target[:-1] = state.psi * w / (state.omega + state.psi**2)
    sd = np.sqrt(x)

    # indicator given the current size
    def quad(jump: np.ndarray) -> np.ndarray:
        e = (base - jump) / sd
        return -0.5 * weight * (e - target) ** 2

    log_odds = math.log(state.lam) - math.log1p(-state.lam) + quad(state.jump_size) - quad(np.zeros(n))
    p_on = 1.0 / (1.0 + np.exp(-np.clip(log_odds, -700, 700)))
    state.jump_on = rng.uniform(size=n) < p_on
    # size given the indicator; prior draw when off
    prec_lik = weight / x
    mean_lik = base - sd * target
    prec = np.where(state.jump_on, prec_lik, 0.0) + 1.0 / state.b2
    mean = (np.where(state.jump_on, prec_lik * mean_lik, 0.0) + state.a / state.b2) / prec
    state.jump_size = mean + rng.standard_normal(n) / np.sqrt(prec)


def _gibbs_parameters(
    state: ChainState, y: np.ndarray | None, dt: float, pri: PriorConfig, kind: str, rng: np.random.Generator
) -> None:
    if y is None:
        _draw_from_prior(state, pri, kind, rng)
        return
    v = state.v
    x = v * dt
    sd = np.sqrt(x)

    # (psi, Omega): regression of w on e
    e, w, _ = _residuals(state, y, dt)
    ee = e[:-1]
    n = ee.size
    prec = ee @ ee + pri.psi_precision
    psi_hat = (ee @ w) / prec
    ssr = max(w @ w - psi_hat**2 * prec, 0.0)
    shape, scale = pri.omega
    state.omega = _inv_gamma(shape + 0.5 * n, scale + 0.5 * ssr, rng)
    state.psi = psi_hat + math.sqrt(state.omega / prec) * rng.standard_normal()

    # r: e_t is linear in r; the variance equation pulls e_t toward psi w / (Omega + psi^2)
    om, ps = state.omega, state.psi
    weight = np.ones_like(v)
    weight[:-1] = (om + ps**2) / om
    target = np.zeros_like(v)
    target[:-1] = ps * w / (om + ps**2)
    c = (y + 0.5 * x - state.jump_size * state.jump_on) / sd - target
    g = dt / sd
    m0, s0 = pri.r
    prec_r = (weight * g * g).sum() + 1.0 / s0**2
    mean_r = ((weight * g * c).sum() + m0 / s0**2) / prec_r
    state.r = mean_r + rng.standard_normal() / math.sqrt(prec_r)

    # kappa, theta: z_t = dV / sd - psi e_t = kappa (theta - V) dt / sd + sqrt(Omega) u_t
    e, _, _ = _residuals(state, y, dt)
    z = (v[1:] - v[:-1]) / sd[:-1] - ps * e[:-1]
    gx = (state.theta - v[:-1]) * dt / sd[:-1]
    m0, s0 = pri.kappa
    prec_k = (gx @ gx) / om + 1.0 / s0**2
    state.kappa = _positive_normal(((gx @ z) / om + m0 / s0**2) / prec_k, 1.0 / math.sqrt(prec_k), rng)
    hx = state.kappa * dt / sd[:-1]
    zt = z + state.kappa * v[:-1] * dt / sd[:-1]
    m0, s0 = pri.theta
    prec_t = (hx @ hx) / om + 1.0 / s0**2
    state.theta = _positive_normal(((hx @ zt) / om + m0 / s0**2) / prec_t, 1.0 / math.sqrt(prec_t), rng)

    if kind == "bates":
        n_on = int(state.jump_on.sum())
        a0, b0 = pri.lam
        state.lam = rng.beta(a0 + n_on, b0 + v.size - n_on)
        sizes = state.jump_size[state.jump_on]
        m0, s0 = pri.a
        prec_a = n_on / state.b2 + 1.0 / s0**2
        state.a = (sizes.sum() / state.b2 + m0 / s0**2) / prec_a + rng.standard_normal() / math.sqrt(prec_a)
        shape, scale = pri.b2
        state.b2 = _inv_gamma(shape + 0.5 * n_on, scale + 0.5 * float(((sizes - state.a) ** 2).sum()), rng)


def _draw_from_prior(state: ChainState, pri: PriorConfig, kind: str, rng: np.random.Generator) -> None:
    state.omega = _inv_gamma(*pri.omega, rng)
    state.psi = math.sqrt(state.omega / pri.psi_precision) * rng.standard_normal()
    state.r = pri.r[0] + pri.r[1] * rng.standard_normal()
    state.kappa = _positive_normal(pri.kappa[0], pri.kappa[1], rng)
    state.theta = _positive_normal(pri.theta[0], pri.theta[1], rng)
    if kind == "bates":
        state.lam = rng.beta(*pri.lam)
        state.a = pri.a[0] + pri.a[1] * rng.standard_normal()
        state.b2 = _inv_gamma(*pri.b2, rng)


# ---------------------------------------------------------------------------
# driver


def _initial_state(y: np.ndarray | None, n: int, dt: float, kind: str, rng: np.random.Generator) -> ChainState:
    omega = 0.02
    if y is not None:
        # smoothed squared returns as a starting variance path
        sq = np.convolve(y * y / dt, np.ones(21) / 21.0, mode="same")
        v = np.clip(sq, 1e-4, 4.0)
    else:
        v = np.full(n, 0.0225)
    return ChainState(
        r=0.1,
        kappa=5.0,
        theta=0.0225,
        psi=math.sqrt(omega / 2.0) * rng.standard_normal(),
        omega=omega,
        lam=rng.beta(2.0, 40.0) if kind == "bates" else 0.0,
        a=0.0,
        b2=0.1,
        v=v,
        jump_on=np.zeros(n, dtype=bool),
        jump_size=np.zeros(n),
    )


def _record(state: ChainState, kind: str) -> dict[str, float]:
    rec = {
        "r": state.r,
        "kappa": state.kappa,
        "theta": state.theta,
        "sigma": state.sigma,
        "rho": state.rho,
        "psi": state.psi,
        "Omega": state.omega,
    }
    if kind == "bates":
        rec.update({"lambda": state.lam, "a": state.a, "b2": state.b2})
    return rec


def _run_chain(
    y: np.ndarray | None, kind: str, pri: PriorConfig, chain: ChainConfig, run: int
) -> tuple[dict[str, np.ndarray], np.ndarray | None, float | None, np.ndarray | None]:
    rng = np.random.default_rng(np.random.SeedSequence(chain.seed, spawn_key=(run,)))
    n = y.size if y is not None else 1
    state = _initial_state(y, n, chain.dt, kind, rng)
    names = BATES_PARAMS if kind == "bates" else HESTON_PARAMS
    draws = {k: np.empty(chain.n_keep) for k in names}
    last_v = np.empty(chain.n_keep) if y is not None else None
    path_sum = np.zeros(n) if y is not None else None
    scale = chain.initial_proposal_scale
    window_acc, window_n = 0.0, 0
    kept_acc = 0.0
    for it in range(chain.n_burn + chain.n_keep):
        if y is not None:
            state.v, acc = update_variance_path(state, y, chain.dt, scale, rng)
            if not np.all(state.v < chain.variance_cap):
                raise ChainDivergenceError(
                    f"chain divergence: latent variance above cap {chain.variance_cap} at iteration {it}"
                )
            if kind == "bates":
                _update_jumps(state, y, chain.dt, rng)
            if it < chain.n_burn:
                window_acc += acc
                window_n += 1
                if window_n == 50:
                    # steer the acceptance rate toward about 0.35
                    scale *= math.exp(window_acc / window_n - 0.35)
                    window_acc, window_n = 0.0, 0
            else:
                kept_acc += acc
        _gibbs_parameters(state, y, chain.dt, pri, kind, rng)
        if not all(math.isfinite(x) for x in (state.r, state.kappa, state.theta, state.psi, state.omega)):
            raise ChainDivergenceError(f"chain divergence: non-finite parameter at iteration {it}")
        if it >= chain.n_burn:
            i = it - chain.n_burn
            for k, val in _record(state, kind).items():
                draws[k][i] = val
            if last_v is not None:
                last_v[i] = state.v[-1]
                path_sum += state.v
    rate = kept_acc / chain.n_keep if y is not None else None
    latent = path_sum / chain.n_keep if path_sum is not None else None
    return draws, last_v, rate, latent


def run_mcmc(
    returns: np.ndarray | None,
    kind: str = "heston",
    priors: PriorConfig | None = None,
    chain: ChainConfig | None = None,
) -> PosteriorSummary:
    """Calibrate a Heston or Bates model to daily log returns.

    Args:
        returns: log returns, one per observation interval ``chain.dt``. Ignored
            when ``chain.prior_only`` is set (the likelihood is switched off).
        kind: ``"heston"`` or ``"bates"``.
        priors: prior hyperparameters.
        chain: chain lengths, number of independent runs, seed.

    Raises:
        InsufficientDataError: fewer than 100 finite returns.
        ChainDivergenceError: a latent variance exceeds the cap.
    """
    if kind not in ("heston", "bates"):
        raise ValueError(f"kind must be 'heston' or 'bates', got {kind!r}")
    priors = priors or PriorConfig()
    chain = chain or ChainConfig()
    y = None
    if not chain.prior_only:
        y = np.asarray(returns if returns is not None else [], dtype=float)
        if y.size < MIN_OBSERVATIONS:
            raise InsufficientDataError(f"insufficient data: {y.size} returns, need at least {MIN_OBSERVATIONS}")
        if not np.all(np.isfinite(y)):
            raise InsufficientDataError("insufficient data: returns contain non-finite values")

    runs = [_run_chain(y, kind, priors, chain, run) for run in range(chain.n_runs)]
    names = list(runs[0][0])
    mean = {k: float(np.mean([r[0][k].mean() for r in runs])) for k in names}
    std = {k: float(np.mean([r[0][k].std(ddof=1) if chain.n_keep > 1 else 0.0 for r in runs])) for k in names}
    draws = {k: np.concatenate([r[0][k] for r in runs]) for k in names}
    v0 = float(np.mean([r[1].mean() for r in runs])) if y is not None else None
    rate = float(np.mean([r[2] for r in runs])) if y is not None else None
    latent = np.mean([r[3] for r in runs], axis=0) if y is not None else None
    return PosteriorSummary(kind, mean, std, v0, chain.n_runs, chain.n_keep, rate, latent, draws)


def simulate_returns(
    p: HestonParams | BatesParams, n_obs: int, dt: float = 1.0 / 252.0, seed: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic daily log returns from the same Euler discretisation.

    Returns:
        ``(returns, variances)`` where ``variances[t]`` drives ``returns[t]``.
    """
    h, j = (p.heston, p.jumps) if isinstance(p, BatesParams) else (p, None)
    rng = np.random.default_rng(seed)
    v = np.empty(n_obs)
    y = np.empty(n_obs)
    cur = h.v0
    rho_bar = math.sqrt(1.0 - h.rho**2)
    for t in range(n_obs):
        v[t] = cur
        e, u = rng.standard_normal(2)
        sd = math.sqrt(max(cur, 0.0) * dt)
        jump = 0.0
        if j is not None and rng.uniform() < j.lam * dt:
            jump = j.a + math.sqrt(j.b2) * rng.standard_normal()
        y[t] = h.r * dt - 0.5 * cur * dt + sd * e + jump
        nxt = cur + h.kappa * (h.theta - cur) * dt + h.sigma * sd * (h.rho * e + rho_bar * u)
        cur = max(nxt, 1e-8)
    return y, v


__all__ = [
    "BATES_PARAMS",
    "CalibrationError",
    "ChainConfig",
    "ChainDivergenceError",
    "ChainState",
    "DESK_CHAIN",
    "HESTON_PARAMS",
    "InsufficientDataError",
    "PosteriorSummary",
    "PriorConfig",
    "run_mcmc",
    "simulate_returns",
    "update_variance_path",
]

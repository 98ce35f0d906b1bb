"""Path simulation for the IG-OU variance process.

Jumps of the subordinator smaller than ``eps_trunc`` are discarded and, when
``small_jump_drift`` is on, replaced by their mean rate as a deterministic
drift.  The remaining jumps form a compound Poisson process whose sizes are
drawn from precomputed inverse-CDF tables.  Between grid points the variance
is advanced with the exact solution of the OU equation, so grid values carry
no time-discretisation error.

Two measures are supported.  Under P the jumps are a Levy process with
measure nu.  Under the minimal martingale measure the jump intensity becomes
``(1 + c_t (1 - e^{rho x})) nu(dx)`` with ``c_t = alpha / (sigma_t^2 + C^rho)``;
the coefficient is frozen at the left grid point of each step and the
state-dependent intensity is realised by thinning.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .model import (BnsParams, c_rho, kappa_tail, small_jump_mean, tail_mass, tilted_small_mean)

TAIL_CUTOFF = 1e-12


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 1000
    dt: float = 0.01
    eps_trunc: float = 1e-4
    small_jump_drift: bool = True
    quad_nodes: int = 200
    seed: int = 0
    inv_cdf_table_size: int = 4096
    control_variate: bool = True     # use S_T (known mean S0 under P*) as a control in price estimates

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.eps_trunc > 0:
            raise ValueError("eps_trunc must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def replace(self, **changes) -> "SimConfig":
        d = self.__dict__.copy()
        d.update(changes)
        return SimConfig(**d)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based (Philox) generator for the substream keyed by ``(seed, *stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def time_grid(maturity: float, dt: float) -> np.ndarray:
    """0, dt, 2dt, ..., T with the last step shortened to end exactly on T."""
    n = max(1, math.ceil(maturity / dt - 1e-9))
    grid = np.arange(n + 1, dtype=float) * dt
    grid[-1] = maturity
    return grid


@dataclass(frozen=True)
class JumpList:
    times: np.ndarray
    sizes: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


class TailSampler:
    """Inverse-CDF sampler on (eps, inf) from a closed-form survival function.

    ``neg_log_survival(x)`` must be increasing with value 0 at eps.  Log x is
    interpolated against -log S with a monotone cubic on log-spaced nodes that
    stop where the survival drops below 1e-12.
    """

    def __init__(self, eps: float, neg_log_survival, table_size: int = 4096):
        if table_size < 16:
            raise ValueError("table_size must be >= 16")
        self.eps = eps
        self.neg_log_survival = neg_log_survival
        self.x_max = self._find_x_max()
        x = np.geomspace(eps, self.x_max, table_size)
        x[0], x[-1] = eps, self.x_max
        self.nodes = x
        t = neg_log_survival(x)
        t[0] = 0.0
        self.t_max = t[-1]
        self._interp = PchipInterpolator(t, np.log(x))

    def _find_x_max(self) -> float:
        target = -math.log(TAIL_CUTOFF)
        hi = 2.0 * self.eps
        while self.neg_log_survival(np.array([hi]))[0] < target:
            hi *= 2.0
        lo = self.eps
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.neg_log_survival(np.array([mid]))[0] < target:
                lo = mid
            else:
                hi = mid
        return hi

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), self.eps)
        return -np.expm1(-self.neg_log_survival(x))

    def inverse(self, u):
        """Jump size whose survival probability is ``u`` in (0, 1]."""
        t = np.minimum(-np.log(u), self.t_max)
        return np.exp(self._interp(t))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # 1 - random() lies in (0, 1]
        return self.inverse(1.0 - rng.random(size))


@functools.lru_cache(maxsize=64)
def _base_sampler(eps: float, b: float, table_size: int) -> TailSampler:
    c = 0.5 * b * b
    # survival of nu restricted to (eps, inf): sqrt(eps/x) exp(-c (x - eps))
    return TailSampler(eps, lambda x: 0.5 * np.log(x / eps) + c * (x - eps), table_size)


@functools.lru_cache(maxsize=64)
def _tilted_sampler(eps: float, p: BnsParams, table_size: int) -> TailSampler:
    # law proportional to (1 - e^{rho x}) nu(dx); its tail is -kappa_tail(x)
    log0 = math.log(-kappa_tail(eps, p))
    return TailSampler(eps, lambda x: log0 - np.log(-kappa_tail(x, p)), table_size)


def build_jump_sampler(eps: float, p: BnsParams, table_size: int = 4096) -> TailSampler:
    """Sampler for nu restricted to (eps, inf), normalised; depends on (eps, b) only."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    if table_size < 16:
        raise ValueError("table_size must be >= 16")
    return _base_sampler(float(eps), float(p.b), int(table_size))


def build_tilted_sampler(eps: float, p: BnsParams, table_size: int = 4096) -> TailSampler:
    """Sampler for (1 - e^{rho x}) nu(dx) restricted to (eps, inf), normalised."""
    if p.rho == 0:
        raise ValueError("tilted law is degenerate for rho = 0")
    key = BnsParams(1.0, 0.0, p.rho, 1.0, 1.0, p.b, 1.0)
    return _tilted_sampler(float(eps), key, int(table_size))


def draw_jumps(p: BnsParams, maturity: float, cfg: SimConfig, rng: np.random.Generator,
               sampler: TailSampler | None = None) -> JumpList:
    """Jumps of the truncated subordinator on [0, T] under P, sorted by time."""
    sampler = sampler or build_jump_sampler(cfg.eps_trunc, p, cfg.inv_cdf_table_size)
    n = rng.poisson(tail_mass(cfg.eps_trunc, p) * maturity)
    times = rng.uniform(0.0, maturity, n)
    sizes = sampler.sample(rng, n)
    order = np.argsort(times, kind="stable")
    return JumpList(times[order], sizes[order])


def small_jump_rate(p: BnsParams, cfg: SimConfig) -> float:
    return small_jump_mean(cfg.eps_trunc, p) if cfg.small_jump_drift else 0.0


def simulate_variance_path(p: BnsParams, maturity: float, jumps: JumpList, cfg: SimConfig):
    """Variance on the time grid by direct evaluation of the explicit OU solution.

    Returns ``(grid, sigma_sq)``.
    """
    grid = time_grid(maturity, cfg.dt)
    sig = np.exp(-p.lam * grid) * p.sigma0_sq
    drift = small_jump_rate(p, cfg)
    if drift:
        sig = sig + drift / p.lam * -np.expm1(-p.lam * grid)
    if len(jumps):
        lag = grid[:, None] - jumps.times[None, :]
        contrib = np.where(lag >= 0, jumps.sizes[None, :] * np.exp(-p.lam * np.maximum(lag, 0.0)), 0.0)
        sig = sig + contrib.sum(axis=1)
    return grid, sig


@dataclass
class PathBatch:
    """Variance paths for many paths at once plus the accepted jumps that built them.

    ``jump_path``/``jump_step`` locate each jump: step k covers (t_k, t_{k+1}].
    """
    grid: np.ndarray
    sigma_sq: np.ndarray           # (n_paths, n_steps + 1)
    jump_path: np.ndarray
    jump_step: np.ndarray
    jump_time: np.ndarray
    jump_size: np.ndarray
    jump_sum: np.ndarray = field(repr=False)  # (n_paths,) summed accepted jump sizes

    @property
    def n_paths(self) -> int:
        return self.sigma_sq.shape[0]


@dataclass
class _Candidates:
    path: np.ndarray
    step: np.ndarray
    time: np.ndarray
    size: np.ndarray
    decayed: np.ndarray
    u: np.ndarray
    bounds: np.ndarray  # slice boundaries per step


def _candidates(rate: float, sampler: TailSampler, p: BnsParams, grid: np.ndarray,
                n_paths: int, rng: np.random.Generator, with_uniforms: bool) -> _Candidates:
    maturity = grid[-1]
    n_steps = len(grid) - 1
    counts = rng.poisson(rate * maturity, n_paths)
    total = int(counts.sum())
    times = rng.uniform(0.0, maturity, total)
    sizes = sampler.sample(rng, total)
    u = rng.random(total) if with_uniforms else np.empty(0)
    path = np.repeat(np.arange(n_paths), counts)
    step = np.clip(np.searchsorted(grid, times, side="left") - 1, 0, n_steps - 1)
    order = np.lexsort((times, path, step))
    path, step, times, sizes = path[order], step[order], times[order], sizes[order]
    if with_uniforms:
        u = u[order]
    decayed = sizes * np.exp(-p.lam * (grid[step + 1] - times))
    bounds = np.searchsorted(step, np.arange(n_steps + 1), side="left")
    return _Candidates(path, step, times, sizes, decayed, u, bounds)


def simulate_variance_batch(p: BnsParams, maturity: float, cfg: SimConfig, rng: np.random.Generator,
                            n_paths: int | None = None, measure: str = "P") -> PathBatch:
    """Simulate variance paths by the exact one-step OU recursion.

    ``measure="P"`` draws the Levy jumps of nu; ``measure="MMM"`` adds (alpha > 0)
    or thins (alpha < 0) jumps so that their intensity is (1 - theta) nu with
    theta frozen at the start of each step.
    """
    if measure not in ("P", "MMM"):
        raise ValueError(f"unknown measure {measure!r}")
    n_paths = cfg.n_paths if n_paths is None else n_paths
    grid = time_grid(maturity, cfg.dt)
    n_steps = len(grid) - 1
    eps = cfg.eps_trunc
    tilt = measure == "MMM" and p.alpha != 0 and p.rho != 0

    base = _candidates(tail_mass(eps, p), build_jump_sampler(eps, p, cfg.inv_cdf_table_size),
                       p, grid, n_paths, rng, with_uniforms=tilt and p.alpha < 0)
    extra = None
    crho = c_rho(p)
    if tilt and p.alpha > 0:
        # sigma_t^2 >= e^{-lambda T} sigma_0^2, so c_t never exceeds c_max
        c_max = p.alpha / (math.exp(-p.lam * maturity) * p.sigma0_sq + crho)
        extra = _candidates(c_max * -kappa_tail(eps, p),
                            build_tilted_sampler(eps, p, cfg.inv_cdf_table_size),
                            p, grid, n_paths, rng, with_uniforms=True)
    h_base = -np.expm1(p.rho * base.size) if tilt and p.alpha < 0 else None

    dts = np.diff(grid)
    decay = np.exp(-p.lam * dts)
    ramp = -np.expm1(-p.lam * dts) / p.lam
    mu_eps = small_jump_rate(p, cfg)
    mu_tilt = tilted_small_mean(eps, p) if (tilt and cfg.small_jump_drift) else 0.0

    sig = np.empty((n_paths, n_steps + 1))
    sig[:, 0] = p.sigma0_sq
    keep_base = np.ones(base.size.size, dtype=bool)
    keep_extra = np.zeros(0 if extra is None else extra.size.size, dtype=bool)
    for k in range(n_steps):
        s_k = sig[:, k]
        nxt = decay[k] * s_k + mu_eps * ramp[k]
        lo, hi = base.bounds[k], base.bounds[k + 1]
        if h_base is not None:
            c_k = p.alpha / (s_k + crho)
            acc = base.u[lo:hi] < 1.0 + c_k[base.path[lo:hi]] * h_base[lo:hi]
            keep_base[lo:hi] = acc
            nxt += np.bincount(base.path[lo:hi][acc], weights=base.decayed[lo:hi][acc], minlength=n_paths)
        elif hi > lo:
            nxt += np.bincount(base.path[lo:hi], weights=base.decayed[lo:hi], minlength=n_paths)
        if extra is not None:
            c_k = p.alpha / (s_k + crho)
            if mu_tilt:
                nxt += c_k * mu_tilt * ramp[k]
            lo, hi = extra.bounds[k], extra.bounds[k + 1]
            if hi > lo:
                acc = extra.u[lo:hi] * c_max < c_k[extra.path[lo:hi]]
                keep_extra[lo:hi] = acc
                nxt += np.bincount(extra.path[lo:hi][acc], weights=extra.decayed[lo:hi][acc],
                                   minlength=n_paths)
        elif mu_tilt:
            nxt += p.alpha / (s_k + crho) * mu_tilt * ramp[k]
        sig[:, k + 1] = nxt

    parts = [(base, keep_base)] + ([(extra, keep_extra)] if extra is not None else [])
    path = np.concatenate([c.path[m] for c, m in parts])
    step = np.concatenate([c.step[m] for c, m in parts])
    time = np.concatenate([c.time[m] for c, m in parts])
    size = np.concatenate([c.size[m] for c, m in parts])
    order = np.lexsort((time, path))
    path, step, time, size = path[order], step[order], time[order], size[order]
    jump_sum = np.bincount(path, weights=size, minlength=n_paths)
    return PathBatch(grid, sig, path, step, time, size, jump_sum)

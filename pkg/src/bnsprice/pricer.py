"""Monte Carlo call prices under the minimal martingale measure (MMM).

Two estimators of E_{P*}[(S_T - K)^+] share one time grid, on which sigma^2 is
exact and u, theta are frozen at the left end of each step:

``method="mmm"`` (default)
    Simulate directly under P*: W* = W + int u dt is a Brownian motion and the
    jumps have intensity (1 - theta) nu.  Every weight is 1.

``method="weighted"``
    Simulate under P and weight each path by Z_T = dP*/dP,

        log Z = -sum u dW - 1/2 sum u^2 dt + sum_jumps log(1 - theta)
                + sum dt * int_eps^inf theta dnu,

    the last two terms being the compensated jump integral and the
    (log(1 - theta) + theta) compensator combined.  Unbiased, but the weights are
    lognormal-like with log-variance about int u^2 dt, which is large for the
    parameter ranges of interest; useful only as a cross-check at small alpha.

Jumps below ``eps_trunc`` enter the log-price drift through their mean effect
on S under the measure being simulated.  The scheme keeps E*[S_T] = S0 exactly,
so S_T (times Z_T on the weighted route) serves as a control variate when
``cfg.control_variate`` is set.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (AdmissibilityError, BnsParams, OptionSpec, c_rho, c_rho_small, kappa_bar,
                    kappa_tail, levy_density, require_admissible)
from .simulation import SimConfig, build_jump_sampler, make_rng, simulate_variance_batch

log = logging.getLogger(__name__)

LOG_CLAMP = 700.0
METHODS = ("mmm", "weighted")


@dataclass(frozen=True)
class PriceEstimate:
    price: float
    std_err: float
    n_paths: int
    mean_weight: float
    weight_std_err: float = 0.0
    clamped_paths: int = 0
    config_echo: dict = field(default_factory=dict, compare=False)


@dataclass
class TerminalPaths:
    """Terminal log price and log density per path."""
    log_s: np.ndarray
    log_z: np.ndarray
    clamped: int = 0

    @property
    def s_t(self) -> np.ndarray:
        return np.exp(self.log_s)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_z)


def weighted_mean_se(weights, payoffs) -> tuple[float, float]:
    """Mean of weight*payoff and its standard error."""
    w = np.asarray(weights, dtype=float)
    h = np.asarray(payoffs, dtype=float)
    if w.shape != h.shape:
        raise ValueError("weights and payoffs differ in length")
    if w.size < 2:
        raise ValueError("need at least two samples")
    prod = w * h
    return float(np.sum(prod) / prod.size), float(np.std(prod, ddof=1) / math.sqrt(prod.size))


def control_variate_mean_se(y, x, x_mean: float) -> tuple[float, float]:
    """Mean of y corrected by the control x with known mean, using the fitted slope."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.size < 2:
        raise ValueError("need at least two samples")
    xc = x - x.mean()
    sxx = xc @ xc
    beta = (xc @ (y - y.mean())) / sxx if sxx > 0 else 0.0
    resid = y - beta * (x - x_mean)
    return float(resid.mean()), float(resid.std(ddof=1) / math.sqrt(y.size))


@dataclass(frozen=True)
class QuadState:
    """Fixed Gauss-Legendre nodes in log x on (eps, x_max] with cached nu and e^{rho x} - 1."""
    nodes: np.ndarray
    weights: np.ndarray
    nu: np.ndarray
    g: np.ndarray


def build_quad_state(p: BnsParams, eps: float, x_max: float | None = None, n_nodes: int = 200) -> QuadState:
    if x_max is None:
        x_max = build_jump_sampler(eps, p).x_max
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    lo, hi = math.log(eps), math.log(x_max)
    x = np.exp(0.5 * (hi - lo) * t + 0.5 * (hi + lo))
    return QuadState(x, 0.5 * (hi - lo) * w * x, levy_density(x, p), np.expm1(p.rho * x))


def quad_compensator(sigma_sq, alpha: float, crho: float, quad: QuadState):
    """Integral of (log(1 - theta) + theta) against nu over the quadrature range; <= 0."""
    c = alpha / (np.asarray(sigma_sq, dtype=float)[..., None] + crho)
    y = c * quad.g
    if np.any(y >= 1.0):
        raise AdmissibilityError("1 - theta <= 0 inside the compensator")
    out = np.sum(quad.weights * quad.nu * (np.log1p(-y) + y), axis=-1)
    return out[()] if np.ndim(out) == 0 else out


def quad_log_jump_compensator(sigma_sq, alpha: float, crho: float, quad: QuadState):
    """Integral of log(1 - theta) against nu over the quadrature range."""
    c = alpha / (np.asarray(sigma_sq, dtype=float)[..., None] + crho)
    out = np.sum(quad.weights * quad.nu * np.log1p(-c * quad.g), axis=-1)
    return out[()] if np.ndim(out) == 0 else out


def simulate_terminal(p: BnsParams, maturity: float, cfg: SimConfig, rng: np.random.Generator,
                      n_paths: int | None = None, method: str = "mmm") -> TerminalPaths:
    """Terminal log S_T (and log Z_T for the weighted route) for a batch of paths."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    batch = simulate_variance_batch(p, maturity, cfg, rng, n_paths,
                                    measure="MMM" if method == "mmm" else "P")
    n = batch.n_paths
    dts = np.diff(batch.grid)
    dw = rng.standard_normal((n, len(dts))) * np.sqrt(dts)

    crho = c_rho(p)
    sig2 = batch.sigma_sq[:, :-1]
    sig = np.sqrt(sig2)
    coef = p.alpha / (sig2 + crho)       # theta = coef * (e^{rho x} - 1), u = coef * sigma
    u = coef * sig
    eps = cfg.eps_trunc
    ktail = kappa_tail(eps, p)

    if method == "mmm":
        if cfg.small_jump_drift:
            drift = p.alpha - ktail - coef * c_rho_small(eps, p)
        else:
            drift = p.alpha - kappa_bar(p)
        log_s = np.sum((drift - 0.5 * sig2 - u * sig) * dts + sig * dw, axis=1)
        log_s += math.log(p.s0) + p.rho * batch.jump_sum
        return TerminalPaths(log_s, np.zeros(n))

    drift = p.alpha - (ktail if cfg.small_jump_drift else kappa_bar(p))
    log_s = np.sum((drift - 0.5 * sig2) * dts + sig * dw, axis=1)
    log_s += math.log(p.s0) + p.rho * batch.jump_sum

    log_z = np.sum(-u * dw - 0.5 * u * u * dts + coef * ktail * dts, axis=1)
    if batch.jump_size.size:
        theta = coef[batch.jump_path, batch.jump_step] * np.expm1(p.rho * batch.jump_size)
        bad = theta >= 1.0
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise AdmissibilityError(
                f"1 - theta <= 0 on path {int(batch.jump_path[i])} (theta={theta[i]:.6g})")
        log_z += np.bincount(batch.jump_path, weights=np.log1p(-theta), minlength=n)

    clamped = int(np.count_nonzero(np.abs(log_z) > LOG_CLAMP))
    if clamped:
        log.warning("%d paths had |log Z| > %g and were clamped", clamped, LOG_CLAMP)
        log_z = np.clip(log_z, -LOG_CLAMP, LOG_CLAMP)
    return TerminalPaths(log_s, log_z, clamped)


def price_strikes(p: BnsParams, maturity: float, strikes, cfg: SimConfig,
                  rng: np.random.Generator | None = None, method: str = "mmm") -> list[PriceEstimate]:
    """Prices for several strikes from one common set of paths."""
    require_admissible(p, maturity)
    rng = rng if rng is not None else make_rng(cfg.seed)
    paths = simulate_terminal(p, maturity, cfg, rng, method=method)
    w = paths.weights
    s_t = paths.s_t
    mean_w, w_se = weighted_mean_se(w, np.ones_like(w))
    echo = dict(cfg.__dict__, method=method)
    out = []
    for k in np.atleast_1d(np.asarray(strikes, dtype=float)):
        payoff = np.maximum(s_t - k, 0.0)
        if cfg.control_variate:
            price, se = control_variate_mean_se(w * payoff, w * s_t, p.s0)
        else:
            price, se = weighted_mean_se(w, payoff)
        out.append(PriceEstimate(price, se, w.size, mean_w, w_se, paths.clamped, echo))
    return out


def price_call_mc(p: BnsParams, opt: OptionSpec, cfg: SimConfig,
                  rng: np.random.Generator | None = None, method: str = "mmm") -> PriceEstimate:
    """E_{P*}[(S_T - K)^+] for one strike."""
    return price_strikes(p, opt.maturity, [opt.strike], cfg, rng, method)[0]

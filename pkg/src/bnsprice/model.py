"""IG-OU Barndorff-Nielsen--Shephard model: parameters, Levy measure, admissibility.

The variance driver is a driftless subordinator ``H_{lambda t}`` whose Levy
measure (already including the time change by ``lambda``) is

    nu(dx) = lambda * a / (2 sqrt(2 pi)) * x**(-3/2) * (1 + b**2 x) * exp(-b**2 x / 2) dx.

All the integrals of ``nu`` needed by the pricer have closed forms; they are
collected here together with the minimal-martingale-measure coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special


class AdmissibilityError(ValueError):
    """Raised when parameters (or a simulated path) violate the MMM positivity conditions."""


@dataclass(frozen=True)
class BnsParams:
    s0: float
    alpha: float
    rho: float
    lam: float
    a: float
    b: float
    sigma0_sq: float

    def __post_init__(self):
        for name in ("s0", "lam", "a", "b", "sigma0_sq"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if not (math.isfinite(self.rho) and self.rho <= 0):
            raise ValueError(f"rho must be <= 0, got {self.rho!r}")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        assert self.b**2 - 4 * self.rho > 0

    def replace(self, **changes) -> "BnsParams":
        d = self.__dict__.copy()
        d.update(changes)
        return BnsParams(**d)


@dataclass(frozen=True)
class OptionSpec:
    strike: float
    maturity: float

    def __post_init__(self):
        if not self.strike > 0:
            raise ValueError(f"strike must be > 0, got {self.strike!r}")
        if not self.maturity > 0:
            raise ValueError(f"maturity must be > 0, got {self.maturity!r}")


@dataclass(frozen=True)
class AdmissibilityReport:
    cond1_lhs: float
    cond1_rhs: float
    cond2_lhs: float
    passed: bool

    def __str__(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}: cond1 b^2/2={self.cond1_lhs:.6g} > {self.cond1_rhs:.6g}; "
                f"cond2 alpha/(e^(-lambda T) sigma0^2 + C)={self.cond2_lhs:.6g} > -1")


def _scale(p: BnsParams) -> float:
    # prefactor of nu: lambda a / (2 sqrt(2 pi))
    return p.lam * p.a / (2.0 * math.sqrt(2.0 * math.pi))


def levy_density(x, p: BnsParams):
    """Density of the IG-OU Levy measure at jump size ``x > 0`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("levy_density is defined for x > 0 only")
    out = _scale(p) * x**-1.5 * (1.0 + p.b**2 * x) * np.exp(-0.5 * p.b**2 * x)
    return out[()] if out.ndim == 0 else out


def c_rho(p: BnsParams) -> float:
    """Closed form of the integral of (e^{rho x} - 1)^2 against nu."""
    if p.rho == 0:
        return 0.0
    b2 = p.b**2
    return 2.0 * p.rho * p.lam * p.a * (1.0 / math.sqrt(b2 - 4.0 * p.rho) - 1.0 / math.sqrt(b2 - 2.0 * p.rho))


def kappa_bar(p: BnsParams) -> float:
    """Integral of (e^{rho x} - 1) against nu, i.e. lambda a rho / sqrt(b^2 - 2 rho)."""
    return p.lam * p.a * p.rho / math.sqrt(p.b**2 - 2.0 * p.rho)


def mu_from_alpha(p: BnsParams) -> float:
    """Log-price drift parameter mu such that alpha = mu + kappa_bar."""
    return p.alpha - kappa_bar(p)


def tail_mass(eps: float, p: BnsParams) -> float:
    """Total mass of nu on (eps, inf).

    The two erfc pieces of the integral cancel exactly (b^2 sqrt(pi/c) = 2 sqrt(pi c)
    with c = b^2/2), leaving 2 K eps^{-1/2} e^{-c eps}.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    c = 0.5 * p.b**2
    return 2.0 * _scale(p) * math.exp(-c * eps) / math.sqrt(eps)


def small_jump_mean(eps: float, p: BnsParams) -> float:
    """Integral of x against nu over (0, eps]: the mean rate of the discarded jumps."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    c = 0.5 * p.b**2
    y = math.sqrt(c * eps)
    return _scale(p) * (2.0 * math.sqrt(math.pi / c) * math.erf(y) - 2.0 * math.sqrt(eps) * math.exp(-c * eps))


def kappa_tail(eps, p: BnsParams):
    """Integral of (e^{rho x} - 1) against nu over (eps, inf); accepts arrays."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("eps must be > 0")
    if p.rho == 0:
        out = np.zeros_like(eps)
    else:
        c = 0.5 * p.b**2
        cr = c - p.rho
        first = 2.0 * np.exp(-c * eps) * np.expm1(p.rho * eps) / np.sqrt(eps)
        second = 2.0 * p.rho * math.sqrt(math.pi / cr) * np.exp(-cr * eps) * special.erfcx(np.sqrt(cr * eps))
        out = _scale(p) * (first + second)
    return float(out) if out.ndim == 0 else out


_GL_S, _GL_W = np.polynomial.legendre.leggauss(48)


def small_jump_integral(f, eps: float, p: BnsParams) -> float:
    """Integral of f(x) nu(dx) over (0, eps] for f vanishing at least like x near 0.

    Substituting x = s^2 removes the x^{-3/2} singularity; Gauss-Legendre on
    (0, sqrt(eps)) is then accurate to rounding for the smooth integrands used here.
    """
    h = math.sqrt(eps)
    s = 0.5 * h * (_GL_S + 1.0)
    x = s * s
    dens = 2.0 * _scale(p) * (1.0 + p.b**2 * x) * np.exp(-0.5 * p.b**2 * x) / s**2
    return float(0.5 * h * np.sum(_GL_W * f(x) * dens))


def c_rho_small(eps: float, p: BnsParams) -> float:
    """Part of C^rho carried by jumps in (0, eps]."""
    return small_jump_integral(lambda x: np.expm1(p.rho * x) ** 2, eps, p)


def tilted_small_mean(eps: float, p: BnsParams) -> float:
    """Integral of x (1 - e^{rho x}) against nu over (0, eps]."""
    return small_jump_integral(lambda x: -x * np.expm1(p.rho * x), eps, p)


def check_assumption(p: BnsParams, maturity: float) -> AdmissibilityReport:
    """Evaluate both positivity conditions that make the MMM a probability measure."""
    if not maturity > 0:
        raise ValueError("maturity must be > 0")
    decay = math.exp(-p.lam * maturity)
    lhs1 = 0.5 * p.b**2
    rhs1 = 2.0 * max(-math.expm1(-p.lam * maturity) / p.lam, abs(p.rho))
    lhs2 = p.alpha / (decay * p.sigma0_sq + c_rho(p))
    return AdmissibilityReport(lhs1, rhs1, lhs2, bool(lhs1 > rhs1 and lhs2 > -1.0))


def require_admissible(p: BnsParams, maturity: float) -> AdmissibilityReport:
    rep = check_assumption(p, maturity)
    if not rep.passed:
        raise AdmissibilityError(str(rep))
    return rep


def mmm_u(sigma_sq, alpha: float, crho: float):
    """Brownian market price of risk alpha sigma / (sigma^2 + C)."""
    sigma_sq = np.asarray(sigma_sq, dtype=float)
    out = alpha * np.sqrt(sigma_sq) / (sigma_sq + crho)
    return out[()] if out.ndim == 0 else out


def mmm_theta(sigma_sq, alpha: float, crho: float, x, rho: float, *, check: bool = True):
    """Jump density coefficient alpha (e^{rho x} - 1) / (sigma^2 + C).

    Raises AdmissibilityError when some value reaches 1, since 1 - theta must stay
    positive for the density to be defined.
    """
    g = np.expm1(rho * np.asarray(x, dtype=float))
    out = alpha * g / (np.asarray(sigma_sq, dtype=float) + crho)
    if check and np.any(out >= 1.0):
        raise AdmissibilityError("1 - theta <= 0: density positivity violated")
    return out[()] if np.ndim(out) == 0 else out

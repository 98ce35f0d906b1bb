"""Zero-rate Black-Scholes call, used as an auxiliary network input."""
from __future__ import annotations

import math

import numpy as np
from scipy import special


def norm_cdf(x):
    """Standard normal CDF via erfc (accurate in both tails)."""
    out = 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return out[()] if np.ndim(out) == 0 else out


def bs_call(s0, sigma, strike, maturity):
    """Call price S0 Phi(d+) - K Phi(d-) with zero interest rate.

    Broadcasts over array arguments.
    """
    s0, sigma, strike, maturity = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                                         for v in (s0, sigma, strike, maturity)))
    if np.any(s0 <= 0) or np.any(sigma <= 0) or np.any(strike <= 0) or np.any(maturity <= 0):
        raise ValueError("bs_call inputs must all be positive")
    vol = sigma * np.sqrt(maturity)
    d_plus = np.log(s0 / strike) / vol + 0.5 * vol
    out = s0 * norm_cdf(d_plus) - strike * norm_cdf(d_plus - vol)
    # rounding can push deep in/out-of-the-money values just past the no-arbitrage bounds
    out = np.clip(out, np.maximum(s0 - strike, 0.0), s0)
    return out[()] if out.ndim == 0 else out

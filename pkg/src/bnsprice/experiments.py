"""Strike sweeps comparing the surrogate against Monte Carlo on fixed parameter sets."""
from __future__ import annotations

import io
import math
from dataclasses import astuple, dataclass

import numpy as np

from .dataset import ANCHOR, bs_feature
from .model import BnsParams, require_admissible
from .network import MlpModel, predict
from .pricer import price_strikes
from .simulation import SimConfig, make_rng

S0 = ANCHOR.s0

# (alpha, rho, lambda, a, b, sigma0^2, T)
VARIABLE_SETS = {
    "a": (0.49867, -4.71919, 1.41919, 0.10997, 16.96651, 0.00386, 0.31475),
    "b": (0.23797, -4.69071, 3.23799, 0.10078, 15.63037, 0.00523, 0.97049),
    "c": (1.17240, -6.72677, 3.16246, 0.10582, 15.79102, 0.00581, 0.65818),
}

SWEEP_HEADER = ("strike", "payoff", "mc_price", "mc_se", "dl_price", "difference", "relative_error")


def variable_set(name: str, s0: float = S0) -> tuple[BnsParams, float]:
    try:
        *v, maturity = VARIABLE_SETS[name]
    except KeyError:
        raise ValueError(f"unknown variable set {name!r}; choose from {sorted(VARIABLE_SETS)}") from None
    return BnsParams(s0, *v), maturity


def strike_grid(s0: float = S0) -> np.ndarray:
    """S0/2 to 3 S0/2 in steps of S0/100 (101 strikes)."""
    return s0 * np.arange(50, 151) / 100.0


def surrogate_inputs(p: BnsParams, maturity: float, strikes) -> np.ndarray:
    k = np.asarray(strikes, dtype=float)
    cols = [np.full_like(k, v) for v in (p.alpha, p.rho, p.lam, p.a, p.b, p.sigma0_sq)]
    cols += [k, np.full_like(k, maturity), bs_feature(p.sigma0_sq, k, maturity, p.s0)]
    return np.column_stack(cols)


def surrogate_prices(model: MlpModel, p: BnsParams, maturity: float, strikes) -> np.ndarray:
    return predict(model, surrogate_inputs(p, maturity, strikes))


@dataclass(frozen=True)
class SweepRow:
    strike: float
    payoff: float
    mc_price: float
    mc_se: float
    dl_price: float
    difference: float
    relative_error: float


def relative_error(dl, mc, strike):
    """(dl - mc) / max(mc, K/100)."""
    return (np.asarray(dl) - np.asarray(mc)) / np.maximum(mc, np.asarray(strike) / 100.0)


def sweep(p: BnsParams, maturity: float, model: MlpModel | None, cfg: SimConfig,
          strikes=None) -> list[SweepRow]:
    """MC (common random numbers across strikes) and surrogate prices along a strike grid.

    With ``model=None`` the surrogate column is 0.
    """
    require_admissible(p, maturity)
    strikes = strike_grid(p.s0) if strikes is None else np.asarray(strikes, dtype=float)
    est = price_strikes(p, maturity, strikes, cfg, make_rng(cfg.seed, 2))
    mc = np.array([e.price for e in est])
    se = np.array([e.std_err for e in est])
    dl = surrogate_prices(model, p, maturity, strikes) if model is not None else np.zeros_like(mc)
    diff = dl - mc
    rel = relative_error(dl, mc, strikes)
    payoff = np.maximum(p.s0 - strikes, 0.0)
    return [SweepRow(*map(float, r)) for r in zip(strikes, payoff, mc, se, dl, diff, rel)]


def sweep_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    buf.write(",".join(SWEEP_HEADER) + "\n")
    for r in rows:
        buf.write(",".join(format(v, ".17g") for v in astuple(r)) + "\n")
    return buf.getvalue()


def sweep_from_csv(text: str) -> list[SweepRow]:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or tuple(lines[0].split(",")) != SWEEP_HEADER:
        raise ValueError("sweep CSV header mismatch")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        vals = line.split(",")
        if len(vals) != len(SWEEP_HEADER):
            raise ValueError(f"row {i}: expected {len(SWEEP_HEADER)} columns")
        rows.append(SweepRow(*map(float, vals)))
    return rows


def gnuplot_script(csv_path: str, title: str = "") -> str:
    """Three-panel gnuplot script: prices vs payoff, differences, relative errors."""
    return f"""set datafile separator ','
set key autotitle columnhead
set multiplot layout 3,1 title '{title}'
set xlabel 'strike'
plot '{csv_path}' using 1:3 with lines lc rgb 'blue' title 'Monte Carlo', \\
     '' using 1:5 with lines lc rgb 'red' title 'deep learning', \\
     '' using 1:2 with lines lc rgb 'black' title 'payoff'
plot '{csv_path}' using 1:6 with lines title 'difference'
plot '{csv_path}' using 1:7 with lines title 'relative error'
unset multiplot
"""


def sweep_summary(rows: list[SweepRow], bound: float = 0.15) -> dict:
    rel = np.array([r.relative_error for r in rows])
    return dict(max_abs_rel=float(np.max(np.abs(rel))),
                frac_within=float(np.mean(np.abs(rel) <= bound)),
                rmse=float(math.sqrt(np.mean([r.difference**2 for r in rows]))))



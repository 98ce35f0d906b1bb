"""
Simulating the variance process
===============================

Between grid points the OU recursion is solved exactly, so the only
approximation is dropping jumps below eps (their mean is kept as a drift).
"""
import numpy as np

from bnsprice import BnsParams, SimConfig, make_rng
from bnsprice.simulation import draw_jumps, simulate_variance_batch, simulate_variance_path

p = BnsParams(468.40, 0.5, -4.0739, 2.4958, 0.0872, 11.98, 0.0041)
cfg = SimConfig()

###############################################################################
# One path, jump by jump

jumps = draw_jumps(p, 1.0, cfg, make_rng(1))
grid, sig = simulate_variance_path(p, 1.0, jumps, cfg)
big = np.argsort(jumps.sizes)[-3:]
print(f"{len(jumps)} jumps above eps={cfg.eps_trunc}; largest at t = {np.round(jumps.times[big], 3)}")
print(f"sigma^2 on the monthly grid: {np.round(sig[::10], 5)}")

###############################################################################
# The stationary law
# ------------------
# Over a long horizon the mean settles at a/b whatever sigma0^2 was.

for s0sq in (0.001, 0.0041, 0.02):
    q = p.replace(sigma0_sq=s0sq)
    b = simulate_variance_batch(q, 10.0, cfg.replace(dt=1.0), make_rng(2), n_paths=20000)
    x = b.sigma_sq[:, -1]
    print(f"sigma0^2={s0sq:.4f}: mean sigma^2_10 = {x.mean():.5f} +- {x.std() / np.sqrt(x.size):.5f} "
          f"(a/b = {p.a / p.b:.5f})")

###############################################################################
# Under the pricing measure
# -------------------------
# With alpha > 0 the MMM adds jumps (rate grows by a factor 1 - theta > 1 for
# negative rho), so variance is higher under P* than under P.

bp = simulate_variance_batch(p, 1.0, cfg, make_rng(3), n_paths=5000, measure="P")
bq = simulate_variance_batch(p, 1.0, cfg, make_rng(3), n_paths=5000, measure="MMM")
print(f"mean sigma^2_1: P {bp.sigma_sq[:, -1].mean():.5f}, MMM {bq.sigma_sq[:, -1].mean():.5f}")

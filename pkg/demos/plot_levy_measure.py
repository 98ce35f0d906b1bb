"""
The IG-OU Lévy measure and admissibility
========================================

The variance process is driven by a subordinator with infinitely many small
jumps.  Here we look at how much of the measure a truncation level keeps and
when the minimal martingale measure is a genuine probability measure.
"""
import numpy as np

from bnsprice import BnsParams, c_rho, check_assumption, kappa_bar, small_jump_mean, tail_mass

p = BnsParams(s0=468.40, alpha=0.5, rho=-4.0739, lam=2.4958, a=0.0872, b=11.98, sigma0_sq=0.0041)

###############################################################################
# Jump counts against truncation
# ------------------------------
# Every tenfold cut in eps adds roughly sqrt(10) times as many jumps per unit
# time, while the drift carried by the dropped small jumps shrinks.

print(f"{'eps':>8} {'jumps/yr':>10} {'small-jump drift':>18}")
for eps in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]:
    print(f"{eps:8.0e} {tail_mass(eps, p):10.2f} {small_jump_mean(eps, p):18.3e}")
print(f"stationary mean of sigma^2: a/b = {p.a / p.b:.7f}")

###############################################################################
# Two constants that recur everywhere

print(f"C^rho     = {c_rho(p):.6e}")
print(f"kappa_bar = {kappa_bar(p):.6e}")

###############################################################################
# Admissibility
# -------------
# Negative drifts push the second condition toward -1.  Around alpha = -0.004
# the measure change breaks down for a one-year option.

for alpha in [0.5, 0.0, -0.002, -0.004, -0.01]:
    print(f"alpha={alpha:+.3f}: {check_assumption(p.replace(alpha=alpha), 1.0)}")

alphas = np.linspace(-0.01, 0.0, 1001)
ok = [check_assumption(p.replace(alpha=a), 1.0).passed for a in alphas]
print(f"smallest admissible alpha on the grid: {alphas[np.argmax(ok)]:.5f}")

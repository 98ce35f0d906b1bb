"""
Training the surrogate and sweeping strikes
===========================================

A small run of the full pipeline: label data, fit the six-layer network,
then compare it against Monte Carlo along the strike grid S0/2..3S0/2.
Set FULL=True for the desk-scale settings (about five minutes on one core).
"""
import time


from bnsprice import SimConfig, TrainConfig, generate_dataset, train
from bnsprice.experiments import surrogate_prices, strike_grid, sweep, sweep_summary, variable_set

FULL = False
n, epochs = (6000, 800) if FULL else (1200, 200)

ds = generate_dataset(n, SimConfig(), seed=0)
model, rep = train(ds, TrainConfig(epochs=epochs), progress=lambda e, l, v: print(f"epoch {e}: val {v:.3f}"))
print(f"best epoch {rep.best_epoch}, test RMSE {rep.test_rmse:.3f}")

###############################################################################
# Sweeps on the three fixed parameter sets

for name in "abc":
    p, T = variable_set(name)
    rows = sweep(p, T, model, SimConfig(n_paths=10000))
    s = sweep_summary(rows)
    print(f"set {name}: RMSE {s['rmse']:.3f}, max |rel err| {s['max_abs_rel']:.3f}, "
          f"{100 * s['frac_within']:.0f}% of strikes within 0.15")
    for r in rows[::25]:
        print(f"   K={r.strike:6.1f} mc {r.mc_price:8.3f} dl {r.dl_price:8.3f}")

###############################################################################
# Speed

p, T = variable_set("a")
k = strike_grid()
t0 = time.perf_counter()
for _ in range(100):
    surrogate_prices(model, p, T, k)
print(f"101-strike surrogate sweep: {(time.perf_counter() - t0) * 10:.2f} ms")

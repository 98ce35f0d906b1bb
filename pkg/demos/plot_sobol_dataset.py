"""
From Sobol points to teaching data
==================================

Eight Sobol coordinates become (alpha, rho, lambda, a, b, sigma0^2, K, T).
The bounds for b and alpha depend on the other coordinates, which keeps every
draw admissible.
"""
import numpy as np

from bnsprice import SimConfig, generate_dataset, sobol_points
from bnsprice.dataset import INPUT_NAMES, transform_points

###############################################################################
# Low discrepancy in a nutshell

pts = sobol_points(1023, dim=8)
print("first points:\n", pts[:4].round(4))
print("points per quarter of dimension 5:", np.bincount((pts[:, 4] * 4).astype(int)))

###############################################################################
# The transformed box

v = transform_points(pts)
for name in ("alpha", "rho", "lam", "a", "b", "sigma0_sq", "strike", "maturity"):
    print(f"{name:>10}: [{v[name].min():9.4f}, {v[name].max():9.4f}]")
print(f"alpha floor ranges over [{v['alpha_lower'].min():.3f}, {v['alpha_lower'].max():.3f}]")

###############################################################################
# A small labelled set
# --------------------
# Desk scale is 6000 records at 1000 paths (about a minute per thousand on one
# core); 60 records keep this demo quick.

ds = generate_dataset(60, SimConfig(n_paths=500), seed=1)
print(f"{len(ds)} records, splits", {s: len(ds.subset(s)) for s in ("train", "val", "test")})
print("mean label noise (MC std err):", ds.mc_se.mean().round(3))
sc = ds.fit_scaler()
z = sc.transform(ds.subset("train").inputs)
print("scaled training range per input:")
for name, lo, hi in zip(INPUT_NAMES, z.min(axis=0), z.max(axis=0)):
    print(f"  {name:>9} [{lo:+.2f}, {hi:+.2f}]")

"""Weighted hyperbolic half-plane with psi = -(2-N) log y.

Ric_N is (1-N) times the metric, and u = x/y satisfies Hess u = u g and
Delta_m u = N u.  The Bochner inequality is therefore an equality for u.

    python demos/hyperbolic_plane.py
"""

import numpy as np

from wricci import bochner_report, hessian, model_space, ric_n_form, ric_n_min, weighted_laplacian

N = -2.0
wm = model_space("hyperbolic", N=N)
u = wm.extras["eigenfunction"]

rng = np.random.default_rng(7)
pts = np.column_stack([rng.uniform(-2, 2, 5), rng.uniform(0.3, 3, 5)])

print("     x      y   min Ric_N   |Hess u - u g|   Delta_m u - N u   Bochner gap")
for p in pts:
    g = wm.chart.metric_at(p)
    lam, _ = ric_n_min(wm, p, N)
    dev = np.abs(hessian(wm.chart, u, p) - u(p) * g).max()
    lap = weighted_laplacian(wm, u, p) - N * u(p)
    gap = bochner_report(wm, u, p, N).gap_N
    print(f"{p[0]:6.2f} {p[1]:6.2f}  {lam:10.6f}  {dev:15.2e}  {lap:16.2e}  {gap:12.2e}")

# the coordinate matrix of Ric_N at y = 2 is (1-N)/y^2 times the identity
print("\nRic_N at (0, 2):\n", ric_n_form(wm, [0.0, 2.0], N))

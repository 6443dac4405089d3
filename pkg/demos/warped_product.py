"""Warped product R x_cosh(at) Sigma over a circle and over a model line.

The radial direction always has Ric_N = K.  Whether the base curvature
reaches K(2-N)/(1-N) decides if the product construction applies; a circle
falls short, the line M1(4/3, -3) meets it exactly.

    python demos/warped_product.py
"""

import numpy as np

from wricci import model_space, ric_n_direction, sigma_composed_bound, sigma_curvature_check, warped_product

K, N = 1.0, -2.0
threshold, composed = sigma_composed_bound(K, N)
print(f"base threshold {threshold:.6f}, implied base gap {composed:.6f}")

for base in (model_space("circle"), model_space("m1", K=threshold, N=N - 1)):
    w = warped_product(base, K, N)
    ts = np.linspace(-2, 2, 5)
    radial = [ric_n_direction(w, [t, 0.3], [1.0, 0.0], N) for t in ts]
    rep = sigma_curvature_check(w, [[x] for x in np.linspace(-2, 2, 5)])
    print(f"\nbase {base.label}: radial Ric_N in [{min(radial):.12f}, {max(radial):.12f}]")
    print(f"  base Ric_(N-1) values {np.round(rep.values, 12)}")
    print(f"  meets threshold: {rep.satisfied}")

w = warped_product(model_space("circle"), K, N)
a = w.extras["warp_rate"]
for t in (0.5, 1.0, 2.0):
    ratio = w.density([t, 0.0]) / w.density([0.0, 0.0])
    print(f"density ratio at t={t}: {ratio:.12f} vs cosh(at)^(N-1) = {np.cosh(a * t) ** (N - 1):.12f}")

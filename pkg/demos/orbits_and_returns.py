"""Orbits of the intermittent map and the first-return structure on [1/2, 1].

Prints a few orbit segments, the left preimages y_n of 1/2 with their power
law, and the tail of the return time compared with sampled return times.
"""

import numpy as np

from liyorke import MapSpec, eval_n
from liyorke.inducing import compute_yn, sample_return_times, tail_measure

for alpha in (0.5, 2.0):
    spec = MapSpec.manpom(alpha)
    orbit = eval_n(spec, 0.05, 40)
    print(f"alpha={alpha}: orbit of 0.05, first 12 points")
    print("  " + " ".join(f"{v:.3f}" for v in orbit[:12]))

spec = MapSpec.manpom(2.0)
rs = compute_yn(spec, 10_000)
n = np.array([10, 100, 1000, 10_000])
print("\nn, y_n, y_n * n^(1/alpha)")
for k in n:
    print(f"{k:6d}  {rs.y[k]:.6e}  {rs.y[k] * k ** 0.5:.6f}")

rep = tail_measure(spec, 10_000)
print(f"\ntail exponent fit {rep.fit.slope:.4f} over {rep.window}, E[tau] diagnosis {rep.diagnosis}")

_, t = sample_return_times(spec, 50_000, seed=1, cap=10**5)
long = (t == -1)
for k in (10, 100, 1000):
    exact = rep.tail[np.searchsorted(rep.n, k)]
    sampled = 0.5 * np.mean((t >= k) | long)
    print(f"lambda(tau >= {k}): exact {exact:.5e}, sampled {sampled:.5e}")

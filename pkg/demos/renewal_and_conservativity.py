"""Return probabilities u_n to [1/2, 1] and the d-fold product test.

u_n decays like n^(1/alpha - 1); the product of d copies is conservative
exactly when sum u_n^d diverges.
"""

from liyorke import MapSpec
from liyorke.renewal import (conservativity_index, tail_exponent_fit, un_montecarlo,
                             un_operator)
from liyorke.transfer import Mesh, build_ulam

alpha, N = 2.0, 20_000
spec = MapSpec.manpom(alpha)
op = build_ulam(spec, Mesh.for_map(spec, 2**15, 1.0 + alpha))
u = un_operator(op, N)
fit = tail_exponent_fit(u, (100, N))
print(f"alpha={alpha}: slope {fit.slope:.4f} (expected {1 / alpha - 1:.4f})")

mc = un_montecarlo(spec, 200, 100_000, seed=2)
for n in (1, 10, 100, 200):
    print(f"u_{n}: operator {u.u[n]:.5f}, Monte Carlo {mc.u[n]:.5f} +- {mc.stderr[n]:.5f}")

for d in (1, 2, 3, 4):
    rep = conservativity_index(u, d)
    print(f"d={d}: last-decade increment {rep.increment:.4f}, exponent {rep.exponent:.3f}, "
          f"{rep.verdict}")

"""Invariant density from an Ulam discretisation on a graded mesh.

For alpha < 1 the density is normalised to a probability; for alpha >= 1 it is
pinned to 1 on the right end. In both cases h(x) x^alpha stays bounded.
"""

from liyorke import MapSpec
from liyorke.transfer import Mesh, build_ulam, invariant_density

for alpha, M in ((0.5, 2**13), (2.0, 2**13)):
    spec = MapSpec.manpom(alpha)
    op = build_ulam(spec, Mesh.for_map(spec, M, 1.0 + alpha))
    h = invariant_density(op)
    ratio, lo, hi = h.bound_ratio(alpha, 1e-4)
    print(f"alpha={alpha}: {h.normalization} density via {h.method}, "
          f"h(x) x^alpha in [{lo:.4f}, {hi:.4f}] on [1e-4, 1], ratio {ratio:.3f}")

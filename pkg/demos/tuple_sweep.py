"""Li-Yorke statistics of random tuples across (alpha, d).

Fractions are measured at a finite horizon; the prediction columns state the
infinite-time expectation.
"""

from liyorke.tuples import phase_sweep

rows = phase_sweep([0.5, 1.2, 2.5], [2, 3], N=20_000, samples=400, seed=1)
print("alpha d  prox   sep    LY     late-sep  prediction")
for r in rows:
    print(f"{r.alpha:5.2f} {r.d}  {r.frac_proximal:.3f}  {r.frac_separated:.3f}  {r.frac_LY:.3f}"
          f"  {r.frac_late_separated:.3f}     {r.prediction_LY}/{r.prediction_conservative}")

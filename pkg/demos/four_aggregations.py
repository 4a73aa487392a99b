"""Three quadratic constraints whose convex hull needs four aggregations.

Run with ``python3 demos/four_aggregations.py``.
"""
import numpy as np

from aggrahull import gallery
from aggrahull.certificates import pdlc_witness
from aggrahull.engine import enumerate_hull, pencil_analysis
from aggrahull.oracle import SamplerConfig, sample_S, verify_hull

sys = gallery.four_aggregations(2)
cfg = SamplerConfig(seed=0, n_samples=5000)

# A positive definite combination exists, so pairwise enumeration is complete.
w = pdlc_witness(sys)
print("PD combination theta =", np.round(w.theta, 4), "min eig", round(w.min_eig, 4))

for i, j in [(0, 1), (0, 2), (1, 2)]:
    pa = pencil_analysis(sys, i, j)
    print(f"pencil ({i},{j}): breakpoints {np.round(pa.gev_values, 6)}, one-negative intervals {pa.intervals}")

S = sample_S(sys, cfg).points
hull = enumerate_hull(sys, S, cfg)
for rec in hull.aggregations:
    print("aggregation", np.round(rec.lam, 6), rec.kind)

verdict = verify_hull(sys, hull, cfg, samples=S)
print("verification:", verdict.status, f"({verdict.checked_inside} points checked)")

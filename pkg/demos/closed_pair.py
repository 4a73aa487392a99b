"""Closed constraints with an isolated solution.

``-x1^2 + x1 <= 0`` and ``|x|^2 <= 1`` describe the half disk ``x1 <= 0``
together with the point ``e1``.  The pencil has a double root at 2/3 and the
aggregation with that weight keeps ``e1`` inside the description.
"""
import numpy as np

from aggrahull import gallery
from aggrahull.engine import pencil_analysis
from aggrahull.oracle import SamplerConfig
from aggrahull.special import closed_hull

sys = gallery.closed_pair(2)
pa = pencil_analysis(sys, 0, 1)
for root in pa.gevs:
    print(f"generalized eigenvalue {root.value:.9f}", "(double)" if root.double else "")

res = closed_hull(sys, SamplerConfig(seed=0, n_samples=5000))
for rec in res.aggregations:
    print("aggregation", np.round(rec.lam, 9))
print("isolated points found by the optimizer:", np.round(res.isolated, 6).tolist())

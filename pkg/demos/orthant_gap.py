"""Good aggregations can miss part of the hull.

Outside the unit ball and inside the positive orthant: the hull is
``{x > 0, sum x > 1}`` but every good aggregation is a halfspace ``x_i > 0``.
Points of the hull are certified by explicit convex combinations.
"""
import numpy as np

from aggrahull import gallery
from aggrahull.engine import classify
from aggrahull.oracle import SamplerConfig, check_membership_certificate, hull_member
from aggrahull.special import sphere_hull

sys = gallery.orthant_outside_ball(3)
print("ball complement form:", classify(sys.Qs[0]).kind)

hull = sphere_hull(sys, check_span=False)
print("aggregations:", [np.round(r.lam, 3).tolist() for r in hull.aggregations])

x = np.array([0.6, 0.5, 0.4])
mem = hull_member(sys, x, SamplerConfig(seed=0), hints=gallery.orthant_hints(x))
ok = check_membership_certificate(sys, x, mem.points, mem.weights)
print(f"{x} is a combination of {len(mem.points)} solutions, certificate valid: {ok}")

gap = np.full(3, 0.1)
print(f"{gap} satisfies every aggregation: {bool(hull.contains(gap[None])[0])}, "
      f"yet its coordinates sum to {gap.sum():.1f} < 1")

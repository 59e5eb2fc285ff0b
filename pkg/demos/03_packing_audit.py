# %% [markdown]
# # Sphere packing and the packing inequality
#
# Two balls of capacity 1 exactly fill the unit disc bundle of a round
# sphere with diameter 1/2, in every dimension. Afterwards we audit the
# inequality pi r0^2 + pi r1^2 <= 4 r d_g on random pairs.

# %%
from symplength import RoundSphere
from symplength.capacities import packing_audit, sphere_packing_example
from symplength.distance_engine import NeighborhoodSpec, rho_lower

for n in (1, 2, 3):
    ex = sphere_packing_example(n)
    print(f"n={n}: balls {ex['balls_volume']:.12f}  bundle {ex['bundle_volume']:.12f}  4*diam {ex['four_diam']}")

# %%
sphere = RoundSphere(2, 1 / (2 * 3.141592653589793))
spec = NeighborhoodSpec.unit(sphere)
pts = sphere.sample_points(400, seed=3)
bounds = [rho_lower(spec, a, b) for a, b in zip(pts[:200], pts[200:])]
rep = packing_audit(bounds, spec)
print(f"{rep.pairs} pairs, {len(rep.violations)} violations, tightest ratio {rep.tightest_ratio:.4f}")

# %% [markdown]
# Where the lower bounds came from:

# %%
from collections import Counter

print(Counter(b.lower_source for b in bounds))

# %% [markdown]
# # The chain pseudo-metric on a surface of revolution
#
# Distances on r(z) = 2 + cos z come from geodesic shooting seeded by a
# nearest-neighbour graph. Chains of short hops through the graph bound the
# chain pseudo-metric from both sides.

# %%
import numpy as np

from symplength import load_model
from symplength.distance_engine import NeighborhoodSpec, chain_metric_DW, equivalence_constants
from symplength.riemannian import distance_report

model = load_model({"kind": "surface-of-revolution", "profile": "2+cos(z)", "inj_bound": 1.0})
spec = NeighborhoodSpec.unit(model)
q0, q1 = np.array([0.5, 0.3]), np.array([1.2, 0.9])
print("d_g and method:", distance_report(model, q0, q1))

# %%
dw = chain_metric_DW(model, spec, q0, q1, size=4096)
print(dw)

# %%
consts = equivalence_constants(model, spec)
print(f"C1 = {consts.C1:.4f} (diameter {consts.diameter_status}), C2 = {consts.C2}")

# %% [markdown]
# # Recovering Riemannian length from ball packings
#
# Each short segment of a curve gets a lower and an upper bound from
# embedded balls. Summing over finer partitions squeezes the total onto the
# Riemannian length, up to the shrink factor (1 - eps)^2.

# %%
import math

from symplength import FlatTorus, RoundSphere
from symplength.config import curve_from_doc
from symplength.distance_engine import NeighborhoodSpec, converge_length

torus = FlatTorus([1.0, 1.0])
curve = curve_from_doc(torus, {"kind": "geodesic", "q": [0.1, 0.2], "v": [0.6, 0.8], "length": 0.5})
table = converge_length(torus, NeighborhoodSpec.unit(torus), curve, range(2, 11))
print(table.to_csv())

# %% [markdown]
# The same experiment on a round sphere scaled to diameter 1/2. Here the
# local balls are images of bi-discs under the exponential map, so each
# certificate includes the geodesic flow.

# %%
sphere = RoundSphere(2, 1 / (2 * math.pi))
curve = curve_from_doc(sphere, {"kind": "geodesic", "q": [0.01, -0.02], "v": [1.0, 0.3], "length": 0.2})
table = converge_length(sphere, NeighborhoodSpec.unit(sphere), curve, range(2, 11))
for row in table.rows:
    width = (row["upper"] - row["lower"]) / row["riem_length"]
    print(f"k={row['k']:2d} lower={row['lower']:.6f} upper={row['upper']:.6f} width={100 * width:.2f}%")
print("violations:", table.violations())

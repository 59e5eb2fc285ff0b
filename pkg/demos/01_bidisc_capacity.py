# %% [markdown]
# # Balls inside a Lagrangian bi-disc
#
# P_L(a, b) is the product of a q-disc of radius a and a p-disc of radius b.
# A radial map of the q-disc plus its cotangent lift carries a 4-ball of
# capacity 4ab (up to a shrink factor) into it, and projecting onto the
# (q1, p1) plane gives the matching upper bound 4ab.

# %%
import numpy as np

from symplength.capacities import bidisc_report
from symplength.certify import certify
from symplength.symplectic import bidisc_embedding, bidisc_profile, bidisc_radius

a, b = 1.0, 1.0
R = bidisc_radius(a, b)
print(f"ball radius R = {R:.6f}, capacity pi R^2 = {np.pi * R * R:.6f}")

# %% [markdown]
# The radial profile f stretches |q| so that the q-disc of radius R is
# sent onto the disc of radius ab with f'(q) = sqrt(R^2 - q^2).

# %%
for q in np.linspace(0, R, 5):
    f, df = bidisc_profile(a, b, q)
    print(f"q={q:.3f}  f={f:.5f}  f'={df:.5f}")

# %% [markdown]
# Certify the embedding: symplecticity, the Liouville identity, containment
# and the relative boundary condition, each on Sobol samples.

# %%
cert = certify(bidisc_embedding(a, b, eps=1e-3, n=2), samples=10_000)
for check in cert.checks:
    print(f"{check.name:12s} worst={check.worst: .3e} tol={check.tol:.0e} pass={check.passed}")
print("verdict:", "pass" if cert.verdict else "fail")

# %%
rep = bidisc_report(a, b)
print(f"{rep.gromov_lower:.6f} <= c(P_L(1,1)) <= {rep.cyl_upper:.1f}")
print("volume bound", rep.volume_bound)

"""
Gaussian widths of the four unit balls
======================================

The width of a set controls how many exploratory rounds the algorithm
spends before it trusts its estimator. Here we estimate it by Monte Carlo
for each supported norm and compare with what is known in closed form.
"""

import math

import numpy as np
from scipy.special import gammaln

from structbandit.geometry import omega_width
from structbandit.structure import StructureModel

# The L2 ball is the easy case: its width is the expected norm of a
# standard Gaussian, which has a Gamma-ratio formula.
for p in (2, 8, 32):
    est = omega_width(StructureModel("l2", p), m=20_000, seed=p)
    exact = math.sqrt(2) * math.exp(gammaln((p + 1) / 2) - gammaln(p / 2))
    print(f"l2   p={p:3d}  MC {est.mean:.4f} +/- {est.std_error:.4f}   exact {exact:.4f}")

# The L1 ball has width E max_i |g_i|, which grows like sqrt(2 ln 2p)
# rather than sqrt(p). That gap is where sparsity pays off.
for p in (2, 32, 128):
    est = omega_width(StructureModel("l1", p), m=20_000, seed=p)
    print(f"l1   p={p:3d}  MC {est.mean:.4f} +/- {est.std_error:.4f}   "
          f"sqrt(2 ln 2p) = {math.sqrt(2 * math.log(2 * p)):.4f}")

# Group and nuclear balls sit in between.
group = StructureModel("group", 32, s=1, groups=[list(range(i, i + 4)) for i in range(0, 32, 4)])
nuclear = StructureModel("nuclear", 32, s=1, shape=(4, 8))
for model in (group, nuclear):
    est = omega_width(model, m=20_000, seed=1)
    print(f"{model.kind.value:8s} p=32  MC {est.mean:.4f} +/- {est.std_error:.4f}")

# The estimate is deterministic for a given seed.
a = omega_width(StructureModel("l1", 16), m=5_000, seed=7).mean
b = omega_width(StructureModel("l1", 16), m=5_000, seed=7).mean
assert a == b
print("repeatable:", np.isclose(a, b))

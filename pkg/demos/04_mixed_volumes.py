# %% [markdown]
# # Mixed volumes and the Brunn-Minkowski inequality
#
# The volume of t1 P1 + ... + tk Pk is a homogeneous polynomial of degree n.
# The package recovers it exactly by interpolation.

# %%
import math

from toric_ma import ConvexBody, box, brunn_minkowski_check, mixed_volume, volume_polynomial
from toric_ma.mixedvol import log_concavity_report

square = box([0, 0], [1, 1])
diamond = ConvexBody([[1, 0], [0, 1], [-1, 0], [0, -1]])

# %%
print(volume_polynomial([square, diamond]))
print("MV(square, diamond) =", mixed_volume([square, diamond]))

# %% [markdown]
# Brunn-Minkowski in mixed-volume form: MV(P, Q) >= Vol(P)^{1/2} Vol(Q)^{1/2}.

# %%
lhs, rhs, holds = brunn_minkowski_check([square, diamond])
print(lhs, rhs, math.sqrt(2), holds)

# %% [markdown]
# Along the segment (1 - t) P + t Q the square root of the volume is concave.

# %%
rep = log_concavity_report(square, diamond, [0.25, 0.5, 0.75])
for row in rep["samples"]:
    print(row["t"], row["volume"], row["lhs"] >= row["rhs"])

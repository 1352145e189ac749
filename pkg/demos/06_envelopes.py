# %% [markdown]
# # Envelopes and model singularities
#
# The rooftop envelope is the largest convex function below min(u, v).  The
# singularity envelope keeps only the growth of psi.  It does not depend on
# constants added to psi.

# %%
import numpy as np

from toric_ma import ConvexBody, PLConvexFunction, is_model, rooftop, singularity_envelope, support_function

x = np.linspace(-1, 1, 11)[:, None]
sym = ConvexBody([[-1.0], [1.0]])
u = PLConvexFunction(sym, x, x[:, 0])
v = PLConvexFunction(sym, x, -x[:, 0])
print("rooftop of x and -x:", rooftop(u, v).values)

# %%
grid = np.linspace(-4, 4, 33)[:, None]
half = ConvexBody([[0.0], [0.5]])
unit = ConvexBody([[0.0], [1.0]])
psi, chi = support_function(half, grid), support_function(unit, grid)
a = singularity_envelope(psi, chi)
b = singularity_envelope(psi.shift(10.0), chi)
print("constant blind:", np.allclose(a.values, b.values))

# %% [markdown]
# h_P stays within a bounded distance of its envelope.  Subtracting
# log(1 + t) makes the gap grow without bound, so that function is not of
# model type.

# %%
print(is_model(lambda x: np.maximum(0.0, x[:, 0]), 1.0, body=unit))
print(is_model(lambda x: np.maximum(0.0, x[:, 0]) - np.log1p(np.maximum(0.0, x[:, 0])), 1.0, body=unit))

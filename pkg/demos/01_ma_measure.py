# %% [markdown]
# # Monge-Ampère measure of a piecewise-linear convex function
#
# A convex function is stored as values on a finite set of nodes together with
# a convex body P of admissible slopes.  The measure of a node is the volume of
# its subgradient cell, scaled by n!/2^n.

# %%
import numpy as np

from toric_ma import ConvexBody, PLConvexFunction, box, box_grid, ma, subgradient_cell, support_function

# %% [markdown]
# The support function of the unit square puts all of its mass at the origin.
# The mass is 2!/2^2 * Vol = 1/2.

# %%
square = box([0, 0], [1, 1])
h = support_function(square, box_grid(2, 2.0, 5))
res = ma(h)
print("total mass", res.total)
print("origin cell vertices\n", subgradient_cell(h, 12).vertices)

# %% [markdown]
# In one dimension a function with slopes 0, 1/2 and 1 has two kinks, and each
# one carries half of the unit interval, so 1/4 of mass.

# %%
x = np.array([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
v = np.maximum.reduce([np.full_like(x, -0.5), 0.5 * x, x - 0.5])
f = PLConvexFunction(ConvexBody([[0.0], [1.0]]), x, v)
print("masses", ma(f).masses)

# %% [markdown]
# Adding a constant leaves the measure unchanged.

# %%
print("shift invariant:", np.array_equal(ma(f).masses, ma(f.shift(5.0)).masses))

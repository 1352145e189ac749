# %% [markdown]
# # Solving MA(h) = mu for a discrete measure
#
# The solver finds the values at the atoms of mu with a damped Newton method
# on the cell volumes.  It normalises the solution so that sup(h - h_P) = 0.

# %%
import numpy as np

from toric_ma import ConvexBody, DiscreteMeasure, box, ma, solve_ma, support

# %% [markdown]
# Half a unit atom at the origin gives back the support function of P.

# %%
square = box([0, 0], [1, 1])
rep = solve_ma(square, DiscreteMeasure([[0, 0]], [0.5]), box_radius=4.0)
x = np.random.default_rng(0).uniform(-5, 5, (5, 2))
print(np.c_[rep.solution(x), support(square, x)])

# %% [markdown]
# Two atoms in one dimension.

# %%
unit = ConvexBody([[0.0], [1.0]])
rep = solve_ma(unit, DiscreteMeasure([[-1.0], [1.0]], [0.25, 0.25]), box_radius=4.0)
print(rep.solution(np.array([[-1.0], [0.0], [1.0]])))

# %% [markdown]
# A random measure of the right total mass.  The recovered masses match.

# %%
rng = np.random.default_rng(1)
pts = rng.uniform(-1, 1, (30, 2))
w = rng.uniform(0.5, 1.5, 30)
mu = DiscreteMeasure(pts, 0.5 * w / w.sum())
rep = solve_ma(square, mu, box_radius=4.0)
print("residual", rep.residual, "iterations", rep.iterations)
print("max mass error", np.abs(ma(rep.solution).masses[:30] - mu.masses).max())

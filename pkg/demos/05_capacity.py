# %% [markdown]
# # Relative capacity of a compact set
#
# The extremal function is the largest convex function below h_P that is at
# most h_P - 1 on K.  Its mass on K equals the energy integral.

# %%
from toric_ma import CompactRegion, ConvexBody, relative_capacity

unit = ConvexBody([[0.0], [1.0]])
for lo, hi in [(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)]:
    rep = relative_capacity(CompactRegion([[lo]], [[hi]]), unit, (4.0, 33))
    print([lo, hi], rep.cap_mass, rep.cap_energy)

# %% [markdown]
# Shrinking boxes onto [2, 3] have capacities decreasing to 1/4.

# %%
from toric_ma import box_grid

grid = box_grid(1, 8.0, 257)
for d in (1.0, 0.5, 0.25, 0.125):
    print(d, relative_capacity(CompactRegion([[2 - d]], [[3 + d]]), unit, grid).cap_mass)

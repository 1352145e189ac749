# %% [markdown]
# # The equation MA(h) = e^{lambda h} mu
#
# Here the free additive constant is gone: multiplying mu by e^c moves the
# solution down by c / lambda.

# %%
import numpy as np

from toric_ma import DiscreteMeasure, box, solve_aubin_yau

square = box([0, 0], [1, 1])
rng = np.random.default_rng(2)
pts = rng.uniform(-1, 1, (12, 2))
mu = DiscreteMeasure(pts, rng.uniform(0.02, 0.06, 12))

# %%
lam = 2.0
ref = solve_aubin_yau(square, mu, lam, box_radius=4.0)
print("residual", ref.residual)
for c in (-1.0, 0.5, 2.0):
    rep = solve_aubin_yau(square, mu.scaled(np.exp(c)), lam, box_radius=4.0)
    print(c, np.abs(rep.atom_values - (ref.atom_values - c / lam)).max())

# %% [markdown]
# A larger measure gives a smaller solution.

# %%
bigger = DiscreteMeasure(pts, mu.masses * 1.3)
print(np.all(solve_aubin_yau(square, bigger, lam, box_radius=4.0).atom_values <= ref.atom_values))

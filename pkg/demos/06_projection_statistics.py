# %% [markdown]
# # How often does the projection act?
#
# A projection event is an iterate of the projected scheme lying outside
# the ball of radius `h^{-alpha}` before a step.  The share of paths with
# at least one event falls quickly with the step size.

# %%
import numpy as np

from monosde import TimeGrid, generate_paths, make_gle, make_svm32
from monosde.experiment import projection_stats
from monosde.paths import coarsen_uniform
from monosde.schemes import integrate_terminal

SAMPLES = 5_000
for model in (make_gle(), make_svm32()):
    inc = generate_paths(42, range(SAMPLES), 1, 11)
    print(model.name)
    for level in range(6, 12):
        grid = TimeGrid.uniform(model.T, level)
        _, projected, _ = integrate_terminal("pem", model, grid, coarsen_uniform(inc, 11, level))
        fraction, total = projection_stats(projected)
        radius = grid.steps[0] ** -model.alpha
        print(f"  h=2^-{level:<2d} radius {radius:7.2f}  paths projected {total:5d} ({fraction:.2%})")

# %% [markdown]
# Lowering the projection exponent shrinks the ball, and events become
# the rule rather than the exception.

# %%
gle = make_gle()
inc = generate_paths(42, range(SAMPLES), 1, 6)
_, projected, _ = integrate_terminal("pem", gle, TimeGrid.uniform(1.0, 6), inc, alpha=0.1)
print("alpha=0.1 at h=2^-6:", f"{np.mean(projected):.2%} of paths projected")

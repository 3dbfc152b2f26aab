# %% [markdown]
# # Models and their structural constants
#
# Three scalar models ship with the package: a Ginzburg-Landau type
# equation with a cubic drift, the 3/2 volatility model and geometric
# Brownian motion.  Each carries the constants that the convergence theory
# needs, and each can be checked against its standing inequalities by
# random sampling.

# %%
import numpy as np

from monosde import make_gbm, make_gle, make_svm32, sample_assumption
from monosde.model import INEQUALITIES

models = [make_gle(), make_svm32(), make_gbm()]
for m in models:
    print(f"{m.name:6s} L={m.L:<6g} q={m.q:<4g} alpha={m.alpha:<5g} eta={m.eta:<5g} "
          f"p={m.p:<4g} step bound={m.step_bound:.4f}")

# %% [markdown]
# Coefficients are vectorised over a trailing state axis.

# %%
gle = models[0]
x = np.array([[0.0], [1.0], [2.0]])
print("GLE drift:", gle.drift(0.0, x).ravel())
print("GLE diffusion:", gle.diffusion(0.0, x)[..., 0].ravel())

# %% [markdown]
# ## Sampling the assumptions
#
# The sampler evaluates right side minus left side at random points in
# `|x| <= 10`.  A negative worst margin is a violation, and the witness
# tells where it happened.

# %%
for m in models:
    for ineq in INEQUALITIES:
        rep = sample_assumption(m, ineq, {"x_max": 10.0}, n=50_000, seed=1)
        print(f"{m.name:6s} {ineq:16s} violations={rep.violations:<3d} worst={rep.worst_margin:.3e}")

# %% [markdown]
# Halving the one-sided constant of the GLE model breaks monotonicity near
# the origin, and the sampler finds a witness.

# %%
broken = gle.with_constants(one_sided_constant=gle.L / 2)
rep = sample_assumption(broken, "monotonicity", n=50_000, seed=1)
print("halved L:", rep.violations, "violations, witness", rep.witness)

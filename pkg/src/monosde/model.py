"""SDE models satisfying a global monotonicity condition.

A model bundles the drift ``f(t, x)`` and the diffusion ``g(t, x)`` of

    dX = f(t, X) dt + sum_r g^r(t, X) dW^r,    X(0) = X0,

together with the structural constants the schemes and the inequality
checks rely on.  States are numpy arrays whose trailing axis has length
``dim_state``; any leading axes are batch axes.  The diffusion returns an
array of shape ``(..., dim_state, dim_noise)`` whose last axis is the
noise channel ``r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

INEQUALITIES = (
    "monotonicity",
    "poly_growth",
    "time_hoelder",
    "local_lipschitz",
    "coercivity",
)


@dataclass(frozen=True)
class Model:
    """Coefficients and structural constants of an SDE.

    ``one_sided_constant`` (L), ``growth_exponent`` (q) and
    ``monotonicity_parameter`` (eta) are the constants for which the
    monotonicity, growth and local Lipschitz bounds hold.
    ``coercivity_constant`` is the constant C of the coercivity bound at
    moment exponent ``p``.
    """

    name: str
    dim_state: int
    dim_noise: int
    drift: Callable[[float, np.ndarray], np.ndarray]
    diffusion: Callable[[float, np.ndarray], np.ndarray]
    one_sided_constant: float
    growth_exponent: float
    monotonicity_parameter: float
    horizon: float
    initial_value: np.ndarray
    moment_bound_exponent: float = 2.0
    coercivity_constant: Optional[float] = None
    projection_exponent: Optional[float] = None
    # d f / d x for scalar models, enables Newton in the generic resolvent
    drift_dx: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.one_sided_constant <= 0:
            raise ValueError("one-sided constant L must be positive")
        if self.growth_exponent <= 1:
            raise ValueError("growth exponent q must exceed 1")
        if self.monotonicity_parameter <= 0.5:
            raise ValueError("monotonicity parameter eta must exceed 1/2")
        if self.horizon <= 0 or not math.isfinite(self.horizon):
            raise ValueError("horizon T must be positive and finite")
        x0 = np.asarray(self.initial_value, dtype=float).reshape(self.dim_state)
        object.__setattr__(self, "initial_value", x0)
        if self.projection_exponent is None:
            object.__setattr__(
                self, "projection_exponent", 1.0 / (2.0 * (self.growth_exponent - 1.0))
            )
        if self.coercivity_constant is None:
            object.__setattr__(self, "coercivity_constant", self.one_sided_constant)

    # short aliases used throughout the numerics
    @property
    def L(self) -> float:
        return self.one_sided_constant

    @property
    def q(self) -> float:
        return self.growth_exponent

    @property
    def eta(self) -> float:
        return self.monotonicity_parameter

    @property
    def alpha(self) -> float:
        return self.projection_exponent

    @property
    def T(self) -> float:
        return self.horizon

    @property
    def X0(self) -> np.ndarray:
        return self.initial_value

    @property
    def p(self) -> float:
        return self.moment_bound_exponent

    @property
    def step_bound(self) -> float:
        """Default upper step size bound ``min(1, 1/(2L))`` for implicit schemes."""
        return min(1.0, 1.0 / (2.0 * self.L))

    def diffusion_channel(self, t, x, r: int) -> np.ndarray:
        """Column ``g^r(t, x)`` for a 1-based channel index ``r``."""
        if not 1 <= r <= self.dim_noise:
            raise ValueError(f"channel index {r} outside 1..{self.dim_noise}")
        return self.diffusion(t, x)[..., r - 1]

    def with_constants(self, **changes) -> "Model":
        """Copy with some constants replaced (used for mutation testing)."""
        from dataclasses import replace

        if "one_sided_constant" in changes and "coercivity_constant" not in changes:
            changes["coercivity_constant"] = self.coercivity_constant
        return replace(self, **changes)


def _check_finite(**values):
    for key, val in values.items():
        if not math.isfinite(val):
            raise ValueError(f"parameter {key} must be finite, got {val}")


def make_gle(mu: float = 0.5, sigma: float = 1.0, X0: float = 2.0, T: float = 1.0,
             eta: float = 1.25, p: float = 8.0) -> Model:
    """Stochastic Ginzburg-Landau equation.

    Drift ``-x^3 + (mu + sigma^2/2) x``, diffusion ``sigma x``.  The
    monotonicity condition holds with ``L = mu + sigma^2/2 + eta sigma^2``:
    the cubic part contributes ``-(x1^2 + x1 x2 + x2^2)|x1 - x2|^2 <= 0``
    and the bound is attained as both states approach the origin.
    """
    _check_finite(mu=mu, sigma=sigma, X0=X0, T=T)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if T <= 0:
        raise ValueError("T must be positive")
    a = mu + 0.5 * sigma**2

    def drift(t, x):
        return -(x**3) + a * x

    def diffusion(t, x):
        return (sigma * x)[..., None]

    def drift_dx(t, x):
        return -3.0 * x**2 + a

    L = max(a + eta * sigma**2, 1e-12)
    return Model(
        name="gle",
        dim_state=1,
        dim_noise=1,
        drift=drift,
        diffusion=diffusion,
        one_sided_constant=L,
        growth_exponent=3.0,
        monotonicity_parameter=eta,
        horizon=T,
        initial_value=np.array([X0], dtype=float),
        moment_bound_exponent=p,
        # <f(x), x> + (p-1)/2 |g|^2 = -x^4 + (a + (p-1) sigma^2 / 2) x^2
        coercivity_constant=max(a + 0.5 * (p - 1.0) * sigma**2, 1e-12),
        drift_dx=drift_dx,
        params={"mu": mu, "sigma": sigma, "X0": X0, "T": T},
    )


def make_svm32(lam: float = 3.5, mu: float = 3.0, sigma: float = 1.0, X0: float = 5.0,
               T: float = 1.0, eta: float = 2.0) -> Model:
    """3/2 stochastic volatility model.

    Drift ``lam x (mu - |x|)``, diffusion ``sigma |x|^{3/2}``, with
    ``L = lam mu`` and coercivity exponent ``p = (2 lam + sigma^2) / sigma^2``.
    """
    _check_finite(lam=lam, mu=mu, sigma=sigma, X0=X0, T=T)
    if min(lam, mu, sigma, X0) < 0:
        raise ValueError("svm32 parameters must be nonnegative")
    if T <= 0:
        raise ValueError("T must be positive")

    def drift(t, x):
        return lam * x * (mu - np.abs(x))

    def diffusion(t, x):
        return (sigma * np.abs(x) ** 1.5)[..., None]

    def drift_dx(t, x):
        return lam * mu - 2.0 * lam * np.abs(x)

    p = (2.0 * lam + sigma**2) / sigma**2 if sigma > 0 else math.inf
    L = max(lam * mu, 1e-12)
    return Model(
        name="svm32",
        dim_state=1,
        dim_noise=1,
        drift=drift,
        diffusion=diffusion,
        one_sided_constant=L,
        growth_exponent=2.0,
        monotonicity_parameter=eta,
        horizon=T,
        initial_value=np.array([X0], dtype=float),
        moment_bound_exponent=p,
        # at p = (2 lam + sigma^2)/sigma^2 the cubic terms cancel exactly
        coercivity_constant=L,
        drift_dx=drift_dx,
        params={"lam": lam, "mu": mu, "sigma": sigma, "X0": X0, "T": T},
    )


def make_gbm(mu: float = 0.05, sigma: float = 0.2, X0: float = 1.0, T: float = 1.0,
             eta: float = 1.25) -> Model:
    """Geometric Brownian motion, a globally Lipschitz test fixture.

    The growth exponent is set to 3/2 so that the projection exponent is 1;
    the projection radius ``h^{-1} >= 1`` is never reached in practice.
    """
    _check_finite(mu=mu, sigma=sigma, X0=X0, T=T)
    if T <= 0:
        raise ValueError("T must be positive")

    def drift(t, x):
        return mu * x

    def diffusion(t, x):
        return (sigma * x)[..., None]

    def drift_dx(t, x):
        return np.full_like(x, mu)

    L = max(abs(mu) + eta * sigma**2, abs(sigma), 1.0)
    return Model(
        name="gbm",
        dim_state=1,
        dim_noise=1,
        drift=drift,
        diffusion=diffusion,
        one_sided_constant=L,
        growth_exponent=1.5,
        monotonicity_parameter=eta,
        horizon=T,
        initial_value=np.array([X0], dtype=float),
        moment_bound_exponent=8.0,
        coercivity_constant=abs(mu) + 3.5 * sigma**2 + 1e-12,
        projection_exponent=1.0,
        drift_dx=drift_dx,
        params={"mu": mu, "sigma": sigma, "X0": X0, "T": T},
    )


MODEL_FACTORIES = {"gle": make_gle, "svm32": make_svm32, "gbm": make_gbm}


def make_model(name: str, **params) -> Model:
    """Build a shipped model by name with keyword parameters."""
    try:
        factory = MODEL_FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown model {name!r}; choose from {sorted(MODEL_FACTORIES)}"
        ) from None
    return factory(**params)


@dataclass
class AssumptionSampleReport:
    inequality_id: str
    samples_tested: int
    violations: int
    worst_margin: float
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _norm(v):
    return np.sqrt(np.sum(v * v, axis=-1))


def assumption_margins(model: Model, inequality_id: str, t1, t2, x1, x2) -> np.ndarray:
    """Slack (right side minus left side) of one assumption inequality.

    ``x1``/``x2`` have shape ``(n, d)`` and ``t1``/``t2`` shape ``(n,)``.
    Single-point inequalities use ``t1`` and ``x1`` only.
    """
    L, q = model.L, model.q
    n1, n2 = _norm(x1), _norm(x2)
    f, g = model.drift, model.diffusion
    tc = t1[:, None]
    if inequality_id == "monotonicity":
        dx = x1 - x2
        df = f(tc, x1) - f(tc, x2)
        dg = g(tc, x1) - g(tc, x2)
        lhs = np.sum(df * dx, axis=-1) + model.eta * np.sum(dg * dg, axis=(-2, -1))
        return L * np.sum(dx * dx, axis=-1) - lhs
    if inequality_id == "poly_growth":
        lhs = np.maximum(_norm(f(tc, x1)), _norm(np.swapaxes(g(tc, x1), -1, -2)).max(axis=-1))
        return L * (1.0 + n1**q) - lhs
    if inequality_id == "time_hoelder":
        tc2 = t2[:, None]
        df = f(tc, x1) - f(tc2, x1)
        dg = g(tc, x1) - g(tc2, x1)
        lhs = np.maximum(_norm(df), _norm(np.swapaxes(dg, -1, -2)).max(axis=-1))
        return L * (1.0 + n1**q) * np.sqrt(np.abs(t1 - t2)) - lhs
    if inequality_id == "local_lipschitz":
        df = f(tc, x1) - f(tc, x2)
        dg = g(tc, x1) - g(tc, x2)
        lhs = np.maximum(_norm(df), _norm(np.swapaxes(dg, -1, -2)).max(axis=-1))
        return L * (1.0 + n1 ** (q - 1) + n2 ** (q - 1)) * _norm(x1 - x2) - lhs
    if inequality_id == "coercivity":
        gx = g(tc, x1)
        lhs = np.sum(f(tc, x1) * x1, axis=-1) + 0.5 * (model.p - 1.0) * np.sum(gx * gx, axis=(-2, -1))
        return model.coercivity_constant * (1.0 + n1**2) - lhs
    raise ValueError(f"unknown inequality {inequality_id!r}; choose from {INEQUALITIES}")


def sample_assumption(model: Model, inequality_id: str, box: Optional[dict] = None,
                      n: int = 100_000, seed: int = 0, tol: float = 1e-9,
                      degenerate: bool = False) -> AssumptionSampleReport:
    """Check one inequality of the standing assumptions at random points.

    ``box`` may set ``x_max`` (default 10) and ``t_min``/``t_max``
    (default ``[0, T]``).  With ``degenerate=True`` the pairs are sampled
    with ``x1 == x2``.  A sample is a violation when its slack is below
    ``-tol``.
    """
    if inequality_id not in INEQUALITIES:
        raise ValueError(f"unknown inequality {inequality_id!r}; choose from {INEQUALITIES}")
    if n < 1:
        raise ValueError("n must be at least 1")
    box = dict(box or {})
    x_max = float(box.get("x_max", 10.0))
    t_lo = float(box.get("t_min", 0.0))
    t_hi = float(box.get("t_max", model.T))
    rng = np.random.default_rng(seed)
    d = model.dim_state
    t1 = rng.uniform(t_lo, t_hi, n)
    t2 = rng.uniform(t_lo, t_hi, n)
    x1 = rng.uniform(-x_max, x_max, (n, d))
    x2 = x1.copy() if degenerate else rng.uniform(-x_max, x_max, (n, d))
    with np.errstate(invalid="ignore", over="ignore"):
        margins = assumption_margins(model, inequality_id, t1, t2, x1, x2)
    worst = int(np.argmin(margins))
    return AssumptionSampleReport(
        inequality_id=inequality_id,
        samples_tested=n,
        violations=int(np.count_nonzero(~(margins >= -tol))),
        worst_margin=float(margins[worst]),
        witness={"t1": float(t1[worst]), "t2": float(t2[worst]),
                 "x1": x1[worst].tolist(), "x2": x2[worst].tolist()},
    )

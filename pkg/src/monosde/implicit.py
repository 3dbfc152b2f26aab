"""Inversion of the resolvent map ``F_delta(t, x) = x - delta f(t, x)``.

Under the monotonicity condition with constant ``L`` and ``delta L < 1``
the map is strictly monotone, hence a homeomorphism, and its inverse is
the implicit stage of the backward Euler type schemes.  The shipped
scalar models have closed-form inverses (a depressed cubic for GLE and a
sign-split quadratic for the 3/2 model); other scalar models use a
bracketed Newton iteration.  A plain bisection oracle is kept separate
for verification.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Model

TOL_SOLVE = 1e-12
BISECT_WIDTH = 1e-13
MAX_NEWTON = 100


class StepSizeError(ValueError):
    """``delta L >= 1``: the resolvent is not guaranteed to be invertible."""


class SolverError(RuntimeError):
    """The inverse could not be bracketed or did not converge."""


@dataclass(frozen=True)
class ResolventQuery:
    model: Model
    t: float
    delta: float
    y: np.ndarray


@dataclass
class SolveResult:
    x: np.ndarray
    residual: np.ndarray
    iterations: int
    method: str


def resolvent(model: Model, t, delta, x):
    """Forward map ``x - delta f(t, x)``."""
    return x - delta * model.drift(t, x)


def _check_delta(model: Model, delta):
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise StepSizeError("step size must be positive")
    if np.any(delta * model.L >= 1.0):
        raise StepSizeError(
            f"step size {float(np.max(delta))} violates delta*L < 1 with L={model.L}"
        )


def growth_bracket(model: Model, delta, y):
    """Radius ``(1 - L delta)^{-1} (L delta + |y|)`` containing the inverse."""
    Ld = model.L * delta
    return (Ld + np.abs(y)) / (1.0 - Ld)


def _cardano_gle(model: Model, delta, y):
    # delta x^3 + (1 - delta a) x - y = 0, i.e. x^3 + p x + s = 0 with p > 0
    a = model.params["mu"] + 0.5 * model.params["sigma"] ** 2
    p = (1.0 - delta * a) / delta
    half = 0.5 * y / delta  # -s/2
    disc = np.sqrt(half * half + (p / 3.0) ** 3)
    # take the radical whose terms do not cancel, the other follows from u v = -p/3
    w = np.cbrt(half + np.copysign(disc, half))
    x = w - p / (3.0 * w)
    # one Newton polish on the cubic
    fx = x * x * x + p * x - 2.0 * half
    x = x - fx / (3.0 * x * x + p)
    return x


def _quadratic_svm(model: Model, delta, y):
    # on each sign region: delta lam x^2 + (1 - delta lam mu) x - y = 0 up to the sign of x;
    # F is odd and increasing so sign(x) = sign(y)
    lam, mu = model.params["lam"], model.params["mu"]
    c = 1.0 - delta * lam * mu
    return 2.0 * y / (c + np.sqrt(c * c + 4.0 * delta * lam * np.abs(y)))


def _bisect(model: Model, t, delta, y, lo, hi, width=BISECT_WIDTH, max_iter=200):
    it = 0
    while it < max_iter and np.any(hi - lo > width):
        mid = 0.5 * (lo + hi)
        above = resolvent(model, t, delta, mid) > y
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        it += 1
    return 0.5 * (lo + hi), it


def _newton_bisection(model: Model, t, delta, y):
    if model.dim_state != 1:
        raise NotImplementedError("iterative resolvent is implemented for scalar models only")
    R = growth_bracket(model, delta, y) * (1.0 + 1e-12) + 1e-300
    lo, hi = -R, R
    if np.any(resolvent(model, t, delta, lo) > y) or np.any(resolvent(model, t, delta, hi) < y):
        raise SolverError("resolvent root not bracketed by the growth bound")
    x = np.clip(y, lo, hi)
    it = 0
    if model.drift_dx is not None:
        for it in range(1, MAX_NEWTON + 1):
            r = resolvent(model, t, delta, x) - y
            hi = np.where(r > 0, x, hi)
            lo = np.where(r > 0, lo, x)
            if np.all(np.abs(r) <= TOL_SOLVE):
                break
            step = r / (1.0 - delta * model.drift_dx(t, x))
            xn = x - step
            outside = ~((xn > lo) & (xn < hi))
            x = np.where(outside, 0.5 * (lo + hi), xn)
        else:
            x, extra = _bisect(model, t, delta, y, lo, hi)
            it += extra
    else:
        x, it = _bisect(model, t, delta, y, lo, hi)
    return x, it


def invert(model: Model, t, delta, y, method: str | None = None):
    """Vectorised ``F_delta^{-1}(t, y)``; returns ``(x, iterations, method)``."""
    _check_delta(model, delta)
    y = np.asarray(y, dtype=float)
    if method is None:
        method = {"gle": "cardano", "svm32": "piecewise_quadratic"}.get(model.name, "newton_bisection")
    with np.errstate(divide="ignore", invalid="ignore"):
        if method == "cardano":
            x = _cardano_gle(model, delta, y)
            it = 0
        elif method == "piecewise_quadratic":
            x = _quadratic_svm(model, delta, y)
            it = 0
        elif method == "newton_bisection":
            x, it = _newton_bisection(model, t, delta, y)
        elif method == "oracle":
            return (*solve_oracle_array(model, t, delta, y), "oracle")
        else:
            raise ValueError(f"unknown resolvent method {method!r}")
        if method != "newton_bisection":
            res = np.abs(resolvent(model, t, delta, x) - y)
            bad = ~(res <= TOL_SOLVE * np.maximum(1.0, np.abs(y)))
            bad &= np.isfinite(y)
            if np.any(bad):
                # precision loss in the closed form: redo those entries iteratively
                xb, extra = _newton_bisection(model, t, np.broadcast_to(delta, y.shape)[bad]
                                              if np.ndim(delta) else delta, y[bad])
                x = np.array(x, copy=True)
                x[bad] = xb
                it = max(it, extra)
    return x, it, method


def solve_resolvent(query: ResolventQuery, method: str | None = None) -> SolveResult:
    """Unique ``x`` with ``x - delta f(t, x) = y``."""
    x, it, method = invert(query.model, query.t, query.delta, query.y, method)
    residual = np.abs(resolvent(query.model, query.t, query.delta, x) - np.asarray(query.y))
    return SolveResult(x=x, residual=residual, iterations=it, method=method)


def solve_oracle_array(model: Model, t, delta, y):
    if model.dim_state != 1:
        raise NotImplementedError("bisection oracle requires a scalar model")
    _check_delta(model, delta)
    y = np.asarray(y, dtype=float)
    R = growth_bracket(model, delta, y) * (1.0 + 1e-12) + 1e-300
    return _bisect(model, t, delta, y, -R, R)


def solve_resolvent_oracle(query: ResolventQuery) -> SolveResult:
    """Bisection on ``x -> F_delta(t, x) - y`` from the growth-bound bracket."""
    x, it = solve_oracle_array(query.model, query.t, query.delta, query.y)
    residual = np.abs(resolvent(query.model, query.t, query.delta, x) - np.asarray(query.y))
    return SolveResult(x=x, residual=residual, iterations=it, method="oracle")


def stability_constant(L: float, h_bar: float) -> float:
    """``C1 = L (2 - L h) (1 - L h)^{-2}``, chord of ``(1 - L delta)^{-2}`` on ``[0, h]``."""
    return L * (2.0 - L * h_bar) / (1.0 - L * h_bar) ** 2


def first_order_constant(L: float, h_bar: float) -> float:
    """``C2 = L (1 - L h)^{-1}``."""
    return L / (1.0 - L * h_bar)


def second_order_constant(L: float, h_bar: float, q: float) -> float:
    """Explicit majorant for the second-order expansion constant.

    Chains ``|F^{-1} x - x - delta f| <= C2 L delta^2 (1 + |x|^q)(1 + |x|^{q-1} + |F^{-1} x|^{q-1})``
    with the growth bound ``|F^{-1} x| <= K^{1/(q-1)} max(1, |x|)`` where
    ``K = (1 - L h)^{-(q-1)} (L h + 1)^{q-1}``; the last factor is then at most
    ``(2 + K) max(1, |x|)^{q-1}`` and ``(1 + |x|^q) max(1, |x|)^{q-1} <= 2^q (1 + |x|^{2q-1})``.
    """
    K = (1.0 - L * h_bar) ** (-(q - 1.0)) * (L * h_bar + 1.0) ** (q - 1.0)
    return first_order_constant(L, h_bar) * L * (1.0 + 1.0 + K) * 2.0**q


def _h_bar(model: Model, h_bar):
    h_bar = model.step_bound if h_bar is None else h_bar
    if h_bar * model.L >= 1.0:
        raise StepSizeError("upper step bound must satisfy h_bar * L < 1")
    return h_bar


def _norm(v):
    return np.sqrt(np.sum(v * v, axis=-1))


def _col(delta):
    """Per-sample step sizes ``(n,)`` as a column broadcasting against states."""
    d = np.asarray(delta, dtype=float)
    return d, (d[..., None] if d.ndim else d)


def inverse_lipschitz_margin(model: Model, t, delta, x1, x2):
    """``(1 - L delta)^{-1} |x1 - x2| - |F^-1 x1 - F^-1 x2|``.

    ``delta`` is a scalar or an array of shape ``x1.shape[:-1]``.
    """
    d, dc = _col(delta)
    y1 = invert(model, t, dc, x1)[0]
    y2 = invert(model, t, dc, x2)[0]
    return _norm(x1 - x2) / (1.0 - model.L * d) - _norm(y1 - y2)


def resolvent_stability_margin(model: Model, t, delta, x1, x2, h_bar=None):
    """Slack of the resolvent stability bound with ``C1 = L(2 - L h)(1 - L h)^{-2}``.

    Right side ``(1 + C1 delta)|x1 - x2|^2``, left side
    ``|F^-1 x1 - F^-1 x2|^2 + eta delta sum_r |g^r(t, F^-1 x1) - g^r(t, F^-1 x2)|^2``.
    """
    C1 = stability_constant(model.L, _h_bar(model, h_bar))
    d, dc = _col(delta)
    y1 = invert(model, t, dc, x1)[0]
    y2 = invert(model, t, dc, x2)[0]
    dg = model.diffusion(t, y1) - model.diffusion(t, y2)
    lhs = np.sum((y1 - y2) ** 2, axis=-1) + model.eta * d * np.sum(dg * dg, axis=(-2, -1))
    return (1.0 + C1 * d) * np.sum((x1 - x2) ** 2, axis=-1) - lhs


def local_expansion_margins(model: Model, t, delta, x, h_bar=None):
    """Slack of the first- and second-order expansions of ``F_delta^{-1}``.

    ``m1 = delta C2 (1 + |x|^q) - |F^-1 x - x|`` and
    ``m2 = delta^2 C3 (1 + |x|^{2q-1}) - |F^-1 x - x - delta f(t, x)|``.
    """
    h_bar = _h_bar(model, h_bar)
    L, q = model.L, model.q
    C2 = first_order_constant(L, h_bar)
    C3 = second_order_constant(L, h_bar, q)
    d, dc = _col(delta)
    y = invert(model, t, dc, x)[0]
    nx = _norm(x)
    m1 = d * C2 * (1.0 + nx**q) - _norm(y - x)
    m2 = d * d * C3 * (1.0 + nx ** (2 * q - 1)) - _norm(y - x - dc * model.drift(t, x))
    return m1, m2


def second_order_residual(model: Model, t, delta, x):
    """``|F_delta^{-1}(t, x) - x - delta f(t, x)|``."""
    d, dc = _col(delta)
    y = invert(model, t, dc, x)[0]
    return _norm(y - x - dc * model.drift(t, x))

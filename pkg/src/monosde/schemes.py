"""Euler-type one-step maps and the grid integrator.

All step functions are vectorised: ``x`` has shape ``(..., d)`` and the
Brownian increment ``dW`` shape ``(..., m)``.  A scalar ``x`` is accepted
for one-dimensional models and a scalar is returned.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .implicit import StepSizeError, invert
from .model import Model
from .paths import TimeGrid


class SchemeId(str, enum.Enum):
    EM = "em"
    SSBE = "ssbe"
    BEM = "bem"
    PEM = "pem"

    @classmethod
    def parse(cls, name) -> "SchemeId":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(f"unknown scheme {name!r}; choose from {[s.value for s in cls]}") from None

    @property
    def implicit(self) -> bool:
        return self in (SchemeId.SSBE, SchemeId.BEM)


class IntegrationError(RuntimeError):
    """A step failed; ``step`` is the 1-based index of the failing step."""

    def __init__(self, message, step):
        super().__init__(f"step {step}: {message}")
        self.step = step


class SchemeOverflowError(IntegrationError):
    pass


@dataclass
class GridFunction:
    """Values ``X_h(t_n)``, ``n = 0..N``, stacked along the first axis."""

    scheme: SchemeId
    grid: TimeGrid
    values: np.ndarray
    projection_events: Optional[np.ndarray] = None  # (N, ...) booleans, PEM only

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1]

    @property
    def projected(self) -> Optional[np.ndarray]:
        """Whether each sample was projected at least once."""
        if self.projection_events is None:
            return None
        return self.projection_events.any(axis=0)


def _state(model: Model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and model.dim_state == 1:
        return x[None], True
    return x, False


def _noise(model: Model, dW):
    dW = np.asarray(dW, dtype=float)
    if dW.ndim == 0 and model.dim_noise == 1:
        dW = dW[None]
    return dW


def _out(x, scalar):
    return x[0] if scalar else x


def _diffuse(model: Model, t, x, dW):
    return np.einsum("...dm,...m->...d", model.diffusion(t, x), dW)


def project(x, delta, alpha):
    """``min(1, delta^{-alpha} |x|^{-1}) x``; the origin maps to itself.

    ``x`` is a state with trailing dimension axis, or a scalar; ``delta`` is
    a scalar or an array of shape ``x.shape[:-1]``.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xv = x[None] if scalar else x
    radius = np.asarray(delta, dtype=float) ** (-alpha)
    norm = np.sqrt(np.sum(xv * xv, axis=-1, keepdims=True))
    rad = radius[..., None] if np.ndim(radius) else radius
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > rad, rad / norm, 1.0)
    out = xv * scale
    return out[0] if scalar else out


def projection_flags(x, delta, alpha):
    """``|x| > delta^{-alpha}`` per sample."""
    x = np.asarray(x, dtype=float)
    xv = x[None] if x.ndim == 0 else x
    return np.sqrt(np.sum(xv * xv, axis=-1)) > np.asarray(delta, dtype=float) ** (-alpha)


def step_em(model: Model, x, t, delta, dW):
    """Euler-Maruyama: ``x + delta f(t, x) + sum_r g^r(t, x) dW^r``."""
    x, scalar = _state(model, x)
    dW = _noise(model, dW)
    return _out(x + delta * model.drift(t, x) + _diffuse(model, t, x, dW), scalar)


def step_ssbe(model: Model, x, t, delta, dW):
    """Split-step backward Euler: implicit drift stage, diffusion at ``t + delta``."""
    x, scalar = _state(model, x)
    dW = _noise(model, dW)
    t_new = t + delta
    xbar = invert(model, t_new, delta, x)[0]
    return _out(xbar + _diffuse(model, t_new, xbar, dW), scalar)


def step_bem(model: Model, x, t, delta, dW):
    """Backward Euler-Maruyama: diffusion at the old point, then implicit drift."""
    x, scalar = _state(model, x)
    dW = _noise(model, dW)
    return _out(invert(model, t + delta, delta, x + _diffuse(model, t, x, dW))[0], scalar)


def step_pem(model: Model, x, t, delta, dW, alpha=None):
    """Projected Euler-Maruyama; returns ``(state, projected)``."""
    alpha = model.alpha if alpha is None else alpha
    x, scalar = _state(model, x)
    dW = _noise(model, dW)
    flags = projection_flags(x, delta, alpha)
    xc = project(x, delta, alpha)
    new = xc + delta * model.drift(t, xc) + _diffuse(model, t, xc, dW)
    if scalar:
        return new[0], bool(flags)
    return new, flags


_STEPS = {
    SchemeId.EM: step_em,
    SchemeId.SSBE: step_ssbe,
    SchemeId.BEM: step_bem,
}


def check_grid(scheme, model: Model, grid: TimeGrid):
    """Reject grids violating the scheme's step bound."""
    scheme = SchemeId.parse(scheme)
    h = grid.max_step
    if scheme.implicit and h * model.L >= 1.0:
        raise StepSizeError(f"{scheme.value}: max step {h} violates h*L < 1 (L={model.L})")
    if not scheme.implicit and h > 1.0:
        raise StepSizeError(f"{scheme.value}: max step {h} exceeds 1")


def _run(scheme, model, grid, increments, x0, alpha):
    scheme = SchemeId.parse(scheme)
    check_grid(scheme, model, grid)
    inc = np.asarray(increments, dtype=float)
    if inc.shape[-1] != grid.N or inc.shape[-2] != model.dim_noise:
        raise ValueError(
            f"increments of shape {inc.shape} do not match grid with N={grid.N} "
            f"and m={model.dim_noise}"
        )
    batch = inc.shape[:-2]
    x = np.broadcast_to(model.X0 if x0 is None else np.asarray(x0, dtype=float),
                        batch + (model.dim_state,)).copy()
    alpha = model.alpha if alpha is None else alpha
    points = grid.points
    steps = grid.steps
    events = np.zeros((grid.N,) + batch, dtype=bool) if scheme is SchemeId.PEM else None
    step = _STEPS.get(scheme)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(grid.N):
            dW = inc[..., :, i]
            t, h = points[i], steps[i]
            try:
                if step is None:
                    x, events[i] = step_pem(model, x, t, h, dW, alpha)
                else:
                    x = step(model, x, t, h, dW)
            except (StepSizeError, ArithmeticError, RuntimeError) as exc:
                raise IntegrationError(str(exc), i + 1) from exc
            yield i, x, events


def integrate(scheme, model: Model, grid: TimeGrid, increments, x0=None, alpha=None) -> GridFunction:
    """Iterate the one-step map of ``scheme`` over ``grid``.

    ``increments`` has shape ``(..., m, N)``.  Raises
    :class:`SchemeOverflowError` at the first step producing a non-finite
    state.
    """
    scheme = SchemeId.parse(scheme)
    inc = np.asarray(increments, dtype=float)
    x_start = np.broadcast_to(model.X0 if x0 is None else np.asarray(x0, dtype=float),
                              inc.shape[:-2] + (model.dim_state,)).copy()
    values = [x_start]
    events = None
    for i, x, events in _run(scheme, model, grid, inc, x0, alpha):
        if not np.all(np.isfinite(x)):
            raise SchemeOverflowError("non-finite state", i + 1)
        values.append(x)
    return GridFunction(scheme, grid, np.stack(values), events)


def integrate_terminal(scheme, model: Model, grid: TimeGrid, increments, x0=None, alpha=None):
    """Terminal values for a batch of samples without storing the path.

    Returns ``(x_T, projected, overflow)`` where ``projected`` (PEM only,
    else ``None``) marks samples with at least one projection event and
    ``overflow`` marks samples whose state became non-finite.
    """
    x = events = None
    for _, x, events in _run(scheme, model, grid, increments, x0, alpha):
        pass
    overflow = ~np.all(np.isfinite(x), axis=-1)
    projected = None if events is None else events.any(axis=0)
    return x, projected, overflow


def pem_stability_constant(L: float) -> float:
    return 2.0 * L + 9.0 * L**2


def projection_lipschitz_margin(x1, x2, delta, alpha):
    """``|x1 - x2| - |x1° - x2°|``; nonnegative since the projection is nonexpansive."""
    d = np.asarray(delta, dtype=float)
    p1 = project(x1, d, alpha)
    p2 = project(x2, d, alpha)
    return np.sqrt(np.sum((x1 - x2) ** 2, axis=-1)) - np.sqrt(np.sum((p1 - p2) ** 2, axis=-1))


def pem_stability_margin(model: Model, t, delta, x1, x2, alpha=None):
    """Slack of the pointwise PEM stability bound with ``C = 2L + 9L^2``.

    Right side ``(1 + C delta)|x1 - x2|^2``; left side
    ``|x1° - x2° + delta (f(t, x1°) - f(t, x2°))|^2 + 2 eta delta sum_r |g^r(t, x1°) - g^r(t, x2°)|^2``.
    """
    alpha = model.alpha if alpha is None else alpha
    d = np.asarray(delta, dtype=float)
    dc = d[..., None] if d.ndim else d
    p1 = project(x1, d, alpha)
    p2 = project(x2, d, alpha)
    mean = p1 - p2 + dc * (model.drift(t, p1) - model.drift(t, p2))
    dg = model.diffusion(t, p1) - model.diffusion(t, p2)
    lhs = np.sum(mean**2, axis=-1) + 2.0 * model.eta * d * np.sum(dg * dg, axis=(-2, -1))
    C = pem_stability_constant(model.L)
    return (1.0 + C * d) * np.sum((x1 - x2) ** 2, axis=-1) - lhs

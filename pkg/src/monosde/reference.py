"""Exact and fine-grid reference solutions driven by the master path.

Functions accept a :class:`~monosde.paths.BrownianPath` or a raw batch of
increments of shape ``(n, m, 2^K)`` together with ``fine_level`` and ``T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Model
from .paths import BrownianPath, GridError, TimeGrid, coarsen_uniform
from .schemes import SchemeId, integrate, integrate_terminal

REFERENCE_KINDS = ("gle_exact", "gbm_exact", "numeric_fine")


@dataclass(frozen=True)
class ReferenceSpec:
    kind: str
    quadrature_level: int = 12
    fine_scheme: SchemeId = SchemeId.BEM
    fine_level: int = 14

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(f"unknown reference kind {self.kind!r}; choose from {REFERENCE_KINDS}")
        object.__setattr__(self, "fine_scheme", SchemeId.parse(self.fine_scheme))

    @property
    def required_level(self) -> int:
        if self.kind == "gle_exact":
            return self.quadrature_level
        if self.kind == "numeric_fine":
            return self.fine_level
        return 0

    @classmethod
    def default_for(cls, model_name: str) -> "ReferenceSpec":
        if model_name == "gle":
            return cls("gle_exact", quadrature_level=12)
        if model_name == "gbm":
            return cls("gbm_exact")
        return cls("numeric_fine", fine_scheme=SchemeId.BEM, fine_level=14)


def _unpack(path, fine_level, T):
    if isinstance(path, BrownianPath):
        return path.increments, path.level, path.grid.T
    if fine_level is None or T is None:
        raise GridError("raw increments need fine_level and T")
    return np.asarray(path, dtype=float), fine_level, T


def brownian_at(increments, fine_level: int, level: int) -> np.ndarray:
    """``W`` at the grid points of ``level`` (leading zero included), channel axis kept."""
    inc = coarsen_uniform(increments, fine_level, level)
    zero = np.zeros(inc.shape[:-1] + (1,))
    return np.concatenate([zero, np.cumsum(inc, axis=-1)], axis=-1)


def gle_exact_at_T(path, mu: float, sigma: float, X0: float, quadrature_level: int = 12,
                   fine_level: Optional[int] = None, T: Optional[float] = None):
    """Closed-form GLE solution at ``T`` with a left-endpoint Riemann sum.

    ``X(T) = X0 exp(mu T + sigma W(T)) (1 + 2 X0^2 int_0^T exp(2 mu s + 2 sigma W(s)) ds)^{-1/2}``.
    Returns shape ``(..., 1)`` (a state vector).
    """
    return gle_exact_path(path, mu, sigma, X0, quadrature_level, quadrature_level,
                          fine_level=fine_level, T=T)[..., -1, :]


def gle_exact_path(path, mu: float, sigma: float, X0: float, level: int,
                   quadrature_level: int = 12, fine_level: Optional[int] = None,
                   T: Optional[float] = None):
    """Closed-form GLE solution at every point of the uniform grid of ``level``.

    Output shape ``(..., 2^level + 1, 1)``.
    """
    inc, K, T = _unpack(path, fine_level, T)
    if quadrature_level > K or level > quadrature_level:
        raise GridError("quadrature grid must lie between the output grid and the path grid")
    hq = math.ldexp(T, -quadrature_level)
    W = brownian_at(inc[..., 0, :], K, quadrature_level)
    s = np.arange(W.shape[-1]) * hq
    integrand = np.exp(2.0 * mu * s + 2.0 * sigma * W)
    # left endpoint rule: the integral up to s_j uses nodes s_0..s_{j-1}
    cum = np.concatenate([np.zeros(W.shape[:-1] + (1,)), np.cumsum(integrand[..., :-1], axis=-1) * hq], axis=-1)
    stride = 2 ** (quadrature_level - level)
    Wl, sl, cl = W[..., ::stride], s[::stride], cum[..., ::stride]
    x = X0 * np.exp(mu * sl + sigma * Wl) / np.sqrt(1.0 + 2.0 * X0**2 * cl)
    return x[..., None]


def gbm_exact_at_T(path, mu: float, sigma: float, X0: float,
                   fine_level: Optional[int] = None, T: Optional[float] = None):
    """``X0 exp((mu - sigma^2/2) T + sigma W(T))`` as a state of shape ``(..., 1)``."""
    inc, K, T = _unpack(path, fine_level, T)
    WT = coarsen_uniform(inc[..., 0, :], K, 0)
    return X0 * np.exp((mu - 0.5 * sigma**2) * T + sigma * WT)


def gbm_exact_path(path, mu: float, sigma: float, X0: float, level: int,
                   fine_level: Optional[int] = None, T: Optional[float] = None):
    inc, K, T = _unpack(path, fine_level, T)
    W = brownian_at(inc[..., 0, :], K, level)
    t = np.arange(W.shape[-1]) * math.ldexp(T, -level)
    return (X0 * np.exp((mu - 0.5 * sigma**2) * t + sigma * W))[..., None]


def numeric_reference_at_T(path, model: Model, fine_level: int, fine_scheme=SchemeId.BEM,
                           path_level: Optional[int] = None, T: Optional[float] = None):
    """Terminal value of ``fine_scheme`` at step ``T 2^-fine_level`` on the same noise.

    Returns ``(x_T, overflow)``.
    """
    inc, K, T = _unpack(path, path_level, T)
    if fine_level > K:
        raise GridError("reference level is finer than the path grid")
    grid = TimeGrid.uniform(T, fine_level)
    x, _, overflow = integrate_terminal(fine_scheme, model, grid, coarsen_uniform(inc, K, fine_level))
    return x, overflow


def numeric_reference_path(path, model: Model, fine_level: int, level: int, fine_scheme=SchemeId.BEM,
                           path_level: Optional[int] = None, T: Optional[float] = None):
    """Fine-grid reference sampled at the points of the coarser uniform grid of ``level``."""
    inc, K, T = _unpack(path, path_level, T)
    grid = TimeGrid.uniform(T, fine_level)
    gf = integrate(fine_scheme, model, grid, coarsen_uniform(inc, K, fine_level))
    return gf.values[:: 2 ** (fine_level - level)]


def reference_at_T(spec: ReferenceSpec, model: Model, increments, path_level: int):
    """Dispatch on ``spec.kind``; returns ``(x_T, overflow)`` for a batch."""
    T = model.T
    if spec.kind == "gle_exact":
        if model.name != "gle":
            raise ValueError("gle_exact reference requires the gle model")
        pr = model.params
        x = gle_exact_at_T(increments, pr["mu"], pr["sigma"], pr["X0"], spec.quadrature_level,
                           fine_level=path_level, T=T)
    elif spec.kind == "gbm_exact":
        if model.name != "gbm":
            raise ValueError("gbm_exact reference requires the gbm model")
        pr = model.params
        x = gbm_exact_at_T(increments, pr["mu"], pr["sigma"], pr["X0"], fine_level=path_level, T=T)
    else:
        return numeric_reference_at_T(increments, model, spec.fine_level, spec.fine_scheme,
                                      path_level=path_level, T=T)
    return x, ~np.all(np.isfinite(x), axis=-1)

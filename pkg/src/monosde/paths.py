"""Seeded Brownian increments on a dyadic master grid.

Every sample index owns its own Philox stream, keyed by
``(master_seed, sample_index, channel)``, so a path is a pure function of
those three numbers and samples can be produced in any order or in
parallel.  Coarsening to a uniform dyadic grid adds neighbouring
increments pairwise, level by level, so the increments of level ``k - 1``
are *bit-exactly* the pairwise sums of those of level ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np


class GridError(ValueError):
    """A time grid is invalid or not aligned with the master grid."""


@dataclass(frozen=True)
class TimeGrid:
    """Vector of positive step sizes summing to ``T``."""

    steps: np.ndarray
    level: Optional[int] = None  # dyadic level when uniform, h = T 2^-level

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=float).reshape(-1)
        if steps.size == 0 or not np.all(steps > 0) or not np.all(np.isfinite(steps)):
            raise GridError("step sizes must be positive and finite")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def uniform(cls, T: float, level: int) -> "TimeGrid":
        if not (T > 0 and math.isfinite(T)):
            raise GridError(f"horizon must be positive and finite, got {T}")
        if level < 0:
            raise GridError("dyadic level must be nonnegative")
        n = 2**level
        return cls(np.full(n, math.ldexp(T, -level)), level=level)

    @property
    def N(self) -> int:
        return self.steps.size

    @property
    def T(self) -> float:
        return float(self.points[-1])

    @property
    def points(self) -> np.ndarray:
        if self.level is not None:
            return np.arange(self.N + 1) * self.steps[0]
        return np.concatenate([[0.0], np.cumsum(self.steps)])

    @property
    def max_step(self) -> float:
        return float(self.steps.max())


@dataclass(frozen=True)
class BrownianPath:
    """Increments ``W^r(t_j) - W^r(t_{j-1})`` on a uniform dyadic fine grid.

    ``increments`` has shape ``(m, N_fine)``; batches built by
    :func:`generate_paths` stack these along a leading sample axis.
    """

    grid: TimeGrid
    increments: np.ndarray
    master_seed: int
    sample_index: int

    @property
    def level(self) -> int:
        return self.grid.level

    @property
    def dim_noise(self) -> int:
        return self.increments.shape[0]

    def terminal(self) -> np.ndarray:
        """``W(T)`` per channel, via the same pairwise tree as coarsening."""
        return coarsen_uniform(self.increments, self.level, 0)[..., 0]


def _stream(master_seed: int, sample_index: int, channel: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(sample_index), int(channel)))
    return np.random.Generator(np.random.Philox(seq))


def _check_level(T: float, K: int):
    if not (T > 0 and math.isfinite(T)):
        raise GridError(f"horizon must be positive and finite, got {T}")
    if K < 0 or K > 30:
        raise GridError(f"fine dyadic level {K} out of range")


def generate_path(master_seed: int, sample_index: int, m: int, K: int, T: float = 1.0) -> BrownianPath:
    """One Brownian path with ``m`` channels on the grid of step ``T 2^-K``."""
    _check_level(T, K)
    grid = TimeGrid.uniform(T, K)
    sd = math.sqrt(grid.steps[0])
    inc = np.empty((m, grid.N))
    for r in range(m):
        inc[r] = sd * _stream(master_seed, sample_index, r).standard_normal(grid.N)
    return BrownianPath(grid, inc, int(master_seed), int(sample_index))


def generate_paths(master_seed: int, indices: Iterable[int], m: int, K: int, T: float = 1.0) -> np.ndarray:
    """Increments of several paths, shape ``(len(indices), m, 2^K)``.

    Row ``i`` is bit-identical to ``generate_path(master_seed, indices[i], ...)``.
    """
    _check_level(T, K)
    indices = list(indices)
    n = 2**K
    sd = math.sqrt(math.ldexp(T, -K))
    out = np.empty((len(indices), m, n))
    for row, idx in enumerate(indices):
        for r in range(m):
            out[row, r] = sd * _stream(master_seed, idx, r).standard_normal(n)
    return out


def coarsen_uniform(increments: np.ndarray, fine_level: int, level: int) -> np.ndarray:
    """Sum fine increments (last axis, length ``2^fine_level``) down to ``2^level``."""
    if level > fine_level or level < 0:
        raise GridError(f"cannot coarsen level {fine_level} to level {level}")
    out = increments
    for _ in range(fine_level - level):
        out = out[..., 0::2] + out[..., 1::2]
    return out


def coarsen(path, coarse: TimeGrid, fine_level: Optional[int] = None, T: Optional[float] = None) -> np.ndarray:
    """Increments of ``path`` over the intervals of ``coarse``.

    ``path`` is a :class:`BrownianPath` or a raw increment array whose last
    axis is the fine time axis (then ``fine_level`` and ``T`` are needed).
    Uniform dyadic targets use the pairwise tree; other aligned grids sum
    the spanned fine increments left to right.
    """
    if isinstance(path, BrownianPath):
        inc, K, T = path.increments, path.level, path.grid.T
    else:
        inc = np.asarray(path)
        if fine_level is None or T is None:
            raise GridError("raw increments need fine_level and T")
        K = fine_level
    h_fine = math.ldexp(T, -K)
    if coarse.level is not None:
        if coarse.level > K or not math.isclose(coarse.T, T, rel_tol=1e-12):
            raise GridError("coarse grid is not a subgrid of the fine grid")
        return coarsen_uniform(inc, K, coarse.level)
    ratio = coarse.points / h_fine
    ticks = np.rint(ratio)
    if not np.allclose(ratio, ticks, rtol=0, atol=1e-9) or ticks[-1] != inc.shape[-1]:
        raise GridError("coarse grid points do not lie on the fine grid")
    starts = ticks[:-1].astype(np.intp)
    out = np.add.reduceat(inc, starts, axis=-1)
    return out

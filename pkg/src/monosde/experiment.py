"""Monte Carlo strong-error estimation and convergence tables.

Samples are processed in fixed-size batches of consecutive sample
indices.  Each batch draws its own master paths, computes the reference
and every (scheme, level) terminal value on coarsenings of those paths,
and returns per-sample squared gaps.  Batches are concatenated in index
order before any reduction, so the report does not depend on how many
workers processed the batches.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import make_model
from .paths import TimeGrid, coarsen_uniform, generate_paths
from .reference import ReferenceSpec, reference_at_T
from .schemes import SchemeId, check_grid, integrate_terminal

BATCH_SIZE = 500
CSV_COLUMNS = ("scheme", "h_level", "h", "error", "mc_std_error", "eoc",
               "proj_fraction", "proj_total", "overflow_count")


@dataclass
class ExperimentConfig:
    model: str = "gle"
    params: dict = field(default_factory=dict)
    schemes: Sequence[str] = ("ssbe", "bem", "pem")
    levels: Sequence[int] = (6, 7, 8, 9, 10, 11)
    samples: int = 10_000
    seed: int = 42
    reference: Optional[ReferenceSpec] = None
    alpha: Optional[float] = None  # PEM projection exponent override

    def __post_init__(self):
        self.schemes = tuple(SchemeId.parse(s) for s in self.schemes)
        self.levels = tuple(sorted(int(k) for k in self.levels))
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        if not self.levels:
            raise ValueError("at least one step level is required")
        if self.samples < 100:
            raise ValueError("at least 100 samples are required")
        if self.reference is None:
            self.reference = ReferenceSpec.default_for(self.model)
        exact_for = {"gle_exact": "gle", "gbm_exact": "gbm"}.get(self.reference.kind)
        if exact_for is not None and exact_for != self.model:
            raise ValueError(f"{self.reference.kind} reference requires the {exact_for} model")
        model = self.build_model()
        for s in self.schemes:
            for k in self.levels:
                check_grid(s, model, TimeGrid.uniform(model.T, k))
        if self.reference.kind == "numeric_fine":
            check_grid(self.reference.fine_scheme, model,
                       TimeGrid.uniform(model.T, self.reference.fine_level))

    def build_model(self):
        return make_model(self.model, **self.params)

    @property
    def path_level(self) -> int:
        return max(max(self.levels), self.reference.required_level)

    def echo(self) -> dict:
        ref = asdict(self.reference)
        ref["fine_scheme"] = self.reference.fine_scheme.value
        return {
            "model": self.model,
            "params": dict(self.params),
            "schemes": [s.value for s in self.schemes],
            "levels": list(self.levels),
            "samples": self.samples,
            "seed": self.seed,
            "reference": ref,
            "alpha": self.alpha,
        }


@dataclass
class CellResult:
    scheme: str
    h_level: int
    h: float
    error: float
    mc_std_error: float
    eoc: Optional[float] = None
    proj_fraction: Optional[float] = None
    proj_total: Optional[int] = None
    overflow_count: int = 0


@dataclass
class ErrorReport:
    config: dict
    cells: list
    slopes: dict
    reference_overflow: int = 0

    def cell(self, scheme, level) -> CellResult:
        name = SchemeId.parse(scheme).value
        for c in self.cells:
            if c.scheme == name and c.h_level == level:
                return c
        raise KeyError((name, level))

    def column(self, scheme):
        name = SchemeId.parse(scheme).value
        return [c for c in self.cells if c.scheme == name]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.config, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in self.cells:
            w.writerow([_fmt(getattr(c, col)) for col in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config,
                "seed": self.config.get("seed"),
                "columns": list(CSV_COLUMNS),
                "rows": [{col: _jsonable(getattr(c, col)) for col in CSV_COLUMNS} for c in self.cells],
                "slopes": {k: _jsonable(v) for k, v in self.slopes.items()},
                "reference_overflow": self.reference_overflow,
            },
            indent=2,
            sort_keys=True,
        )

    def table(self) -> str:
        lines = [f"{'scheme':<6} {'h':>8} {'error':>10} {'+/-':>9} {'EOC':>6} {'#-Proj.':>8} {'overflow':>8}"]
        for c in self.cells:
            eoc = "" if c.eoc is None else f"{c.eoc:.2f}"
            proj = "" if c.proj_total is None else str(c.proj_total)
            lines.append(f"{c.scheme:<6} {'2^-' + str(c.h_level):>8} {c.error:>10.5f} "
                         f"{c.mc_std_error:>9.2e} {eoc:>6} {proj:>8} {c.overflow_count:>8}")
        for s, v in self.slopes.items():
            lines.append(f"fitted order {s}: {v:.3f}" if v is not None else f"fitted order {s}: n/a")
        return "\n".join(lines)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def eoc(errors):
    """Pairwise orders ``log(e_i / e_{i-1}) / log(h_i / h_{i-1})``.

    ``errors`` is a sequence of ``(h, error)``.  Entries involving a
    nonpositive or non-finite error are ``None``.
    """
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("EOC needs at least two step sizes")
    out = []
    for (h0, e0), (h1, e1) in zip(errors[:-1], errors[1:]):
        if not (e0 > 0 and e1 > 0 and math.isfinite(e0) and math.isfinite(e1)):
            out.append(None)
        else:
            out.append((math.log(e1) - math.log(e0)) / (math.log(h1) - math.log(h0)))
    return out


def fit_order(errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    h, e = (np.asarray(v, dtype=float) for v in zip(*errors))
    if np.unique(h).size < 2:
        raise ValueError("fitting an order needs at least two distinct step sizes")
    if np.any(~(e > 0)) or not np.all(np.isfinite(e)):
        raise ValueError("fitting an order needs positive finite errors")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def projection_stats(projected) -> tuple:
    """``(fraction, count)`` of samples with at least one projection event.

    ``projected`` is a boolean per sample, or a per-step event array of shape
    ``(N, samples)`` such as :attr:`GridFunction.projection_events`.
    """
    projected = np.asarray(projected, dtype=bool)
    if projected.ndim == 2:
        projected = projected.any(axis=0)
    total = int(np.count_nonzero(projected))
    return total / projected.size, total


def rms_with_error(sq_gaps: np.ndarray):
    """RMS of the gaps and its delta-method standard error."""
    M = sq_gaps.size
    mean = float(np.mean(sq_gaps))
    rms = math.sqrt(mean)
    se_mean = float(np.std(sq_gaps, ddof=1)) / math.sqrt(M) if M > 1 else math.nan
    se = se_mean / (2.0 * rms) if rms > 0 else 0.0
    return rms, se


def _run_batch(args):
    config, start, stop = args
    model = config.build_model()
    K = config.path_level
    inc = generate_paths(config.seed, range(start, stop), model.dim_noise, K, model.T)
    ref, ref_over = reference_at_T(config.reference, model, inc, K)
    out = {}
    with np.errstate(over="ignore", invalid="ignore"):
        for s in config.schemes:
            for k in config.levels:
                grid = TimeGrid.uniform(model.T, k)
                x, projected, over = integrate_terminal(s, model, grid, coarsen_uniform(inc, K, k),
                                                        alpha=config.alpha)
                sq = np.sum((x - ref) ** 2, axis=-1)
                out[(s.value, k)] = (sq, projected, over)
    return out, ref_over


def _batches(config):
    M = config.samples
    return [(config, i, min(i + BATCH_SIZE, M)) for i in range(0, M, BATCH_SIZE)]


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ErrorReport:
    """Full (scheme x level) strong-error table for ``config``."""
    tasks = _batches(config)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_batch, tasks))
    else:
        results = [_run_batch(t) for t in tasks]

    ref_over = np.concatenate([r[1] for r in results])
    cells = []
    slopes = {}
    for s in config.schemes:
        col = []
        for k in config.levels:
            key = (s.value, k)
            sq = np.concatenate([r[0][key][0] for r in results])
            over = np.concatenate([r[0][key][2] for r in results]) | ref_over
            n_over = int(np.count_nonzero(over))
            if n_over:
                err, se = math.inf, math.nan
            else:
                err, se = rms_with_error(sq)
            cell = CellResult(s.value, k, math.ldexp(config.build_model().T, -k), err, se,
                              overflow_count=n_over)
            if s is SchemeId.PEM:
                proj = np.concatenate([r[0][key][1] for r in results])
                cell.proj_fraction, cell.proj_total = projection_stats(proj)
            col.append(cell)
        if len(col) > 1:
            for c, v in zip(col[1:], eoc([(c.h, c.error) for c in col])):
                c.eoc = v
            try:
                slopes[s.value] = fit_order([(c.h, c.error) for c in col])
            except ValueError:
                slopes[s.value] = None
        cells.extend(col)
    return ErrorReport(config.echo(), cells, slopes, int(np.count_nonzero(ref_over)))


def strong_error(scheme, model_name: str, level: int, samples: int, seed: int,
                 reference: Optional[ReferenceSpec] = None, params: Optional[dict] = None,
                 workers: int = 1):
    """``(error, mc_std_error)`` for one scheme at step ``T 2^-level``."""
    cfg = ExperimentConfig(model=model_name, params=params or {}, schemes=(scheme,),
                           levels=(level,), samples=samples, seed=seed, reference=reference)
    cell = run_experiment(cfg, workers=workers).cells[0]
    return cell.error, cell.mc_std_error

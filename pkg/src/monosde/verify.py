"""Sampled inequality suites for the models, the resolvent and the projection.

Each check draws random points, evaluates the slack of one inequality and
records the worst margin with its witness.  A check passes when the
worst margin is at least ``-tolerance``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .implicit import (inverse_lipschitz_margin, invert, local_expansion_margins,
                       resolvent_stability_margin, solve_oracle_array, resolvent)
from .model import INEQUALITIES, Model, make_gle, make_svm32, sample_assumption
from .schemes import pem_stability_margin, projection_lipschitz_margin

SUITES = ("assumptions", "resolvent", "projection", "all")
MARGIN_TOL = 1e-9
PROJECTION_TOL = 1e-12
ORACLE_TOL = 1e-10


@dataclass
class CheckResult:
    name: str
    model: str
    samples: int
    worst_margin: float
    tolerance: float
    witness: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.worst_margin >= -self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.model:<6} {self.name:<28} n={self.samples:<8d} "
                f"worst margin {self.worst_margin: .3e} (tol {self.tolerance:.0e})")


def default_models():
    return [make_gle(), make_svm32()]


def _worst(name, model, margins, tol, **points):
    margins = np.asarray(margins)
    i = int(np.argmin(np.where(np.isnan(margins), -np.inf, margins)))
    witness = {k: np.asarray(v)[i].tolist() if np.ndim(v) else float(v) for k, v in points.items()}
    return CheckResult(name, model.name, margins.size, float(margins[i]), tol, witness)


def assumption_checks(model: Model, samples: int, seed: int, x_max: float = 10.0):
    out = []
    for k, ineq in enumerate(INEQUALITIES):
        rep = sample_assumption(model, ineq, {"x_max": x_max}, samples, seed + k)
        out.append(CheckResult(ineq, model.name, rep.samples_tested, rep.worst_margin,
                               MARGIN_TOL, rep.witness))
    return out


def _resolvent_points(model: Model, n, rng, x_max):
    h_bar = model.step_bound
    delta = rng.uniform(0.0, h_bar, n)
    delta[delta == 0.0] = h_bar
    t = rng.uniform(0.0, model.T)
    x1 = rng.uniform(-x_max, x_max, (n, model.dim_state))
    x2 = rng.uniform(-x_max, x_max, (n, model.dim_state))
    return t, delta, x1, x2


def oracle_check(model: Model, samples: int, seed: int, y_max: float = 10.0):
    """Closed-form resolvent against bisection, plus the residual bound."""
    rng = np.random.default_rng(seed)
    t, delta, y, _ = _resolvent_points(model, samples, rng, y_max)
    dc = delta[:, None]
    x_fast = invert(model, t, dc, y)[0]
    x_ref = solve_oracle_array(model, t, dc, y)[0]
    gap = np.abs(x_fast - x_ref)[:, 0]
    res = np.abs(resolvent(model, t, dc, x_fast) - y)[:, 0]
    return [
        _worst("oracle agreement", model, ORACLE_TOL - gap, 0.0, delta=delta, y=y[:, 0]),
        _worst("resolvent residual", model, 1e-12 - res, 0.0, delta=delta, y=y[:, 0]),
    ]


def resolvent_checks(model: Model, samples: int, seed: int, x_max: float = 10.0):
    rng = np.random.default_rng(seed)
    out = oracle_check(model, max(samples // 10, 100), seed + 100)
    fixed_delta = {"gle": 1 / 8, "svm32": 1 / 64}.get(model.name, model.step_bound)
    t, delta, x1, x2 = _resolvent_points(model, samples, rng, x_max)
    out.append(_worst(f"inverse Lipschitz (delta={fixed_delta:g})", model,
                      inverse_lipschitz_margin(model, t, fixed_delta, x1, x2), MARGIN_TOL,
                      x1=x1[:, 0], x2=x2[:, 0]))
    out.append(_worst("resolvent stability", model,
                      resolvent_stability_margin(model, t, delta, x1, x2), MARGIN_TOL,
                      delta=delta, x1=x1[:, 0], x2=x2[:, 0]))
    x = rng.uniform(-5.0, 5.0, (samples, model.dim_state))
    m1, m2 = local_expansion_margins(model, t, delta, x)
    out.append(_worst("first-order expansion", model, m1, MARGIN_TOL, delta=delta, x=x[:, 0]))
    out.append(_worst("second-order expansion", model, m2, MARGIN_TOL, delta=delta, x=x[:, 0]))
    return out


def projection_checks(model: Model, samples: int, seed: int, x_max: float = 10.0,
                      lipschitz_samples: Optional[int] = None):
    rng = np.random.default_rng(seed)
    n_lip = lipschitz_samples or 10 * samples
    d = model.dim_state
    delta = np.exp2(rng.uniform(-12.0, 0.0, n_lip))
    x1 = rng.uniform(-x_max, x_max, (n_lip, d))
    x2 = rng.uniform(-x_max, x_max, (n_lip, d))
    out = [_worst("projection nonexpansive", model,
                  projection_lipschitz_margin(x1, x2, delta, model.alpha), PROJECTION_TOL,
                  delta=delta, x1=x1[:, 0], x2=x2[:, 0])]
    delta = np.exp2(rng.uniform(-12.0, 0.0, samples))
    t = rng.uniform(0.0, model.T)
    x1 = rng.uniform(-x_max, x_max, (samples, d))
    x2 = rng.uniform(-x_max, x_max, (samples, d))
    out.append(_worst("PEM stability", model, pem_stability_margin(model, t, delta, x1, x2),
                      MARGIN_TOL, delta=delta, x1=x1[:, 0], x2=x2[:, 0]))
    return out


def run_suite(suite: str, samples: int = 100_000, seed: int = 0, models=None):
    """Run one suite (or ``"all"``) on every model; returns the list of checks."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    models = default_models() if models is None else models
    chosen = SUITES[:-1] if suite == "all" else (suite,)
    runners = {"assumptions": assumption_checks, "resolvent": resolvent_checks,
               "projection": projection_checks}
    results = []
    with np.errstate(over="ignore", invalid="ignore"):
        for k, model in enumerate(models):
            for name in chosen:
                results.extend(runners[name](model, samples, seed + 1000 * k))
    return results

"""Command-line front end: ``run``, ``verify`` and ``trace``.

Settings are resolved as defaults < JSON config file < ``MONOSDE_*``
environment variables < command-line flags.

Exit codes: 0 success, 1 configuration error, 2 verification failure,
3 numerical failure with no output produced.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .experiment import ExperimentConfig, run_experiment
from .model import make_model
from .paths import TimeGrid, coarsen_uniform, generate_path
from .reference import (ReferenceSpec, gbm_exact_path, gle_exact_path,
                        numeric_reference_path)
from .schemes import IntegrationError, SchemeId, integrate
from .verify import SUITES, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NUMERIC = 0, 1, 2, 3
ENV_PREFIX = "MONOSDE_"
RUN_KEYS = ("model", "params", "schemes", "levels", "samples", "seed", "reference",
            "out", "format", "workers", "alpha")


class ConfigError(ValueError):
    pass


def parse_levels(spec) -> list:
    """``"6..11"``, ``"6,8,10"``, ``7`` or a list of ints."""
    if isinstance(spec, (list, tuple)):
        return [int(k) for k in spec]
    text = str(spec).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(k) for k in text.split(",") if k.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse levels {spec!r}") from None


def parse_schemes(spec) -> list:
    items = spec if isinstance(spec, (list, tuple)) else str(spec).split(",")
    items = [s.strip() for s in items if str(s).strip()]
    if not items:
        raise ConfigError("scheme list is empty")
    try:
        return [SchemeId.parse(s) for s in items]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_params(spec) -> dict:
    """``k=v`` pairs from a dict, a string ``"a=1,b=2"`` or a list of such strings."""
    if isinstance(spec, dict):
        return {k: float(v) for k, v in spec.items()}
    items = [spec] if isinstance(spec, str) else list(spec or [])
    out = {}
    for item in items:
        for pair in str(item).split(","):
            if not pair.strip():
                continue
            if "=" not in pair:
                raise ConfigError(f"parameter {pair!r} is not of the form key=value")
            k, v = pair.split("=", 1)
            try:
                out[k.strip()] = float(v)
            except ValueError:
                raise ConfigError(f"parameter {k.strip()!r} has non-numeric value {v!r}") from None
    return out


def parse_reference(spec, model_name: str) -> ReferenceSpec:
    """``gle_exact[:quad_level]``, ``gbm_exact`` or ``numeric_fine[:scheme[:level]]``."""
    if spec is None or spec == "":
        return ReferenceSpec.default_for(model_name)
    if isinstance(spec, dict):
        return ReferenceSpec(**spec)
    parts = str(spec).split(":")
    kind = parts[0]
    try:
        if kind == "gle_exact":
            return ReferenceSpec(kind, quadrature_level=int(parts[1]) if len(parts) > 1 else 12)
        if kind == "numeric_fine":
            scheme = parts[1] if len(parts) > 1 else "bem"
            level = int(parts[2]) if len(parts) > 2 else 14
            return ReferenceSpec(kind, fine_scheme=scheme, fine_level=level)
        return ReferenceSpec(kind)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _env_settings(keys) -> dict:
    out = {}
    for key in keys:
        val = os.environ.get(ENV_PREFIX + key.upper())
        if val is not None:
            out[key] = val
    return out


def _resolve(args, keys) -> dict:
    settings = {}
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(keys)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        settings.update(loaded)
    settings.update(_env_settings(keys))
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    return settings


def _build_config(settings) -> ExperimentConfig:
    model = settings.get("model", "gle")
    try:
        return ExperimentConfig(
            model=model,
            params=parse_params(settings.get("params", {})),
            schemes=parse_schemes(settings.get("schemes", "ssbe,bem,pem")),
            levels=parse_levels(settings.get("levels", "6..11")),
            samples=int(settings.get("samples", 10_000)),
            seed=int(settings.get("seed", 42)),
            reference=parse_reference(settings.get("reference"), model),
            alpha=None if settings.get("alpha") in (None, "") else float(settings["alpha"]),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_run(args) -> int:
    settings = _resolve(args, RUN_KEYS)
    config = _build_config(settings)
    fmt = settings.get("format", "both")
    if fmt not in ("csv", "json", "both"):
        raise ConfigError(f"unknown format {fmt!r}")
    workers = int(settings.get("workers", 1))
    report = run_experiment(config, workers=workers)
    out = Path(settings.get("out", "results"))
    out.mkdir(parents=True, exist_ok=True)
    if fmt in ("csv", "both"):
        (out / "report.csv").write_text(report.to_csv())
    if fmt in ("json", "both"):
        (out / "report.json").write_text(report.to_json())
    print(report.table())
    bad = [c for c in report.cells if c.overflow_count]
    for c in bad:
        print(f"warning: {c.scheme} at 2^-{c.h_level}: {c.overflow_count} samples overflowed",
              file=sys.stderr)
    print(f"wrote {fmt} report to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    models = None
    if args.model or args.params or args.L_scale != 1.0:
        names = [args.model] if args.model else ["gle", "svm32"]
        models = []
        for name in names:
            try:
                m = make_model(name, **parse_params(args.params or {}))
            except (TypeError, ValueError) as exc:
                raise ConfigError(str(exc)) from None
            if args.L_scale != 1.0:
                m = m.with_constants(one_sided_constant=m.L * args.L_scale)
            models.append(m)
    results = run_suite(args.suite, samples=args.samples, seed=args.seed, models=models)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(r.line())
    for r in failed:
        print(f"  witness: {json.dumps(r.witness)}")
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def trace_rows(model_name, params, schemes, level, seed, index, reference=None, alpha=None):
    """Single-sample trajectories on the grid of step ``T 2^-level``.

    Returns ``(header, rows)`` with columns ``t``, one per scheme, the
    reference, the projection threshold ``h^-alpha`` and PEM projection flags.
    """
    schemes = parse_schemes(schemes)
    model = make_model(model_name, **params)
    ref = parse_reference(reference, model_name)
    alpha = model.alpha if alpha is None else alpha
    K = max(level, ref.required_level)
    path = generate_path(seed, index, model.dim_noise, K, model.T)
    grid = TimeGrid.uniform(model.T, level)
    inc = coarsen_uniform(path.increments, K, level)
    header = ["t"] + [s.value for s in schemes] + ["reference", "threshold"]
    columns = [grid.points]
    flags = None
    for s in schemes:
        gf = integrate(s, model, grid, inc, alpha=alpha)
        columns.append(gf.values[:, 0])
        if s is SchemeId.PEM:
            flags = np.concatenate([[False], gf.projection_events])
    pr = model.params
    if ref.kind == "gle_exact":
        refv = gle_exact_path(path, pr["mu"], pr["sigma"], pr["X0"], level, ref.quadrature_level)
    elif ref.kind == "gbm_exact":
        refv = gbm_exact_path(path, pr["mu"], pr["sigma"], pr["X0"], level)
    else:
        refv = numeric_reference_path(path, model, ref.fine_level, level, ref.fine_scheme)
    columns.append(refv[:, 0])
    columns.append(np.full(grid.N + 1, grid.steps[0] ** (-alpha)))
    if flags is not None:
        header.append("pem_projected")
        columns.append(flags.astype(int))
    rows = [[_cell(col[n]) for col in columns] for n in range(grid.N + 1)]
    return header, rows


def _cell(v):
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return repr(float(v))


def cmd_trace(args) -> int:
    settings = _resolve(args, ("model", "params", "schemes", "level", "seed", "index",
                               "reference", "alpha", "out"))
    model = settings.get("model", "gle")
    try:
        header, rows = trace_rows(
            model, parse_params(settings.get("params", {})),
            settings.get("schemes", "ssbe,bem,pem"), int(settings.get("level", 6)),
            int(settings.get("seed", 42)), int(settings.get("index", 0)),
            settings.get("reference"),
            None if settings.get("alpha") in (None, "") else float(settings["alpha"]),
        )
    except (ConfigError, IntegrationError):
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    buf = io.StringIO()
    buf.write("# " + json.dumps({k: settings[k] for k in sorted(settings) if k != "out"}) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    out = settings.get("out")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monosde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo strong-error table")
    run.add_argument("--config", help="JSON file with run settings")
    run.add_argument("--model", choices=["gle", "svm32", "gbm"])
    run.add_argument("--params", action="append", help="model parameters k=v[,k=v]")
    run.add_argument("--schemes", help="comma list of em,ssbe,bem,pem")
    run.add_argument("--levels", help="dyadic levels, e.g. 6..11 or 6,8,10")
    run.add_argument("--samples", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--reference", help="gle_exact[:q] | gbm_exact | numeric_fine[:scheme[:level]]")
    run.add_argument("--alpha", type=float, help="PEM projection exponent override")
    run.add_argument("--out", help="output directory (default results/)")
    run.add_argument("--format", choices=["csv", "json", "both"])
    run.add_argument("--workers", type=int)
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="sampled inequality suites")
    ver.add_argument("suite", choices=SUITES)
    ver.add_argument("--samples", type=int, default=100_000)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--model", choices=["gle", "svm32", "gbm"])
    ver.add_argument("--params", action="append")
    ver.add_argument("--L-scale", dest="L_scale", type=float, default=1.0,
                     help="multiply the model's one-sided constant (mutation testing)")
    ver.set_defaults(func=cmd_verify)

    tr = sub.add_parser("trace", help="single-sample trajectories as CSV")
    tr.add_argument("--config")
    tr.add_argument("--model", choices=["gle", "svm32", "gbm"])
    tr.add_argument("--params", action="append")
    tr.add_argument("--schemes")
    tr.add_argument("--level", type=int)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--index", type=int)
    tr.add_argument("--reference")
    tr.add_argument("--alpha", type=float)
    tr.add_argument("--out", help="CSV file (default stdout)")
    tr.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

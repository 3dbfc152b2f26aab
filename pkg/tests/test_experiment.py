import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monosde.experiment import (BATCH_SIZE, CSV_COLUMNS, ExperimentConfig, eoc, fit_order,
                                projection_stats, rms_with_error, run_experiment, strong_error)
from monosde.implicit import StepSizeError
from monosde.reference import ReferenceSpec

from reference_tables import GLE_ERRORS, GLE_SLOPES, SVM_ERRORS, SVM_SLOPES, column


def test_eoc_published_pairs():
    assert eoc([(2.0**-6, 0.04637), (2.0**-7, 0.03013)])[0] == pytest.approx(0.62, abs=0.005)
    assert eoc([(2.0**-6, 0.28267), (2.0**-7, 0.18973)])[0] == pytest.approx(0.58, abs=0.005)


def test_eoc_halving_and_invalid_entries():
    assert eoc([(2.0**-k, 2.0**-k) for k in range(4)]) == pytest.approx([1.0, 1.0, 1.0])
    assert eoc([(0.5, 0.1), (0.25, 0.0), (0.125, 0.02)]) == [None, None]
    with pytest.raises(ValueError):
        eoc([(0.5, 0.1)])


def test_fit_order_on_published_columns():
    assert fit_order(column(GLE_ERRORS, "ssbe")) == pytest.approx(GLE_SLOPES["ssbe"], abs=0.005)
    assert fit_order(column(SVM_ERRORS, "pem")) == pytest.approx(SVM_SLOPES["pem"], abs=0.005)
    for s in ("bem", "pem"):
        assert fit_order(column(GLE_ERRORS, s)) == pytest.approx(GLE_SLOPES[s], abs=0.005)


@settings(max_examples=50, deadline=None)
@given(c=st.floats(1e-3, 1e3), order=st.floats(0.1, 2.0))
def test_fit_order_recovers_exact_power_law(c, order):
    pts = [(2.0**-k, c * 2.0 ** (-k * order)) for k in range(6, 12)]
    assert fit_order(pts) == pytest.approx(order, abs=1e-10)


def test_fit_order_rejections():
    with pytest.raises(ValueError):
        fit_order([(0.1, 0.2), (0.1, 0.3)])
    with pytest.raises(ValueError):
        fit_order([(0.1, 0.2), (0.05, -1.0)])


def test_projection_stats():
    assert projection_stats([True, False, False, True]) == (0.5, 2)
    events = np.zeros((5, 4), dtype=bool)
    events[2, 1] = events[4, 1] = events[0, 3] = True
    assert projection_stats(events) == (0.5, 2)


def test_rms_with_error_delta_method():
    sq = np.array([1.0, 4.0, 9.0, 16.0])
    rms, se = rms_with_error(sq)
    assert rms == pytest.approx(math.sqrt(7.5))
    assert se == pytest.approx(np.std(sq, ddof=1) / 2 / (2 * rms))


def test_zero_noise_gbm_error_is_euler_error():
    err, se = strong_error("em", "gbm", 10, 100, 0, params={"mu": 1.0, "sigma": 0.0})
    h = 2.0**-10
    assert err == pytest.approx(math.e - (1 + h) ** 1024, rel=1e-9)
    assert err < 0.01 * math.e and se < 1e-15


def test_strong_error_is_deterministic():
    a = strong_error("ssbe", "gle", 6, 200, 9)
    b = strong_error("ssbe", "gle", 6, 200, 9)
    assert a == b


def test_single_cell_report_and_csv_shape():
    cfg = ExperimentConfig(model="gbm", schemes=["em"], levels=[10], samples=100, seed=1)
    rep = run_experiment(cfg)
    assert len(rep.cells) == 1 and rep.cells[0].eoc is None
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("# ")
    assert json.loads(lines[0][2:])["seed"] == 1
    assert lines[1] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    payload = json.loads(rep.to_json())
    assert payload["seed"] == 1 and payload["rows"][0]["scheme"] == "em"


def test_rerun_gives_identical_csv_and_is_batch_split_invariant():
    cfg = ExperimentConfig(model="gle", schemes=["ssbe", "pem"], levels=[6, 7], samples=BATCH_SIZE + 150, seed=3)
    a = run_experiment(cfg).to_csv()
    assert a == run_experiment(cfg).to_csv()
    assert a == run_experiment(cfg, workers=2).to_csv()


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(samples=99)
    with pytest.raises(ValueError):
        ExperimentConfig(schemes=[])
    with pytest.raises(ValueError):
        ExperimentConfig(levels=[])
    with pytest.raises(StepSizeError):
        ExperimentConfig(model="svm32", schemes=["bem"], levels=[3])
    with pytest.raises(ValueError):
        ExperimentConfig(model="gle", reference=ReferenceSpec("gbm_exact"))


def test_overflow_is_counted_not_dropped():
    cfg = ExperimentConfig(model="gle", params={"X0": 50.0}, schemes=["em", "pem"], levels=[6],
                           samples=100, seed=0)
    rep = run_experiment(cfg)
    em, pem = rep.cell("em", 6), rep.cell("pem", 6)
    assert em.overflow_count == 100 and math.isinf(em.error)
    assert pem.overflow_count == 0 and math.isfinite(pem.error)
    assert "inf" in rep.to_csv()


def test_coupled_gle_table_trends():
    rep = run_experiment(ExperimentConfig(model="gle", samples=2000, seed=5))
    for s in ("ssbe", "bem", "pem"):
        col = rep.column(s)
        assert 0.4 <= rep.slopes[s] <= 0.9
        for a, b in zip(col[:-1], col[1:]):
            assert b.error < a.error + 2 * (a.mc_std_error + b.mc_std_error)
    fractions = [c.proj_fraction for c in rep.column("pem")]
    assert all(f1 >= f2 for f1, f2 in zip(fractions[:-1], fractions[1:]))

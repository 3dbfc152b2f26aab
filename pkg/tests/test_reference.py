import math

import numpy as np
import pytest

from monosde.model import make_gbm, make_gle, make_svm32
from monosde.paths import GridError, TimeGrid, coarsen_uniform, generate_path, generate_paths
from monosde.reference import (ReferenceSpec, gbm_exact_at_T, gbm_exact_path, gle_exact_at_T,
                               gle_exact_path, numeric_reference_at_T, numeric_reference_path,
                               reference_at_T)
from monosde.schemes import integrate, integrate_terminal


@pytest.fixture(scope="module")
def paths14():
    return generate_paths(11, range(1000), 1, 14)


def test_gle_zero_initial_value():
    inc = generate_paths(0, range(5), 1, 8)
    assert np.all(gle_exact_at_T(inc, 0.5, 1.0, 0.0, 8, fine_level=8, T=1.0) == 0.0)


def test_gle_deterministic_value():
    inc = generate_paths(0, range(3), 1, 6)
    x = gle_exact_at_T(inc, 0.0, 0.0, 2.0, 6, fine_level=6, T=1.0)
    np.testing.assert_allclose(x, 2 / 3, rtol=1e-14)


def test_gle_path_starts_at_initial_value_and_ends_at_terminal():
    p = generate_path(1, 0, 1, 10)
    xs = gle_exact_path(p, 0.5, 1.0, 2.0, level=4, quadrature_level=10)
    assert xs.shape == (17, 1) and xs[0, 0] == 2.0
    assert xs[-1, 0] == gle_exact_at_T(p, 0.5, 1.0, 2.0, 10)[0]
    with pytest.raises(GridError):
        gle_exact_at_T(p, 0.5, 1.0, 2.0, 11)


def test_gbm_closed_forms():
    p = generate_path(2, 0, 1, 6)
    assert gbm_exact_at_T(p, 0.0, 0.0, 1.0)[0] == 1.0
    assert gbm_exact_at_T(p, 1.0, 0.0, 1.0)[0] == pytest.approx(math.e)
    WT = p.terminal()[0]
    assert gbm_exact_at_T(p, 0.02, 0.2, 3.0)[0] == pytest.approx(3.0 * math.exp(0.2 * WT))
    xs = gbm_exact_path(p, 0.05, 0.2, 1.0, level=3)
    assert xs.shape == (9, 1) and xs[-1, 0] == pytest.approx(gbm_exact_at_T(p, 0.05, 0.2, 1.0)[0])


def test_gbm_value_with_prescribed_terminal_noise():
    """Shift a sampled path so W(1) = 0.3; closed form and fine Euler agree."""
    K = 14
    inc = generate_path(5, 0, 1, K).increments
    inc = inc + (0.3 - inc.sum()) / inc.shape[-1]
    x = gbm_exact_at_T(inc, 0.05, 0.2, 1.0, fine_level=K, T=1.0)[0]
    assert x == pytest.approx(math.exp(0.09), rel=1e-12)
    em = integrate("em", make_gbm(), TimeGrid.uniform(1.0, K), inc).terminal[0]
    assert em == pytest.approx(x, abs=2e-3)


def test_em_strong_gap_on_gbm():
    inc = generate_paths(7, range(1000), 1, 12)
    exact = gbm_exact_at_T(inc, 0.05, 0.2, 1.0, fine_level=12, T=1.0)
    em = integrate_terminal("em", make_gbm(), TimeGrid.uniform(1.0, 12), inc)[0]
    assert np.sqrt(np.mean((em - exact) ** 2)) < 5e-3


def test_gle_exact_vs_ssbe(paths14):
    gle = make_gle()
    ex = gle_exact_at_T(paths14, 0.5, 1.0, 2.0, 12, fine_level=14, T=1.0)
    ssbe = integrate_terminal("ssbe", gle, TimeGrid.uniform(1.0, 12), coarsen_uniform(paths14, 14, 12))[0]
    assert np.mean((ssbe - ex) ** 2) < 0.01


def test_quadrature_refinement_is_small(paths14):
    coarse_table_error = 0.04637
    a = gle_exact_at_T(paths14, 0.5, 1.0, 2.0, 12, fine_level=14, T=1.0)
    b = gle_exact_at_T(paths14, 0.5, 1.0, 2.0, 13, fine_level=14, T=1.0)
    assert np.sqrt(np.mean((a - b) ** 2)) < coarse_table_error / 10


def test_numeric_reference_self_degenerates():
    inc = generate_paths(4, range(10), 1, 8)
    gle = make_gle()
    ref, over = numeric_reference_at_T(inc, gle, 8, "bem", path_level=8, T=1.0)
    direct = integrate_terminal("bem", gle, TimeGrid.uniform(1.0, 8), inc)[0]
    assert np.array_equal(ref, direct) and not over.any()
    sampled = numeric_reference_path(inc, gle, 8, 3, path_level=8, T=1.0)
    assert sampled.shape == (9, 10, 1) and np.array_equal(sampled[-1], direct)


def test_svm_reference_refinement_halves_like_order_half(paths14):
    svm = make_svm32()
    r = {k: numeric_reference_at_T(paths14, svm, k, path_level=14, T=1.0)[0] for k in (12, 13, 14)}
    g_fine = np.sqrt(np.mean((r[14] - r[13]) ** 2))
    g_coarse = np.sqrt(np.mean((r[13] - r[12]) ** 2))
    assert 1.2 < g_coarse / g_fine < 1.7


def test_gle_numeric_reference_matches_exact(paths14):
    gle = make_gle()
    ex = gle_exact_at_T(paths14, 0.5, 1.0, 2.0, 12, fine_level=14, T=1.0)
    num = numeric_reference_at_T(paths14, gle, 14, path_level=14, T=1.0)[0]
    bem11 = integrate_terminal("bem", gle, TimeGrid.uniform(1.0, 11), coarsen_uniform(paths14, 14, 11))[0]
    predicted = np.sqrt(np.mean((bem11 - ex) ** 2)) * 2.0**-1.5
    assert np.sqrt(np.mean((num - ex) ** 2)) < 2 * predicted


def test_reference_spec_defaults_and_dispatch():
    assert ReferenceSpec.default_for("gle").required_level == 12
    assert ReferenceSpec.default_for("svm32").required_level == 14
    assert ReferenceSpec.default_for("gbm").required_level == 0
    with pytest.raises(ValueError):
        ReferenceSpec("exact")
    inc = generate_paths(0, range(4), 1, 12)
    with pytest.raises(ValueError):
        reference_at_T(ReferenceSpec("gle_exact"), make_svm32(), inc, 12)
    x, over = reference_at_T(ReferenceSpec("gbm_exact"), make_gbm(), inc, 12)
    assert x.shape == (4, 1) and not over.any()

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from monosde.model import INEQUALITIES, make_gbm, make_gle, make_model, make_svm32, sample_assumption


def test_gle_constants_and_values():
    m = make_gle(0.5, 1.0, 2.0, 1.0)
    assert m.q == 3 and m.alpha == pytest.approx(0.25)
    assert m.X0.tolist() == [2.0]
    assert m.drift(0.0, np.array([0.0]))[0] == 0.0
    assert m.drift(0.0, np.array([2.0]))[0] == pytest.approx(-6.0)
    assert m.diffusion(0.3, np.array([2.0])).shape == (1, 1)


def test_svm_constants_and_values():
    m = make_svm32(3.5, 3.0, 1.0, 5.0, 1.0)
    assert m.alpha == pytest.approx(0.5)
    assert m.L == pytest.approx(10.5)
    assert m.p == pytest.approx(8.0)
    assert m.drift(0.0, np.array([3.0]))[0] == 0.0
    assert m.diffusion(0.0, np.array([4.0]))[0, 0] == pytest.approx(8.0)
    assert m.diffusion_channel(0.0, np.array([4.0]), 1)[0] == pytest.approx(8.0)
    with pytest.raises(ValueError):
        m.diffusion_channel(0.0, np.array([4.0]), 2)


def test_make_model_rejects_unknown_and_invalid():
    with pytest.raises(ValueError):
        make_model("heston")
    with pytest.raises(ValueError):
        make_gle(sigma=-1.0)
    with pytest.raises(ValueError):
        make_gle(T=0.0)
    with pytest.raises(ValueError):
        make_svm32(mu=float("nan"))
    with pytest.raises(ValueError):
        make_gle(eta=0.5)


def test_gle_monotonicity_symbolic():
    """The monotonicity slack factors into a nonnegative polynomial times |x1-x2|^2."""
    x1, x2, mu, sig, eta = sp.symbols("x1 x2 mu sigma eta", real=True)
    a = mu + sig**2 / 2
    f = lambda x: -x**3 + a * x
    L = a + eta * sig**2
    slack = L * (x1 - x2) ** 2 - ((f(x1) - f(x2)) * (x1 - x2) + eta * (sig * x1 - sig * x2) ** 2)
    assert sp.expand(slack - (x1 - x2) ** 2 * (x1**2 + x1 * x2 + x2**2)) == 0
    # and the code uses exactly that L
    m = make_gle(0.5, 1.0, eta=1.25)
    assert m.L == pytest.approx(float(L.subs({mu: 0.5, sig: 1, eta: 1.25})))


def test_svm_coercivity_symbolic():
    """At p = (2 lam + sigma^2)/sigma^2 the quartic-like |x|^3 terms cancel for x > 0."""
    x, lam, mu, sig = sp.symbols("x lam mu sigma", positive=True)
    p = (2 * lam + sig**2) / sig**2
    lhs = lam * x * (mu - x) * x + (p - 1) / 2 * sig**2 * x**3
    assert sp.simplify(lhs - lam * mu * x**2) == 0


@pytest.mark.parametrize("factory", [make_gle, make_svm32, make_gbm])
@pytest.mark.parametrize("ineq", INEQUALITIES)
def test_shipped_models_satisfy_assumptions(factory, ineq):
    rep = sample_assumption(factory(), ineq, {"x_max": 10.0}, 20_000, seed=3)
    assert rep.passed, (ineq, rep.worst_margin, rep.witness)


def test_gle_monotonicity_and_svm_coercivity_at_full_scale():
    assert sample_assumption(make_gle(), "monotonicity", {"x_max": 10}, 100_000, 11).violations == 0
    assert sample_assumption(make_svm32(), "coercivity", {"x_max": 10}, 100_000, 12).violations == 0


@pytest.mark.parametrize("factory", [make_gle, make_svm32, make_gbm])
def test_degenerate_pairs_have_nonnegative_margin(factory):
    rep = sample_assumption(factory(), "monotonicity", None, 1000, 0, degenerate=True)
    assert rep.worst_margin >= 0.0


def test_halved_L_is_detected():
    m = make_gle()
    bad = m.with_constants(one_sided_constant=m.L / 2)
    assert bad.coercivity_constant == m.coercivity_constant
    assert sample_assumption(bad, "monotonicity", None, 20_000, 1).violations > 0


def test_sample_assumption_rejects_unknown_inequality():
    with pytest.raises(ValueError):
        sample_assumption(make_gle(), "lipschitz", n=10)


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(-1, 1), sigma=st.floats(0, 2), x1=st.floats(-20, 20), x2=st.floats(-20, 20))
def test_gle_monotonicity_property(mu, sigma, x1, x2):
    m = make_gle(mu, sigma)
    a, b = np.array([x1]), np.array([x2])
    lhs = (m.drift(0, a) - m.drift(0, b))[0] * (x1 - x2) + m.eta * ((m.diffusion(0, a) - m.diffusion(0, b))[0, 0]) ** 2
    assert lhs <= m.L * (x1 - x2) ** 2 + 1e-9 * (1 + x1**4 + x2**4)


def test_gbm_step_bound_default():
    m = make_gbm()
    assert m.step_bound == pytest.approx(min(1.0, 1 / (2 * m.L)))
    assert math.isclose(make_svm32().step_bound, 1 / 21)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnsprice.model import (AdmissibilityError, OptionSpec, c_rho, c_rho_small, check_assumption,
                            kappa_bar, kappa_tail, levy_density, mmm_theta, mmm_u, mu_from_alpha,
                            small_jump_integral, tilted_small_mean)

from conftest import nu_integral, random_params, table1


def test_params_validation():
    with pytest.raises(ValueError):
        table1(rho=0.1)
    with pytest.raises(ValueError):
        table1(lam=0.0)
    with pytest.raises(ValueError):
        OptionSpec(-1.0, 1.0)
    with pytest.raises(ValueError):
        OptionSpec(100.0, 0.0)


def test_levy_density_basic(p1):
    assert levy_density(50.0, p1) == pytest.approx(0.0, abs=1e-300)
    assert levy_density(1e-12, p1) > 1e15
    with pytest.raises(ValueError):
        levy_density(0.0, p1)
    with pytest.raises(ValueError):
        levy_density(-1.0, p1)


def test_levy_measure_has_infinite_mass(p1):
    masses = [nu_integral(lambda x: 1.0, p1, d, 1.0) for d in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(b > 5 * a for a, b in zip(masses, masses[1:]))


def test_c_rho_table1(p1):
    assert c_rho(p1) == pytest.approx(3.72e-3, abs=5e-6)
    oracle = nu_integral(lambda x: math.expm1(p1.rho * x) ** 2, p1)
    assert c_rho(p1) == pytest.approx(oracle, rel=1e-8)
    assert c_rho(table1(rho=0.0)) == 0.0


def test_kappa_bar_table1(p1):
    assert kappa_bar(p1) == pytest.approx(-0.0720, abs=5e-5)
    oracle = nu_integral(lambda x: math.expm1(p1.rho * x), p1)
    assert kappa_bar(p1) == pytest.approx(oracle, rel=1e-8)
    assert kappa_bar(table1(rho=0.0)) == 0.0


def test_mu_from_alpha(p1):
    assert mu_from_alpha(table1(rho=0.0, alpha=0.5)) == 0.5
    assert mu_from_alpha(p1) == pytest.approx(0.5720, abs=5e-5)
    assert mu_from_alpha(p1) + kappa_bar(p1) == pytest.approx(p1.alpha, abs=1e-15)


@pytest.mark.parametrize("i", range(0, 100, 9))
def test_closed_forms_random_draws(i):
    p, _ = random_params(100, seed=1)[i]
    assert c_rho(p) == pytest.approx(nu_integral(lambda x: math.expm1(p.rho * x) ** 2, p), rel=1e-8)
    assert kappa_bar(p) == pytest.approx(nu_integral(lambda x: math.expm1(p.rho * x), p), rel=1e-8)


@pytest.mark.parametrize("eps", [1e-3, 1e-4, 1e-5])
def test_small_jump_pieces(p1, eps):
    assert kappa_tail(eps, p1) == pytest.approx(nu_integral(lambda x: math.expm1(p1.rho * x), p1, eps), rel=1e-8)
    assert c_rho_small(eps, p1) == pytest.approx(
        nu_integral(lambda x: math.expm1(p1.rho * x) ** 2, p1, 0.0, eps), rel=1e-8)
    assert tilted_small_mean(eps, p1) == pytest.approx(
        nu_integral(lambda x: -x * math.expm1(p1.rho * x), p1, 0.0, eps), rel=1e-8)
    assert small_jump_integral(lambda x: x, eps, p1) == pytest.approx(
        nu_integral(lambda x: x, p1, 0.0, eps), rel=1e-10)


def test_kappa_tail_vectorised(p1):
    eps = np.array([1e-4, 1e-2, 0.3])
    out = kappa_tail(eps, p1)
    assert out.shape == (3,)
    assert np.all(np.diff(out) > 0)  # tail shrinks towards zero from below
    assert out[0] == pytest.approx(kappa_tail(1e-4, p1))


def test_check_assumption_examples(p1):
    rep = check_assumption(p1, 1.0)
    assert rep.cond1_lhs == pytest.approx(71.76, abs=5e-3)
    assert rep.cond1_rhs == pytest.approx(8.1478, abs=1e-12)
    denom = math.exp(-p1.lam) * p1.sigma0_sq + c_rho(p1)
    assert denom == pytest.approx(0.004058, abs=3e-6)
    assert rep.cond2_lhs == pytest.approx(0.5 / denom)
    assert rep.passed

    rep = check_assumption(table1(alpha=-0.01), 1.0)
    assert rep.cond2_lhs == pytest.approx(-2.46, abs=0.01)
    assert not rep.passed

    assert check_assumption(table1(alpha=0.0, rho=0.0, b=50.0), 0.3).passed


def test_check_assumption_report_invariant():
    for p, t in random_params(50, seed=4):
        rep = check_assumption(p.replace(alpha=p.alpha * 3 - 1), t)
        assert rep.passed == (rep.cond1_lhs > rep.cond1_rhs and rep.cond2_lhs > -1)


@settings(max_examples=60, deadline=None)
@given(b=st.floats(0.5, 30), db=st.floats(0, 20), t=st.floats(0.01, 1))
def test_condition1_monotone_in_b(b, db, t):
    lo = check_assumption(table1(b=b), t)
    hi = check_assumption(table1(b=b + db), t)
    if lo.cond1_lhs > lo.cond1_rhs:
        assert hi.cond1_lhs > hi.cond1_rhs


def test_mmm_u():
    assert mmm_u(0.0041, 0.0, 0.00372) == 0.0
    assert mmm_u(0.0041, 0.5, 0.00372) == pytest.approx(0.5 * math.sqrt(0.0041) / 0.00782)
    assert mmm_u(0.0041, 0.5, 0.00372) == pytest.approx(4.094, abs=1e-3)
    assert mmm_u(0.0041, 1.0, 0.00372) == pytest.approx(2 * mmm_u(0.0041, 0.5, 0.00372))


def test_mmm_theta():
    x = np.geomspace(1e-6, 1.0, 50)
    assert np.all(mmm_theta(0.004, 0.0, 0.0037, x, -4.0) == 0)
    assert np.all(mmm_theta(0.004, 0.7, 0.0037, x, 0.0) == 0)
    assert np.all(mmm_theta(0.004, 0.7, 0.0037, x, -4.0) <= 0)
    with pytest.raises(AdmissibilityError):
        mmm_theta(0.004, -0.5, 0.0037, 10.0, -4.0)


def test_theta_below_one_on_admissible_paths():
    rng = np.random.default_rng(2)
    for p, t in random_params(100, seed=3):
        sig_min = math.exp(-p.lam * t) * p.sigma0_sq
        sig = sig_min * (1 + rng.exponential(1.0, 20))
        x = np.geomspace(1e-6, 2.0, 40)
        theta = mmm_theta(sig[:, None], p.alpha, c_rho(p), x[None, :], p.rho)
        assert np.all(1 - theta > 0)

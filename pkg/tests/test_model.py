import math

import numpy as np
import pytest
from scipy.integrate import quad

import dsauction as da
from dsauction.model import (
    log_utility_integral,
    log_utility_marginal,
    log_utility_marginal_inverse,
    log_utility_value,
)


def test_value_fixed_points():
    u = da.LogUtility(1.0, 1.0)
    assert u.value(0.0) == 0.0
    assert math.isclose(float(u.value(math.e - 1.0)), 1.0, rel_tol=1e-14)
    u2 = da.LogUtility(2.0, 3.0)
    assert math.isclose(float(u2.value(1.0)), 2.0 * math.log(4.0), rel_tol=1e-14)


def test_marginal_fixed_points():
    u = da.LogUtility(1.0, 1.0)
    assert float(u.marginal(0.0)) == 1.0
    assert float(u.marginal(1.0)) == 0.5
    assert math.isclose(float(da.LogUtility(2.0, 0.5).marginal(2.0)), 0.5,
                        rel_tol=1e-14)


def test_marginal_inverse_fixed_points():
    u = da.LogUtility(1.0, 1.0)
    assert float(u.marginal_inverse(1.0)) == 0.0
    assert float(u.marginal_inverse(0.5)) == 1.0
    assert math.isclose(float(u.marginal_inverse(2.0 / 3.0)), 0.5, rel_tol=1e-12)
    # above the marginal at zero the inverse clips to no demand
    assert float(u.marginal_inverse(5.0)) == 0.0


def test_integral_fixed_points():
    assert float(da.LogUtility(3.0, 2.0).integral(0.0)) == 0.0
    expected = 2.0 * math.log(2.0) - 1.0
    assert math.isclose(float(da.LogUtility(1.0, 1.0).integral(1.0)),
                        expected, rel_tol=1e-14)
    assert math.isclose(float(da.LogUtility(1.0, 2.0).integral(0.5)),
                        expected / 2.0, rel_tol=1e-14)


def test_domain_errors():
    u = da.LogUtility(1.0, 1.0)
    with pytest.raises(ValueError):
        u.value(-0.1)
    with pytest.raises(ValueError):
        u.marginal(-1e-9)
    with pytest.raises(ValueError):
        u.marginal_inverse(0.0)
    with pytest.raises(ValueError):
        u.integral(-1.0)
    with pytest.raises(ValueError):
        da.LogUtility(0.0, 1.0)
    with pytest.raises(ValueError):
        da.LogUtility(1.0, -2.0)


def test_monotonicity_properties():
    rng = np.random.default_rng(1234)
    for _ in range(100):
        x, y = rng.uniform(0.2, 3.0, size=2)
        u = da.LogUtility(x, y)
        z = np.sort(rng.uniform(0.0, 50.0, size=20))
        vals = u.value(z)
        margs = u.marginal(z)
        assert np.all(np.diff(vals) > 0)
        assert np.all(np.diff(margs) < 0)
        assert np.all(margs > 0)


def test_marginal_matches_finite_difference():
    rng = np.random.default_rng(99)
    h = 1e-6
    for _ in range(100):
        x, y = rng.uniform(0.2, 3.0, size=2)
        z = rng.uniform(h, 20.0)
        u = da.LogUtility(x, y)
        fd = (float(u.value(z + h)) - float(u.value(z - h))) / (2.0 * h)
        assert math.isclose(fd, float(u.marginal(z)), rel_tol=1e-6)


def test_marginal_inverse_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(200):
        x, y = rng.uniform(0.2, 3.0, size=2)
        u = da.LogUtility(x, y)
        z = rng.uniform(1e-6, 1e3)
        back = float(u.marginal_inverse(float(u.marginal(z))))
        assert math.isclose(back, z, rel_tol=1e-10, abs_tol=1e-10)


def test_integral_matches_quadrature():
    rng = np.random.default_rng(5150)
    for _ in range(25):
        x, y = rng.uniform(0.2, 3.0, size=2)
        d = rng.uniform(0.01, 20.0)
        u = da.LogUtility(x, y)
        expected, err = quad(lambda z: float(u.value(z)), 0.0, d,
                             epsabs=1e-13, epsrel=1e-13)
        assert math.isclose(float(u.integral(d)), expected, rel_tol=1e-10)


def test_array_kernels_match_scalar_methods():
    u = da.LogUtility(1.3, 0.7)
    z = np.array([0.0, 0.5, 2.0, 10.0])
    assert np.allclose(log_utility_value(1.3, 0.7, z), u.value(z))
    assert np.allclose(log_utility_marginal(1.3, 0.7, z), u.marginal(z))
    assert np.allclose(log_utility_integral(1.3, 0.7, z), u.integral(z))
    p = np.array([0.2, 0.91, 5.0])
    assert np.allclose(log_utility_marginal_inverse(1.3, 0.7, p),
                       u.marginal_inverse(p))


def test_validate_accepts_tradeable_scenario(r1):
    report = da.validate_scenario(r1)
    assert report.ok
    assert report.violations == []


def test_validate_rejects_empty_sides():
    s = da.Scenario((), (da.SellerSpec(da.LogUtility(1, 1), 1.0),))
    report = da.validate_scenario(s)
    assert not report.ok
    assert any("buyer set is empty" in v for v in report.violations)


def test_validate_rejects_no_trade():
    # buyer marginal at zero 0.4 never beats the seller marginal 0.5 at g
    s = da.Scenario((da.BuyerSpec(da.LogUtility(0.4, 1.0)),),
                    (da.SellerSpec(da.LogUtility(1.0, 1.0), 1.0),))
    report = da.validate_scenario(s)
    assert not report.ok
    assert any("no profitable trade" in v for v in report.violations)


def test_validate_rejects_zero_total_generation():
    s = da.Scenario((da.BuyerSpec(da.LogUtility(1.0, 1.0)),),
                    (da.SellerSpec(da.LogUtility(1.0, 1.0), 0.0),))
    report = da.validate_scenario(s)
    assert not report.ok


def test_seller_generation_validation():
    with pytest.raises(ValueError):
        da.SellerSpec(da.LogUtility(1.0, 1.0), -0.5)


def test_scenario_param_arrays(r1):
    bx, by = r1.buyer_params()
    sx, sy, sg = r1.seller_params()
    assert bx.tolist() == [1.0] and by.tolist() == [1.0]
    assert sg.tolist() == [1.0]
    assert r1.n_buyers == 1 and r1.n_sellers == 1

"""Cutoff families: exact branches, derivative recursions, identities."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from bhcone.cutoffs import (
    ScaledCutoff,
    make_admissible,
    make_plateau_step,
    make_smooth_step,
    plateau_majorant,
    rescale_class,
    widened_step,
)
from bhcone.hopping import lightcone_params

# sup of the plateau-step slope on (1/2, 1), from the normalization
# integral of the squared-plateau bump (flat slope over the middle half)
PLATEAU_SUP_SLOPE = 2.7108033457042144


def steps():
    return [
        make_smooth_step(0.5, 1.0),
        make_smooth_step(0.15, 0.75),
        make_plateau_step(0.5, 1.0),
        make_plateau_step(0.05, 0.3),
        make_plateau_step(0.02, 0.98),
    ]


def test_branches_are_exact_zero_and_one():
    for f in steps():
        below = np.array([f.eta - 1.0, f.eta - 1e-12, f.eta])
        above = np.array([f.xi, f.xi + 1e-12, f.xi + 5.0])
        assert np.all(f(below) == 0.0)
        assert np.all(f(above) == 1.0)
        for k in (1, 2, 3):
            assert np.all(f.derivative(k, below) == 0.0)
            assert np.all(f.derivative(k, above) == 0.0)


def test_steps_are_monotone_with_values_in_unit_interval():
    grid = np.linspace(-0.5, 1.5, 4001)
    for f in steps():
        vals = f(grid)
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
        assert np.all(np.diff(vals) >= -1e-12)
        assert np.all(f.derivative(1, grid) >= -1e-12)


def test_derivative_recursion_matches_finite_differences():
    rng = np.random.default_rng(11)
    for f in (make_smooth_step(0.5, 1.0), make_plateau_step(0.5, 1.0)):
        width = f.xi - f.eta
        for _ in range(25):
            r = rng.uniform(f.eta + 0.1 * width, f.xi - 0.1 * width)
            for k in (1, 2, 3):
                h = 1e-5 * width
                numeric = (
                    f.derivative(k - 1, r + h) - f.derivative(k - 1, r - h)
                ) / (2 * h)
                exact = f.derivative(k, r)
                scale = max(1.0, abs(exact))
                assert abs(numeric - exact) < 1e-4 * scale


def test_antiderivative_against_adaptive_quadrature():
    # independent oracle: integrate the bump adaptively and normalize
    for f in (make_smooth_step(0.5, 1.0), make_plateau_step(0.05, 0.3)):
        h = f.bump
        total = quad(h, h.eta, h.xi, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
        for r in np.linspace(f.eta, f.xi, 23):
            ref = quad(h, h.eta, r, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
            assert abs(f(r) - ref / total) < 1e-9


def test_plateau_slope_is_constant_on_middle_half():
    f = make_plateau_step(0.5, 1.0)
    lo, hi = 0.625, 0.875
    grid = np.linspace(lo + 1e-9, hi - 1e-9, 501)
    slopes = f.derivative(1, grid)
    assert np.ptp(slopes) == 0.0
    assert slopes[0] == pytest.approx(PLATEAU_SUP_SLOPE, rel=1e-12)
    # the flat value is the sup of the slope over the whole window
    dense = f.derivative(1, np.linspace(0.5, 1.0, 20001))
    assert dense.max() == slopes[0]


def test_sqrt_of_bump_is_smooth_at_the_edges():
    h = make_admissible(0.5, 1.0)
    grid = np.linspace(0.5, 1.0, 801)
    root = h.sqrt(grid)
    assert np.all(np.isfinite(root))
    assert np.allclose(root**2, h(grid), atol=1e-14)
    # smoothness shows as a bounded difference quotient near the endpoints
    edge = np.array([0.5 + 1e-6, 0.5 + 2e-6])
    quot = np.diff(h.sqrt(edge)) / 1e-6
    assert np.isfinite(quot).all()


def test_widened_step_dominates_with_exact_square_identity():
    for f in (make_smooth_step(0.5, 1.0), make_plateau_step(0.5, 1.0)):
        tilde = widened_step(f)
        delta = (f.xi - f.eta) / 4.0
        assert tilde.eta == pytest.approx(f.eta - delta)
        assert tilde.xi == pytest.approx(f.xi + delta)
        u = plateau_majorant(f)
        c = tilde.bump.integral()
        grid = np.linspace(tilde.eta - 0.1, tilde.xi + 0.1, 901)
        assert np.allclose(c * tilde.derivative(1, grid), u(grid) ** 2,
                           atol=1e-12)
        # the majorant is exactly one wherever any derivative of f lives
        inside = np.linspace(f.eta, f.xi, 101)
        assert np.all(u(inside) == 1.0)


def test_rescale_class_matches_affine_oracle():
    f1 = make_smooth_step(0.5, 1.0)
    eta, xi = 0.05, 0.3
    f = rescale_class(f1, eta, xi)
    assert f.eta == pytest.approx(eta) and f.xi == pytest.approx(xi)
    a = 1.0 / (2.0 * (xi - eta))
    b = 0.5 - a * eta
    rng = np.random.default_rng(5)
    for _ in range(20):
        r = rng.uniform(eta - 0.05, xi + 0.05)
        assert f(r) == pytest.approx(f1(a * r + b), abs=1e-12)
        for k in (1, 2):
            lhs = f1.derivative(k, a * r + b)
            rhs = (2.0 * (xi - eta)) ** k * f.derivative(k, r)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_rescale_class_rejects_wrong_reference_window():
    with pytest.raises(ValueError):
        rescale_class(make_smooth_step(0.2, 0.8), 0.05, 0.3)


def test_scaled_cutoff_divides_by_the_scale_per_order():
    chi = make_plateau_step(0.5, 1.0)
    params = lightcone_params(v=2.2, v_max=2.0, s=4.0, r_min_x=2.0)
    sc = ScaledCutoff(chi, params, t=1.0)
    assert sc.front == pytest.approx(2.0 + params.v_prime)
    for radius in (3.0, 4.9, 6.2, 8.0):
        u = (radius - sc.front) / 4.0
        assert sc(radius) == pytest.approx(chi(u), abs=1e-15)
        for k in (1, 2):
            assert sc.eval(radius, k) == pytest.approx(
                chi.derivative(k, u) / 4.0**k, rel=1e-12, abs=1e-15
            )


def test_constructor_validation():
    with pytest.raises(ValueError):
        make_smooth_step(0.4, 0.4)
    with pytest.raises(ValueError):
        make_plateau_step(-0.1, 0.5)
    with pytest.raises(ValueError):
        make_plateau_step(0.5, 1.0, shoulder=0.7)
    with pytest.raises(ValueError):
        # widening would cross zero
        widened_step(make_plateau_step(0.02, 0.98))

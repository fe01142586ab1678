"""Steady-state construction and classification tests.

Closed-form anchors for gamma = 2, F(x) = x on [0, 1]:

* candidate mass at shift k <= 0 is (1/2)(1/2 - k), so mass 1 gives
  k0 = -3/2 and rho_s = (x + 3/2)/2 with minimum 3/4;
* for 0 < k < 1 it is (1 - k)^2 / 4, so mass 1/8 gives k0 = 1 - 1/sqrt(2);
* the vacuum threshold (candidate mass at k = min F) is 1/4.

Midpoint sums are exact for these piecewise-linear integrands away from
the kink cell, so the discrete values hit the closed forms tightly.
"""

import numpy as np
import pytest

from barostat import Grid, ScalarField, integrate, lp_norm
from barostat.equilibrium import (
    domain_inf,
    Regime,
    ThresholdRelation,
    classify_regime,
    density_from_shift,
    level_connectivity,
    mass_at_shift,
    mass_threshold,
    solve_steady,
    steady_residual,
)


def linear_potential(n=256):
    g = Grid.line(n)
    return ScalarField.from_function(g, lambda x: x)


def test_mass_at_shift_linear_case():
    F = linear_potential()
    assert mass_at_shift(F, 2.0, -1.5) == pytest.approx(1.0, abs=1e-13)
    assert mass_at_shift(F, 2.0, 1.0) == 0.0
    # decreasing in k
    ks = np.linspace(-2.0, 1.0, 40)
    vals = [mass_at_shift(F, 2.0, k) for k in ks]
    assert all(a >= b - 1e-14 for a, b in zip(vals, vals[1:]))


def test_mass_threshold_linear():
    F = linear_potential()
    assert mass_threshold(F, 2.0) == pytest.approx(0.25, abs=1e-10)


def test_mass_threshold_shift_invariance():
    F = linear_potential(128)
    shifted = ScalarField(F.grid, F.data + 1.0)
    a = mass_threshold(F, 2.0)
    b = mass_threshold(shifted, 2.0)
    assert abs(a - b) <= 1e-12 * max(a, 1.0)


def test_solve_steady_positive_case():
    F = linear_potential(256)
    s = solve_steady(F, 2.0, 1.0)
    assert s.k0 == pytest.approx(-1.5, abs=1e-10)
    assert s.regime is Regime.UNIQUE_POSITIVE
    x = F.grid.axis_centers(0)
    assert np.abs(s.rho_s.data - (x + 1.5) / 2.0).max() <= 1e-12
    assert s.rho_s.data.min() == pytest.approx(0.75, abs=1e-3)
    assert integrate(s.rho_s) == pytest.approx(1.0, abs=1e-12)


def test_solve_steady_vacuum_case():
    # fine grid: the kink cell of the integrand limits accuracy to O(h^2)
    F = linear_potential(16384)
    s = solve_steady(F, 2.0, 0.125)
    assert s.k0 == pytest.approx(1.0 - 1.0 / np.sqrt(2.0), abs=1e-8)
    assert s.regime is Regime.VACUUM_INTERIOR
    # vacuum occupies a positive-measure set
    frac = np.mean(s.rho_s.data == 0.0)
    assert frac > 0.2
    assert integrate(s.rho_s) == pytest.approx(0.125, abs=1e-12)


def test_solve_steady_threshold_band():
    F = linear_potential(256)
    thr = mass_threshold(F, 2.0)
    s = solve_steady(F, 2.0, thr * (1.0 + 1e-12))
    assert s.regime is Regime.VACUUM_BOUNDARY
    assert s.k0 == domain_inf(F)


def test_solve_steady_shift_covariance():
    F = linear_potential(128)
    s0 = solve_steady(F, 2.0, 1.0)
    s1 = solve_steady(ScalarField(F.grid, F.data + 2.5), 2.0, 1.0)
    assert s1.k0 - s0.k0 == pytest.approx(2.5, abs=1e-11)
    assert np.abs(s1.rho_s.data - s0.rho_s.data).max() <= 1e-11


def test_solve_steady_gamma_five_thirds():
    F = linear_potential(512)
    m = 0.7
    s = solve_steady(F, 5.0 / 3.0, m)
    assert integrate(s.rho_s) == pytest.approx(m, abs=1e-11)
    # closed form of the density at the solved shift matches the field
    expected = density_from_shift(F, 5.0 / 3.0, s.k0)
    assert np.array_equal(expected.data, s.rho_s.data)


def test_steady_residual_quadratic_pressure_exact():
    # gamma = 2 with linear F makes rho_s**2 a quadratic, which both the
    # interior and one-sided stencils differentiate exactly
    F = linear_potential(256)
    s = solve_steady(F, 2.0, 1.0)
    assert steady_residual(s, F, 2.0) <= 1e-10


def test_steady_residual_second_order():
    res = []
    for n in (64, 128):
        g = Grid.line(n)
        F = ScalarField.from_function(g, lambda x: np.sin(x))
        s = solve_steady(F, 2.0, 1.0)
        res.append(steady_residual(s, F, 2.0))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.4)


def test_steady_residual_excludes_vacuum():
    F = linear_potential(1024)
    s = solve_steady(F, 2.0, 0.125)
    # finite residual even though the density vanishes on a region
    r = steady_residual(s, F, 2.0)
    assert np.isfinite(r)
    # away from the vacuum edge the balance is still sharp; near the kink
    # the one-sided stencils see the non-smooth junction, giving O(h) there
    assert r <= 0.05


def test_level_connectivity_monotone():
    F = linear_potential(256)
    k_hat, m_hat = level_connectivity(F, 2.0)
    assert k_hat == float(F.data.max())
    assert m_hat == 0.0


def double_well(n=512):
    g = Grid.line(n)
    return ScalarField.from_function(g, lambda x: np.minimum(np.abs(x - 0.25), np.abs(x - 0.75)))


def test_level_connectivity_double_well():
    F = double_well()
    k_hat, m_hat = level_connectivity(F, 2.0)
    # upper sets disconnect as soon as the level rises above the wells
    assert k_hat < 0.05
    assert m_hat > 0.0


def test_classify_regime_monotone_unique():
    F = linear_potential(256)
    for m in (0.05, 0.2, 1.0):
        rep = classify_regime(F, 2.0, m)
        assert rep.is_unique
    rep = classify_regime(F, 2.0, 1.0)
    assert rep.threshold_relation is ThresholdRelation.ABOVE
    assert not rep.vacuum_present


def test_classify_regime_double_well_continuum():
    F = double_well()
    rep_small = classify_regime(F, 2.0, rep_mass := 0.25 * level_connectivity(F, 2.0)[1])
    assert rep_small.threshold_relation is ThresholdRelation.BELOW
    assert not rep_small.is_unique
    assert rep_small.vacuum_present
    # masses above the critical-level mass are unique again
    rep_large = classify_regime(F, 2.0, rep_small.m_hat * 1.5)
    assert rep_large.is_unique


def test_solve_steady_continuum_regime_flag():
    F = double_well()
    _, m_hat = level_connectivity(F, 2.0)
    s = solve_steady(F, 2.0, 0.25 * m_hat)
    assert s.regime is Regime.CONTINUUM_RISK


def test_solve_steady_2d():
    g = Grid.box(64, 64)
    F = ScalarField.from_function(g, lambda x, y: x + 0.5 * y)
    s = solve_steady(F, 2.0, 1.2)
    assert integrate(s.rho_s) == pytest.approx(1.2, abs=1e-11)
    assert s.regime is Regime.UNIQUE_POSITIVE
    assert steady_residual(s, F, 2.0) <= 1e-9


def test_solve_steady_errors():
    F = linear_potential(64)
    with pytest.raises(ValueError):
        solve_steady(F, 2.0, -1.0)
    with pytest.raises(ValueError):
        solve_steady(F, 1.0, 1.0)


def test_solve_steady_constant_potential():
    # constant F has threshold mass zero, so any m > 0 gives the flat state
    F = ScalarField.full(Grid.line(64), 3.0)
    s = solve_steady(F, 2.0, 1e-6)
    assert s.regime is Regime.UNIQUE_POSITIVE
    # absolute accuracy is set by the k-bisection tolerance, not by ulp(m)
    assert np.abs(s.rho_s.data - 1e-6).max() <= 1e-12


def test_domain_inf_extrapolates_to_wall():
    # wall-face extrapolation is exact for polynomials up to degree two
    F = linear_potential(256)
    assert abs(domain_inf(F)) <= 1e-14
    g = Grid.line(128)
    Q = ScalarField.from_function(g, lambda x: x**2)
    assert abs(domain_inf(Q)) <= 1e-14

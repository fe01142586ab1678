"""Gap functional tests.

Hand-checked anchors used below:
  * G(3, 1) at gamma=2 is 9/1 + 1 - 6 = 4, and generally G = (rho - rho_s)**2
    when gamma = 2.
  * theta(2) = 1/3, theta(5/3) = 1/9, theta(6) = 1/2, theta(3) = 1/2.
  * Taylor representation at theta = 1/2, rho = 4, rho_s = 1: s = 1,
    rhs = 2 + 2 * (1/2) = 3 = rho - rho_s exactly.
"""

import numpy as np
import pytest

from barostat.fields import GasParams, Grid, ScalarField, VectorField, integrate
from barostat.equilibrium import solve_steady
from barostat.entropy import (
    EntropyParams,
    check_gap_sandwich,
    check_mean_gap_bound,
    check_pressure_gap_bound,
    check_taylor_expansion,
    default_density_samples,
    entropy_params_for,
    power_gap,
    relative_energy,
    relative_potential,
    relative_potential_quadrature,
    theta_exponent,
)


def linear_steady(n=256, gamma=2.0, m=1.0):
    grid = Grid.line(n)
    f = ScalarField.from_function(grid, lambda x: x)
    return grid, solve_steady(f, gamma, m)


# ---------------------------------------------------------------------------
# theta


def test_theta_values():
    assert theta_exponent(2.0) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert theta_exponent(5.0 / 3.0) == pytest.approx(1.0 / 9.0, abs=1e-15)
    assert theta_exponent(6.0) == 0.5
    assert theta_exponent(3.0) == 0.5


def test_theta_rejects_low_gamma():
    with pytest.raises(ValueError):
        theta_exponent(1.5)
    with pytest.raises(ValueError):
        theta_exponent(1.0)


# ---------------------------------------------------------------------------
# relative potential


def test_relative_potential_anchor():
    assert relative_potential(3.0, 1.0, 2.0) == pytest.approx(4.0, rel=1e-14)


def test_relative_potential_gamma_two_is_squared_gap():
    rng = np.random.default_rng(7)
    rho = rng.uniform(0.0, 5.0, 300)
    rho_s = rng.uniform(0.2, 3.0, 300)
    g = relative_potential(rho, rho_s, 2.0)
    assert np.allclose(g, (rho - rho_s) ** 2, rtol=1e-12, atol=1e-14)


def test_relative_potential_matches_quadrature():
    rng = np.random.default_rng(11)
    for gamma in (1.4, 5.0 / 3.0, 2.0, 3.1):
        for _ in range(40):
            rho = float(rng.uniform(0.01, 6.0))
            rho_s = float(rng.uniform(0.05, 3.0))
            ours = relative_potential(rho, rho_s, gamma)
            oracle = relative_potential_quadrature(rho, rho_s, gamma)
            assert ours == pytest.approx(oracle, rel=1e-11, abs=1e-13)


def test_relative_potential_series_accuracy_near_diagonal():
    # at gamma = 2 the exact value is d**2 rho_s**2; the direct closed form
    # loses ~8 digits at d = 1e-8, the series path must not
    d = 1e-8
    got = relative_potential(1.0 + d, 1.0, 2.0)
    assert got == pytest.approx(d * d, rel=1e-10)


def test_relative_potential_series_joins_direct_branch():
    # values straddling the series band edge must agree across branches
    for gamma in (5.0 / 3.0, 2.0, 2.7):
        for d in (0.0599, 0.0601, -0.0599, -0.0601):
            got = relative_potential(2.0 * (1.0 + d), 2.0, gamma)
            oracle = relative_potential_quadrature(2.0 * (1.0 + d), 2.0, gamma)
            assert got == pytest.approx(oracle, rel=1e-10)


def test_relative_potential_series_vs_quadrature_inside_band():
    got = relative_potential(2.0 * (1.0 + 1e-3), 2.0, 5.0 / 3.0)
    oracle = relative_potential_quadrature(2.0 * (1.0 + 1e-3), 2.0, 5.0 / 3.0)
    assert got == pytest.approx(oracle, rel=1e-8)


def test_relative_potential_vacuum_reference():
    # rho_s = 0 cells contribute the plain pressure potential
    assert relative_potential(2.0, 0.0, 2.0) == pytest.approx(4.0)
    assert relative_potential(0.0, 0.0, 2.0) == 0.0


def test_relative_potential_nonnegative_and_zero_on_diagonal():
    rho = np.linspace(0.0, 4.0, 500)
    g = relative_potential(rho, 1.3, 1.7)
    assert (g >= 0.0).all()
    assert relative_potential(1.3, 1.3, 1.7) == 0.0


def test_relative_potential_rejects_negative_density():
    with pytest.raises(ValueError):
        relative_potential(-0.1, 1.0, 2.0)
    with pytest.raises(ValueError):
        relative_potential(1.0, -0.1, 2.0)


# ---------------------------------------------------------------------------
# power gap


def test_power_gap_stable_at_tiny_separation():
    theta = 1.0 / 3.0
    d = 1e-12
    got = power_gap(1.0 + d, 1.0, theta)
    # exact leading behaviour theta * d
    assert got == pytest.approx(theta * d, rel=1e-9)


def test_power_gap_sign_matches_density_gap():
    rng = np.random.default_rng(3)
    rho = rng.uniform(0.0, 4.0, 1000)
    rho_s = rng.uniform(0.1, 3.0, 1000)
    s = power_gap(rho, rho_s, 1.0 / 3.0)
    assert (np.sign(s) == np.sign(rho - rho_s)).all()


def test_power_gap_vacuum_endpoints():
    assert power_gap(0.0, 2.0, 0.5) == pytest.approx(-np.sqrt(2.0), rel=1e-15)
    assert power_gap(2.0, 0.0, 0.5) == pytest.approx(np.sqrt(2.0), rel=1e-15)
    assert power_gap(0.0, 0.0, 0.5) == 0.0


def test_power_gap_matches_naive_away_from_diagonal():
    rho = np.linspace(0.05, 5.0, 200)
    s = power_gap(rho, 1.0, 0.25)
    assert np.allclose(s, rho**0.25 - 1.0, rtol=1e-12)


# ---------------------------------------------------------------------------
# Taylor representation


def test_taylor_expansion_half_theta_anchor():
    assert check_taylor_expansion(4.0, 1.0, 0.5) < 1e-12


def test_taylor_expansion_exact_on_random_pairs():
    rng = np.random.default_rng(5)
    for theta in (1.0 / 3.0, 1.0 / 9.0, 0.5):
        for _ in range(50):
            rho = float(rng.uniform(0.01, 10.0))
            rho_s = float(rng.uniform(0.01, 10.0))
            res = check_taylor_expansion(rho, rho_s, theta)
            assert res <= 1e-10 * max(1.0, abs(rho - rho_s))


def test_taylor_expansion_validates_inputs():
    with pytest.raises(ValueError):
        check_taylor_expansion(1.0, 1.0, 0.7)
    with pytest.raises(ValueError):
        check_taylor_expansion(1.0, 0.0, 0.5)


# ---------------------------------------------------------------------------
# sandwich scan


def test_gap_sandwich_on_linear_steady():
    _, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    samples = default_density_samples(steady, n=20000)
    rep = check_gap_sandwich(samples, steady, gp)
    assert rep.holds
    assert rep.rhs_nonneg
    assert rep.c0_est > 0.0
    assert rep.n_pairs >= 20000
    assert rep.lower_min > 0.0 and rep.upper_min > 0.0


def test_gap_sandwich_gamma_five_thirds():
    grid = Grid.line(128)
    f = ScalarField.from_function(grid, lambda x: 0.3 * np.cos(np.pi * x))
    steady = solve_steady(f, 5.0 / 3.0, 1.0)
    gp = GasParams(gamma=5.0 / 3.0, mu=0.1, lam=0.0)
    rep = check_gap_sandwich(default_density_samples(steady, n=20000), steady, gp)
    assert rep.holds and rep.rhs_nonneg


def test_gap_sandwich_rejects_vacuum_steady():
    grid = Grid.line(1024)
    f = ScalarField.from_function(grid, lambda x: x)
    steady = solve_steady(f, 2.0, 0.125)  # below threshold, vacuum region
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    with pytest.raises(ValueError):
        check_gap_sandwich(default_density_samples(steady, n=1000), steady, gp)


def test_default_density_samples_shape_and_range():
    _, steady = linear_steady()
    samples = default_density_samples(steady, n=1001, span=4.0)
    top = 4.0 * steady.rho_s.data.max()
    assert samples.size == 1001
    assert samples.min() == 0.0
    assert samples.max() == pytest.approx(top)


def test_entropy_params_bundle():
    _, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    ep = entropy_params_for(steady, gp, n_samples=5000)
    assert ep.theta == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert ep.c0_est > 0.0
    lo, hi = ep.rho_s_bounds
    assert 0.0 < lo <= hi
    with pytest.raises(ValueError):
        EntropyParams(gamma=2.0, theta=1.0 / 3.0, c0_est=-1.0, rho_s_bounds=(0.5, 1.0))


# ---------------------------------------------------------------------------
# mean gap bound


def mass_matched_perturbation(grid, steady, amplitude):
    x = grid.centers()[0]
    bump = np.sin(2.0 * np.pi * x)
    bump -= bump.mean()  # discrete mean removal keeps the midpoint mass exact
    return ScalarField(grid, steady.rho_s.data + amplitude * bump)


def test_mean_gap_bound_holds():
    grid, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    rho = mass_matched_perturbation(grid, steady, 0.2)
    assert (rho.data > 0.0).all()
    rep = check_mean_gap_bound(rho, steady, gp)
    assert rep.holds
    assert rep.lhs <= rep.c_hat * rep.g_total * (1.0 + 1e-9)
    assert rep.taylor_identity_gap <= 1e-10 * max(rep.lhs, 1e-3)


def test_mean_gap_identity_is_tight():
    # the signed mean must equal the quadratic remainder term to rounding
    grid, steady = linear_steady(n=512)
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    for amp in (0.05, 0.3):
        rep = check_mean_gap_bound(mass_matched_perturbation(grid, steady, amp), steady, gp)
        assert rep.taylor_identity_gap <= 1e-12


def test_mean_gap_quadratic_smallness():
    # lhs is quadratic in the perturbation size: ratio lhs/g_total stays bounded
    grid, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    rep_small = check_mean_gap_bound(mass_matched_perturbation(grid, steady, 0.01), steady, gp)
    rep_large = check_mean_gap_bound(mass_matched_perturbation(grid, steady, 0.3), steady, gp)
    assert rep_small.ratio < rep_large.ratio * 2.0
    assert rep_small.lhs < rep_large.lhs


def test_mean_gap_rejects_mass_mismatch():
    grid, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    rho = ScalarField(grid, steady.rho_s.data + 0.1)
    with pytest.raises(ValueError):
        check_mean_gap_bound(rho, steady, gp)


# ---------------------------------------------------------------------------
# pressure gap bound


def test_pressure_gap_bound_holds():
    grid, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    rho = mass_matched_perturbation(grid, steady, 0.25)
    rep = check_pressure_gap_bound(rho, steady, gp)
    assert rep.holds
    assert rep.lhs <= rep.bound
    assert rep.ratio <= rep.bound / max(rep.gap_norm, 1e-300)


def test_pressure_gap_gamma_two_value():
    grid, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    rho = mass_matched_perturbation(grid, steady, 0.25)
    expected = integrate(ScalarField(grid, np.abs(rho.data**2 - steady.rho_s.data**2)))
    rep = check_pressure_gap_bound(rho, steady, gp)
    assert rep.lhs == pytest.approx(expected, rel=1e-12)


def test_pressure_gap_zero_at_steady():
    grid, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    rep = check_pressure_gap_bound(steady.rho_s, steady, gp)
    assert rep.lhs == 0.0
    assert rep.gap_norm == 0.0
    assert rep.holds


# ---------------------------------------------------------------------------
# relative energy


def test_relative_energy_zero_at_steady_rest():
    grid, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    u = VectorField.zeros(grid)
    assert relative_energy(steady.rho_s, u, steady, gp) == 0.0


def test_relative_energy_splits_kinetic_and_potential():
    grid, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    u = VectorField.zeros(grid)
    u.data[0] = 0.5
    e_kin = relative_energy(steady.rho_s, u, steady, gp)
    # 0.5 * integral rho_s * 0.25 = mass / 8
    assert e_kin == pytest.approx(steady.m / 8.0, rel=1e-12)
    rho = mass_matched_perturbation(grid, steady, 0.2)
    e_pot = relative_energy(rho, VectorField.zeros(grid), steady, gp)
    assert e_pot > 0.0


def test_relative_energy_rejects_negative_density():
    grid, steady = linear_steady()
    gp = GasParams(gamma=2.0, mu=0.1, lam=0.0)
    bad = ScalarField(grid, steady.rho_s.data.copy())
    bad.data[3] = -1e-9
    with pytest.raises(ValueError):
        relative_energy(bad, VectorField.zeros(grid), steady, gp)

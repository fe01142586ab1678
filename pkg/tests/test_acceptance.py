"""Twelve headline acceptance checks, one test per criterion.

Each test prints one pass/fail line (visible under ``pytest -s``) and
asserts the same condition, so the suite doubles as a human-readable
scorecard.  The heavyweight n=512 decay run is shared by criteria 9-11
through module fixtures; everything else is self-contained.
"""

import json
import math
import time

import numpy as np
import pytest

from barostat.bogovskii import (
    bogovskii,
    bogovskii_norm_scan,
    commutator_residual,
    commutator_sweep,
)
from barostat.entropy import (
    check_gap_sandwich,
    check_taylor_expansion,
    default_density_samples,
    relative_potential,
    relative_potential_quadrature,
)
from barostat.equilibrium import Regime, mass_threshold, solve_steady, steady_residual
from barostat.fields import GasParams, Grid, ScalarField, VectorField
from barostat.lyapunov import attach, check_equivalence, fit_decay, LyapunovConfig
from barostat.nssolver import simulate, standard_decay_config


def conclude(num: int, label: str, ok: bool, detail: str):
    print(f"[criterion {num:02d}] {label}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num:02d} {label}: {detail}"


def linear_potential(n=256):
    grid = Grid.line(n)
    return ScalarField.from_function(grid, lambda x: x)


# ------------------------------------------------------ shared decay run ----


@pytest.fixture(scope="module")
def standard_run():
    cfg = standard_decay_config()
    t0 = time.perf_counter()
    traj = simulate(cfg)
    wall = time.perf_counter() - t0
    return traj, wall


@pytest.fixture(scope="module")
def standard_att(standard_run):
    traj, _ = standard_run
    return attach(traj)


@pytest.fixture(scope="module")
def standard_fit(standard_run, standard_att):
    traj, _ = standard_run
    return fit_decay(traj)


@pytest.fixture(scope="module")
def rate_256():
    return fit_decay(simulate(standard_decay_config(n=256))).rate


@pytest.fixture(scope="module")
def rate_256_half():
    return fit_decay(simulate(standard_decay_config(n=256, amplitude=0.025))).rate


# ------------------------------------------------------------- criteria ----


def test_criterion_01_steady_state_exactness():
    F = linear_potential()
    t0 = time.perf_counter()
    st = solve_steady(F, 2.0, 1.0)
    wall = time.perf_counter() - t0
    res = steady_residual(st, F, 2.0)
    k_err = abs(st.k0 - (-1.5))
    ok = (
        k_err <= 1e-10
        and res <= 1e-10
        and st.regime is Regime.UNIQUE_POSITIVE
        and wall < 1.0
    )
    conclude(
        1,
        "steady-state exactness",
        ok,
        f"k0 err {k_err:.2e}, residual {res:.2e}, {st.regime.value}, {wall * 1e3:.0f} ms",
    )


def test_criterion_02_vacuum_regime():
    F = linear_potential()
    t0 = time.perf_counter()
    st = solve_steady(F, 2.0, 0.125)
    wall = time.perf_counter() - t0
    k_err = abs(st.k0 - (1.0 - 1.0 / math.sqrt(2.0)))
    zero_cells = int(np.sum(st.rho_s.data == 0.0))
    vacuum_regime = st.regime in (Regime.VACUUM_BOUNDARY, Regime.VACUUM_INTERIOR)
    ok = k_err <= 1e-8 and zero_cells >= 2 and vacuum_regime and wall < 1.0
    conclude(
        2,
        "vacuum regime",
        ok,
        f"k0 err {k_err:.2e}, {zero_cells} vacuum cells, {st.regime.value}, {wall * 1e3:.0f} ms",
    )


def test_criterion_03_mass_threshold_formula():
    F = linear_potential()
    thr = mass_threshold(F, 2.0)
    thr_err = abs(thr - 0.25)
    shifts = [
        abs(mass_threshold(ScalarField(F.grid, F.data + c), 2.0) - thr)
        for c in (3.7, -1.3)
    ]
    ok = thr_err <= 1e-10 and max(shifts) <= 1e-12
    conclude(
        3,
        "mass threshold formula",
        ok,
        f"threshold err {thr_err:.2e}, shift drift {max(shifts):.2e}",
    )


def test_criterion_04_relative_potential_oracle():
    rng = np.random.default_rng(400)
    rho = rng.uniform(0.01, 10.0, 10_000)
    rho_s = rng.uniform(0.01, 10.0, 10_000)
    t0 = time.perf_counter()
    worst = 0.0
    for gamma in (5.0 / 3.0, 2.0, 3.0):
        exact = relative_potential(rho, rho_s, gamma)
        for i in range(rho.size):
            q = relative_potential_quadrature(rho[i], rho_s[i], gamma)
            worst = max(worst, abs(exact[i] - q) / max(abs(q), abs(exact[i]), 1e-300))
    wall = time.perf_counter() - t0
    ok = worst <= 1e-10 and wall < 10.0
    conclude(
        4,
        "closed-form gap vs quadrature",
        ok,
        f"worst rel err {worst:.2e} on 3x10^4 pairs, {wall:.1f} s",
    )


def test_criterion_05_taylor_identity():
    rng = np.random.default_rng(500)
    rho = rng.uniform(0.01, 10.0, 10_000)
    rho_s = rng.uniform(0.01, 10.0, 10_000)
    worst = 0.0
    for theta in (1.0 / 9.0, 1.0 / 3.0, 0.5):
        for i in range(rho.size):
            res = check_taylor_expansion(rho[i], rho_s[i], theta)
            worst = max(worst, res / (1e-12 * max(rho[i], rho_s[i], 1.0)))
    ok = worst <= 1.0
    conclude(
        5,
        "theta-power Taylor identity",
        ok,
        f"worst residual at {worst:.3f} of the 1e-12 scaled budget",
    )


def test_criterion_06_gap_sandwich():
    gp = GasParams(gamma=2.0, mu=0.5, lam=0.0)
    grid = Grid.line(256)
    F = ScalarField.from_function(grid, lambda x: 0.5 * np.cos(np.pi * x))
    st = solve_steady(F, gp.gamma, 1.0)
    rep = check_gap_sandwich(default_density_samples(st, 100_000), st, gp)
    ok = rep.rhs_nonneg and rep.c0_est > 0.0 and rep.holds
    conclude(
        6,
        "two-sided gap sandwich",
        ok,
        f"RHS >= 0 on {rep.n_pairs} pairs: {rep.rhs_nonneg}, c0_est {rep.c0_est:.4f}, "
        f"holds {rep.holds}",
    )


def test_criterion_07_divergence_inverse():
    errs = {}
    boundary = 0.0
    for n in (128, 256):
        grid = Grid.line(n)
        x = grid.axis_centers(0)
        sol = bogovskii(ScalarField(grid, np.sin(2.0 * np.pi * x)))
        exact = (1.0 - np.cos(2.0 * np.pi * x)) / (2.0 * np.pi)
        errs[n] = float(np.abs(sol.v.data[0] - exact).max())
        boundary = max(boundary, sol.boundary_max)
    ratio = errs[128] / errs[256]

    grid2 = Grid.box(48, 48)
    xs, ys = grid2.centers()
    f2 = np.sin(2.0 * np.pi * xs) * np.cos(np.pi * ys) + 0.3 * np.sin(np.pi * xs) * np.sin(
        3.0 * np.pi * ys
    )
    sol2 = bogovskii(ScalarField(grid2, f2 - f2.mean()))

    s64 = bogovskii_norm_scan(2.0, 100, Grid.line(64))
    s128 = bogovskii_norm_scan(2.0, 100, Grid.line(128))
    drift = abs(s64 - s128) / s64

    ok = (
        errs[256] <= 5e-4
        and 3.0 <= ratio <= 5.0
        and boundary == 0.0
        and sol2.div_residual <= 1e-8
        and drift <= 0.10
    )
    conclude(
        7,
        "divergence inverse",
        ok,
        f"1D err {errs[256]:.2e} (ratio {ratio:.2f}, walls {boundary}), "
        f"2D residual {sol2.div_residual:.2e}, norm-ratio drift {drift:.4f}",
    )


def test_criterion_08_commutator_decay():
    grid = Grid.line(256)
    h = grid.h[0]
    x = grid.axis_centers(0)
    rho = ScalarField(grid, 1.0 + 0.3 * np.sin(2.0 * np.pi * x))
    u = VectorField(grid, (np.sin(np.pi * x) ** 2)[None, :])
    by_eps = dict(commutator_sweep(rho, u, 1.0 / 3.0, [8 * h, 4 * h, 2 * h]))
    norms = [by_eps[8 * h], by_eps[4 * h], by_eps[2 * h]]
    const = ScalarField(grid, np.full(grid.n, 1.7))
    flat = float(np.abs(commutator_residual(const, u, 1.0 / 3.0, 4 * h).data).max())
    ok = (
        norms[0] > norms[1] > norms[2]
        and norms[2] <= 0.1 * norms[0]
        and flat == 0.0
    )
    conclude(
        8,
        "mollifier commutator decay",
        ok,
        f"norms {norms[0]:.2e} > {norms[1]:.2e} > {norms[2]:.2e}, "
        f"final/initial {norms[2] / norms[0]:.3f}, constant-rho max {flat}",
    )


def test_criterion_09_conservation_and_energy_budget(standard_run):
    traj, wall = standard_run
    cols = traj.columns
    mass_drift = float(np.max(np.abs(cols["mass"] - cols["mass"][0])) / cols["mass"][0])
    e0 = cols["E_rel"][0]
    budget_max = float(np.max(cols["E_rel"] + cols["dissipation_cum"]))
    ok = mass_drift <= 1e-9 and budget_max <= 1.001 * e0 and wall < 60.0
    conclude(
        9,
        "conservation and energy budget",
        ok,
        f"mass drift {mass_drift:.2e}, max(E+D)/E0 {budget_max / e0:.6f}, "
        f"runtime {wall:.1f} s",
    )


def test_criterion_10_exponential_decay(standard_fit, rate_256, rate_256_half):
    fit = standard_fit
    amp_change = abs(rate_256_half - rate_256) / rate_256
    res_change = abs(rate_256 - fit.rate) / fit.rate
    ok = (
        fit.r2 >= 0.995
        and fit.rate > 0.0
        and fit.decades >= 3.0
        and fit.envelope_pass
        and amp_change < 0.20
        and res_change < 0.25
    )
    conclude(
        10,
        "exponential decay of E_rel",
        ok,
        f"rate {fit.rate:.3f}, r2 {fit.r2:.5f}, {fit.decades:.2f} decades, "
        f"envelope {fit.envelope_pass}, amplitude-halving shift {amp_change:.1%}, "
        f"n 256->512 shift {res_change:.1%}",
    )


def test_criterion_11_lyapunov_sandwich(standard_run, standard_att, standard_fit):
    traj, _ = standard_run
    att = standard_att
    lc = LyapunovConfig(delta=att.delta, theta=att.theta, constants=att.constants)
    eq = check_equivalence(traj, lc)

    t = traj.columns["t"]
    v = traj.columns["V_delta"]
    k0 = int(np.searchsorted(t, standard_fit.t0))
    k1 = int(np.searchsorted(t, standard_fit.t1))
    vw = v[k0 : k1 + 1]
    ratios = vw[1:] / vw[:-1]
    dt = float(t[k0 + 1] - t[k0])
    c_hat = -math.log(float(ratios.max())) / dt if np.all(vw > 0.0) else -1.0

    ok = (
        att.delta > 0.0
        and eq.sandwich_pass
        and np.isfinite(eq.c1_est)
        and eq.c1_est > 0.0
        and bool(np.all(ratios < 1.0))
        and c_hat > 0.0
    )
    conclude(
        11,
        "Lyapunov sandwich and Gronwall envelope",
        ok,
        f"delta {att.delta:.3f}, sandwich {eq.sandwich_pass} "
        f"(margins {eq.lower_margin:.3f}/{eq.upper_margin:.3f}), C1 {eq.c1_est:.3f}, "
        f"envelope rate {c_hat:.3f}",
    )


def test_criterion_12_determinism(tmp_path):
    def pipeline(out_dir):
        traj = simulate(standard_decay_config(n=128))
        att = attach(traj)
        fit = fit_decay(traj)
        traj.to_csv(out_dir / "trajectory.csv")
        payload = {
            "delta": att.delta,
            "constants": att.constants.to_dict(),
            "rate": fit.rate,
            "r2": fit.r2,
            "t0": fit.t0,
            "prefactor": fit.prefactor,
        }
        (out_dir / "report.json").write_text(json.dumps(payload, sort_keys=True))

    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    pipeline(a)
    pipeline(b)
    same = all(
        (a / name).read_bytes() == (b / name).read_bytes()
        for name in ("trajectory.csv", "report.json")
    )
    conclude(12, "byte-identical rerun", same, "trajectory.csv and report.json compared")

"""Lyapunov functionals, equivalence checks, and decay-rate fitting.

The modified energy is

    V_delta = int( 1/2 rho |u - u*|^2 + G(rho, rho*) ) - delta * X
    X       = int( rho (u - u*) . B[w] / rho* ),
    w       = rho*^(1-theta) (rho^theta - rho*^theta) - mean(...)

with B the divergence-lifting operator from the bogovskii module and
(rho*, u*) the decay reference (the analytic equilibrium with u* = 0, or
the relaxed discrete one on a trajectory).  The companion dissipation
functional is

    W_delta = int( (mu - C delta) |grad du|^2 + (lam + mu) (div du)^2 )
            + (C0 delta / 2) int G,   du = u - u*.

The constants appearing here are existential in the analysis, so they
are measured on the concrete instance and cached in a small JSON ledger:

    c_gap      production constant of the entropy gap scan,
    c_cross    cross-term constant of |X| <= 1/2 K + c_cross int G,
               probed on random mass-matched states,
    c_poincare exact lowest-eigenvalue constant of the discrete gradient
               quadrature, so int |v|^2 <= c_poincare * |grad v|^2 holds
               for every grid field with no scan luck involved.

delta is auto-selected by binary search for the largest value keeping
the sandwich  E/4 <= V_delta <= 2 E  on every sample together with
mu - c_cross*delta >= mu/4, then halved once for margin.

Gradient quadrature convention: faces, with wall terms 2*v0^2/h per end,
matching the viscous operator's discrete energy identity; (div u)^2 uses
the cell-centred odd-reflection divergence.  In 1D both measure the same
integral through slightly different quadratures.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import entropy
from .bogovskii import bogovskii
from .equilibrium import VACUUM_CUTOFF, SteadyState
from .fields import GasParams, Grid, ScalarField, VectorField, div, integrate
from .nssolver import State, TrajectoryRecord


class FitRefused(RuntimeError):
    """Decay fit rejected; the message carries the diagnostic."""


# ------------------------------------------------------------ constants ----


@dataclass(frozen=True)
class EmpiricalConstants:
    c_gap: float
    c_cross: float
    c_poincare: float
    rho_min: float
    rho_max: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EmpiricalConstants":
        return cls(**{k: float(d[k]) for k in ("c_gap", "c_cross", "c_poincare", "rho_min", "rho_max")})


def _axis_min_eigenvalue(n: int) -> float:
    # tridiagonal matrix of the face-form gradient quadrature on one axis
    d = np.full(n, 2.0)
    d[0] = 3.0
    d[-1] = 3.0
    e = np.full(n - 1, -1.0)
    vals = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))[0]
    return float(vals[0])


def poincare_constant(grid: Grid) -> float:
    """Exact discrete constant: int v^2 <= c * (face gradient quadrature)."""

    lam = 0.0
    for k in range(grid.dim):
        lam += _axis_min_eigenvalue(grid.n[k]) / grid.h[k] ** 2
    return 1.0 / lam


def _face_grad_sq(grid: Grid, d: np.ndarray) -> float:
    """Face quadrature of int |grad d|^2 for a (dim,)+shape velocity array."""

    total = 0.0
    vol = grid.cell_volume
    for c in range(grid.dim):
        comp = d[c]
        for axis in range(grid.dim):
            h = grid.h[axis]
            a = np.moveaxis(comp, axis, 0)
            s = 2.0 * np.sum(a[0] ** 2) + np.sum((a[1:] - a[:-1]) ** 2) + 2.0 * np.sum(a[-1] ** 2)
            total += float(s) / h**2 * vol
    return total


def _div_sq(grid: Grid, d: np.ndarray) -> float:
    s = div(VectorField(grid, d)).data
    return float(np.sum(s * s)) * grid.cell_volume


def _random_mode_scalar(grid: Grid, rng) -> np.ndarray:
    xs = grid.centers()
    out = np.zeros(grid.shape)
    for _ in range(4):
        ks = rng.integers(1, 5, size=grid.dim)
        amp = rng.normal()
        term = amp
        for a in range(grid.dim):
            term = term * np.sin(np.pi * ks[a] * xs[a] / grid.extent[a])
        out += term
    peak = np.max(np.abs(out))
    return out / peak if peak > 0 else out


def _random_wall_zero_velocity(grid: Grid, rng) -> np.ndarray:
    xs = grid.centers()
    comps = []
    for _ in range(grid.dim):
        comp = np.zeros(grid.shape)
        for _ in range(3):
            ks = rng.integers(1, 4, size=grid.dim)
            term = rng.normal()
            for a in range(grid.dim):
                term = term * np.sin(np.pi * ks[a] * xs[a] / grid.extent[a])
            comp += term
        comps.append(comp)
    return np.stack(comps)


def cross_term(
    rho: np.ndarray, u: np.ndarray, ref_rho: np.ndarray, ref_u: np.ndarray, grid: Grid, theta: float
) -> float:
    """X = int rho (u - u*) . B[w] / rho* with the mean-centred gap input."""

    w = ref_rho ** (1.0 - theta) * entropy.power_gap(rho, ref_rho, theta)
    w = w - np.mean(w)
    sol = bogovskii(ScalarField(grid, w))
    du = u - ref_u
    dot = np.sum(du * sol.v.data, axis=0)
    return float(np.sum(rho * dot / ref_rho)) * grid.cell_volume


def measure_constants(
    steady: SteadyState, gp: GasParams, trials: int = 40, seed: int = 7000
) -> EmpiricalConstants:
    """Instance-level measurement of the existential constants."""

    rho_s = steady.rho_s.data
    if rho_s.min() <= VACUUM_CUTOFF:
        raise ValueError("constants require a strictly positive equilibrium density")
    grid = steady.rho_s.grid
    theta = entropy.theta_exponent(gp.gamma)
    ep = entropy.entropy_params_for(steady, gp)
    vol = grid.cell_volume

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        bump = _random_mode_scalar(grid, rng)
        a = rng.uniform(0.01, 0.3)
        rho = rho_s * (1.0 + a * bump)
        rho *= steady.m / (float(np.sum(rho)) * vol)
        amp = 10.0 ** rng.uniform(-3.0, 0.0)
        u = amp * _random_wall_zero_velocity(grid, rng)
        g_tot = float(np.sum(entropy.relative_potential(rho, rho_s, gp.gamma))) * vol
        if g_tot <= 0.0:
            continue
        kin = float(np.sum(rho * np.sum(u * u, axis=0))) * vol
        x = cross_term(rho, u, rho_s, np.zeros_like(u), grid, theta)
        ratio = (abs(x) - 0.5 * kin) / g_tot
        worst = max(worst, ratio)

    return EmpiricalConstants(
        c_gap=ep.c0_est,
        c_cross=worst,
        c_poincare=poincare_constant(grid),
        rho_min=float(rho_s.min()),
        rho_max=float(rho_s.max()),
    )


def instance_key(steady: SteadyState, gp: GasParams) -> str:
    grid = steady.rho_s.grid
    h = hashlib.sha256()
    h.update(repr((grid.n, grid.extent, gp.gamma, gp.mu, gp.lam, steady.m)).encode())
    h.update(steady.rho_s.data.tobytes())
    return h.hexdigest()[:16]


def constants_for(
    steady: SteadyState, gp: GasParams, ledger_path: str | None = None, **kw
) -> EmpiricalConstants:
    """Measured constants, read from the JSON ledger when available."""

    key = instance_key(steady, gp)
    ledger = {}
    if ledger_path is not None and os.path.exists(ledger_path):
        with open(ledger_path) as fh:
            ledger = json.load(fh)
        if key in ledger:
            return EmpiricalConstants.from_dict(ledger[key])
    consts = measure_constants(steady, gp, **kw)
    if ledger_path is not None:
        ledger[key] = consts.to_dict()
        with open(ledger_path, "w") as fh:
            json.dump(ledger, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return consts


# ----------------------------------------------------------- functionals ----


@dataclass(frozen=True)
class LyapunovConfig:
    delta: float
    theta: float
    constants: EmpiricalConstants

    def __post_init__(self):
        if not self.delta >= 0.0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        if not 0.0 < self.theta <= 0.5:
            raise ValueError(f"theta must lie in (0, 1/2], got {self.theta}")


def _require_positive_reference(rho_ref: np.ndarray):
    if rho_ref.min() <= VACUUM_CUTOFF:
        raise ValueError("Lyapunov functionals need a strictly positive reference density")


def _v_core(grid, gp, lc, rho, u, ref_rho, ref_u) -> float:
    du = u - ref_u
    kin = 0.5 * float(np.sum(rho * np.sum(du * du, axis=0))) * grid.cell_volume
    g = float(np.sum(entropy.relative_potential(rho, ref_rho, gp.gamma))) * grid.cell_volume
    if lc.delta == 0.0:
        return kin + g
    x = cross_term(rho, u, ref_rho, ref_u, grid, lc.theta)
    return kin + g - lc.delta * x


def _w_core(grid, gp, lc, rho, u, ref_rho, ref_u) -> float:
    coef = gp.mu - lc.constants.c_cross * lc.delta
    if coef <= 0.0:
        raise ValueError(
            f"delta={lc.delta} too large: mu - C*delta = {coef} is not positive"
        )
    du = u - ref_u
    gs = _face_grad_sq(grid, du)
    ds = _div_sq(grid, du)
    g = float(np.sum(entropy.relative_potential(rho, ref_rho, gp.gamma))) * grid.cell_volume
    return coef * gs + (gp.lam + gp.mu) * ds + 0.5 * lc.constants.c_gap * lc.delta * g


def v_delta(s: State, ss: SteadyState, gp: GasParams, lc: LyapunovConfig) -> float:
    """Modified energy of one state against the analytic equilibrium."""

    _require_positive_reference(ss.rho_s.data)
    grid = s.rho.grid
    u = s.mom.data / s.rho.data
    return _v_core(grid, gp, lc, s.rho.data, u, ss.rho_s.data, np.zeros_like(u))


def w_delta(s: State, ss: SteadyState, gp: GasParams, lc: LyapunovConfig) -> float:
    """Dissipation functional; raises when mu - C*delta is not positive."""

    _require_positive_reference(ss.rho_s.data)
    grid = s.rho.grid
    u = s.mom.data / s.rho.data
    return _w_core(grid, gp, lc, s.rho.data, u, ss.rho_s.data, np.zeros_like(u))


# ------------------------------------------------------------ trajectory ----


def _trajectory_series(traj: TrajectoryRecord, theta: float):
    """Cross-term and viscous quadrature series along the samples."""

    grid = traj.config.grid
    ref_rho = traj.relaxed_rho
    ref_u = traj.relaxed_u
    _require_positive_reference(ref_rho)
    n = traj.n_samples
    x = np.zeros(n)
    gs = np.zeros(n)
    ds = np.zeros(n)
    for k, s in enumerate(traj.states):
        u = s.mom.data / s.rho.data
        x[k] = cross_term(s.rho.data, u, ref_rho, ref_u, grid, theta)
        du = u - ref_u
        gs[k] = _face_grad_sq(grid, du)
        ds[k] = _div_sq(grid, du)
    return x, gs, ds


def auto_delta(e_rel: np.ndarray, x: np.ndarray, mu: float, c_cross: float) -> float:
    """Largest delta keeping the sandwich and mu - C*delta >= mu/4, halved."""

    c = max(c_cross, 1e-3)
    hi = 1.5 * mu / c  # infeasible by the coefficient condition
    lo = 0.0

    def feasible(delta: float) -> bool:
        if mu - c_cross * delta < 0.25 * mu:
            return False
        dx = delta * x
        return bool(np.all(dx <= 0.75 * e_rel) and np.all(-dx <= e_rel))

    if not feasible(lo):
        raise RuntimeError("sandwich infeasible even at delta = 0")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * lo


@dataclass(frozen=True)
class LyapunovAttachment:
    delta: float
    theta: float
    constants: EmpiricalConstants


def attach(
    traj: TrajectoryRecord,
    delta: float | None = None,
    theta: float | None = None,
    constants: EmpiricalConstants | None = None,
    ledger_path: str | None = None,
) -> LyapunovAttachment:
    """Fill the V_delta / W_delta columns of a trajectory in place."""

    gp = traj.config.gas
    th = entropy.theta_exponent(gp.gamma) if theta is None else float(theta)
    if constants is None:
        constants = constants_for(traj.steady, gp, ledger_path=ledger_path)
    x, gs, ds = _trajectory_series(traj, th)
    e = traj.columns["E_rel"]
    if delta is None:
        delta = auto_delta(e, x, gp.mu, constants.c_cross)
    lc = LyapunovConfig(delta=delta, theta=th, constants=constants)
    coef = gp.mu - constants.c_cross * delta
    if coef <= 0.0:
        raise ValueError(f"delta={delta} too large: mu - C*delta = {coef} is not positive")
    g = traj.columns["potential_gap"]
    traj.columns["V_delta"] = e - delta * x
    traj.columns["W_delta"] = coef * gs + (gp.lam + gp.mu) * ds + 0.5 * constants.c_gap * delta * g
    traj.extras["cross_term"] = x
    traj.extras["grad_u_sq"] = gs
    traj.extras["div_u_sq"] = ds
    traj.lyapunov_delta = delta
    return LyapunovAttachment(delta=delta, theta=th, constants=constants)


@dataclass(frozen=True)
class EquivalenceReport:
    delta: float
    sandwich_pass: bool
    lower_margin: float
    upper_margin: float
    c1_est: float
    x27_pass: bool
    poincare_pass: bool
    poincare_worst: float
    n_samples: int


def check_equivalence(traj: TrajectoryRecord, lc: LyapunovConfig) -> EquivalenceReport:
    """Per-sample sandwich, V/W boundedness, and the Poincare chain."""

    if traj.lyapunov_delta is None:
        raise ValueError("trajectory has no Lyapunov columns; call attach first")
    e = traj.columns["E_rel"]
    v = traj.columns["V_delta"]
    w = traj.columns["W_delta"]
    g = traj.columns["potential_gap"]
    gs = traj.extras["grad_u_sq"]
    gp = traj.config.gas
    delta = traj.lyapunov_delta

    live = e > 0.0
    # margins relative to E so tail samples report on the same scale
    lower = v[live] / e[live] - 0.25
    upper = 2.0 - v[live] / e[live]
    sandwich = bool(np.all(lower >= 0.0) and np.all(upper >= 0.0) and np.all(v[~live] == 0.0))

    pos = w > 0.0
    c1 = float(np.max(v[pos] / w[pos])) if np.any(pos) else 0.0

    floor = 0.25 * (gp.mu * gs + lc.constants.c_gap * delta * g)
    x27 = bool(np.all(w + 1e-15 >= floor))

    kin2 = 2.0 * traj.columns["kinetic"]
    cap = np.array([float(s.rho.data.max()) for s in traj.states]) * lc.constants.c_poincare * gs
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(cap > 0.0, kin2 / cap, 0.0)
    slack = 1.0 + 1e-12
    poincare = bool(np.all(kin2 <= cap * slack + 1e-300))

    return EquivalenceReport(
        delta=delta,
        sandwich_pass=sandwich,
        lower_margin=float(lower.min()) if lower.size else 0.0,
        upper_margin=float(upper.min()) if upper.size else 0.0,
        c1_est=c1,
        x27_pass=x27,
        poincare_pass=poincare,
        poincare_worst=float(np.max(ratios)) if ratios.size else 0.0,
        n_samples=int(e.size),
    )


# ------------------------------------------------------------- decay fit ----


@dataclass(frozen=True)
class DecayFit:
    t0: float
    t1: float
    rate: float
    r2: float
    prefactor: float
    decades: float
    envelope_pass: bool
    rate_v: float | None


def _running_slope(t: np.ndarray, ln_e: np.ndarray) -> np.ndarray:
    s = np.empty_like(ln_e)
    s[1:-1] = (ln_e[2:] - ln_e[:-2]) / (t[2:] - t[:-2])
    s[0] = (ln_e[1] - ln_e[0]) / (t[1] - t[0])
    s[-1] = (ln_e[-1] - ln_e[-2]) / (t[-1] - t[-2])
    return s


def _detect_t0(t: np.ndarray, ln_e: np.ndarray) -> int:
    """First index whose log-slope stays within 10% over a half-decade drop."""

    half = 0.5 * np.log(10.0)
    s = _running_slope(t, ln_e)
    n = t.size
    for k in range(n - 2):
        if not s[k] < 0.0:
            continue
        j = k
        while j < n and ln_e[j] > ln_e[k] - half:
            j += 1
        if j >= n:
            break  # the remaining data never drops a half-decade
        window = s[k : j + 1]
        if np.all(np.abs(window - s[k]) <= 0.1 * abs(s[k])):
            return k
    raise FitRefused(
        "no stable decay window: the running log-slope never settles within "
        "10% over a half-decade of decay"
    )


def fit_decay(traj: TrajectoryRecord) -> DecayFit:
    """Transient-aware exponential fit of E_rel (and V_delta if present).

    Refuses with a diagnostic when the post-transient window spans less
    than two decades of decay.
    """

    t = traj.columns["t"]
    e = traj.columns["E_rel"]
    if np.any(e <= 0.0):
        raise FitRefused("E_rel is not strictly positive; nothing to fit")
    ln_e = np.log(e)
    e0 = e[0]

    k0 = _detect_t0(t, ln_e)
    cut = 1e-10 * e0
    below = np.nonzero(e[k0:] <= cut)[0]
    k1 = k0 + int(below[0]) if below.size else t.size - 1
    if k1 - k0 < 8:
        raise FitRefused(
            f"decay window too short: {k1 - k0 + 1} samples between t0={t[k0]:.4g} "
            f"and t1={t[k1]:.4g}"
        )
    decades = float((ln_e[k0] - ln_e[k1]) / np.log(10.0))
    if decades < 2.0:
        raise FitRefused(
            f"insufficient decay: {decades:.2f} decades on [{t[k0]:.4g}, {t[k1]:.4g}], "
            "need at least 2; lengthen the run or reduce the transient"
        )

    tw = t[k0 : k1 + 1]
    yw = ln_e[k0 : k1 + 1]
    slope, icept = np.polyfit(tw, yw, 1)
    resid = yw - (icept + slope * tw)
    ss_tot = float(np.sum((yw - yw.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    rate = -float(slope)
    prefactor = float(np.exp(icept + slope * tw[0]))

    envelope = 8.0 * e0 * np.exp(-rate * (tw - tw[0]))
    envelope_pass = bool(np.all(e[k0 : k1 + 1] <= envelope))

    rate_v = None
    v = traj.columns["V_delta"]
    if traj.lyapunov_delta is not None and np.all(v[k0 : k1 + 1] > 0.0):
        sv, _ = np.polyfit(tw, np.log(v[k0 : k1 + 1]), 1)
        rate_v = -float(sv)

    return DecayFit(
        t0=float(t[k0]),
        t1=float(t[k1]),
        rate=rate,
        r2=r2,
        prefactor=prefactor,
        decades=decades,
        envelope_pass=envelope_pass,
        rate_v=rate_v,
    )


def synthetic_trajectory(t: np.ndarray, e: np.ndarray) -> TrajectoryRecord:
    """Wrap a bare (t, E) series so fit_decay can run on synthetic data."""

    cols = {name: np.zeros(t.size) for name in (
        "t", "mass", "kinetic", "potential_gap", "E_rel", "E_paper",
        "dissipation_cum", "V_delta", "W_delta",
    )}
    cols["t"] = np.asarray(t, dtype=np.float64)
    cols["E_rel"] = np.asarray(e, dtype=np.float64)
    return TrajectoryRecord(
        config=None,
        steady=None,
        relaxed_rho=np.array([]),
        relaxed_u=np.array([]),
        columns=cols,
        extras={},
        states=[],
    )

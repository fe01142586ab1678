"""Hydrostatic equilibria of the barotropic system with a potential force.

A steady density rho_s with no flow balances the pressure gradient against
rho_s * grad(F).  Writing the pressure as rho**gamma, every solution of the
balance has the closed form

    rho_s = ((gamma - 1) / gamma * max(F - k, 0)) ** (1 / (gamma - 1))

for some shift constant k.  The candidate mass

    mass_at_shift(F, gamma, k) = integral of that density

is continuous and decreasing in k and vanishes at k = max F, so the shift
matching a prescribed total mass m is found by bisection.  Whether the
resulting density stays positive, touches zero, or leaves entire vacuum
regions is decided by the position of m relative to mass_at_shift(min F);
uniqueness additionally depends on the connectivity of the upper level
sets of F, summarised here by a critical level and the mass attached to it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .fields import Grid, ScalarField, grad, integrate, lp_norm

__all__ = [
    "Regime",
    "ThresholdRelation",
    "SteadyState",
    "RegimeReport",
    "mass_threshold",
    "mass_at_shift",
    "density_from_shift",
    "domain_inf",
    "solve_steady",
    "steady_residual",
    "classify_regime",
    "level_connectivity",
]

# relative half-width of the band around the threshold mass treated as "equal"
_THRESHOLD_BAND = 1e-9
# cells below this density are considered vacuum
VACUUM_CUTOFF = 1e-12


class Regime(enum.Enum):
    """Qualitative class of the steady state."""

    UNIQUE_POSITIVE = "UniquePositive"
    VACUUM_BOUNDARY = "VacuumBoundary"
    VACUUM_INTERIOR = "VacuumInterior"
    CONTINUUM_RISK = "ContinuumRisk"


class ThresholdRelation(enum.Enum):
    BELOW = "Below"
    EQUAL = "Equal"
    ABOVE = "Above"


@dataclass
class SteadyState:
    """A solved hydrostatic balance at prescribed total mass."""

    rho_s: ScalarField
    k0: float
    regime: Regime
    m: float
    m_threshold: float
    m_hat: float

    @property
    def grid(self) -> Grid:
        return self.rho_s.grid


@dataclass
class RegimeReport:
    """Uniqueness/vacuum classification of (F, gamma, m)."""

    is_unique: bool
    vacuum_present: bool
    threshold_relation: ThresholdRelation
    m_threshold: float
    m_hat: float
    k_hat: float


def density_from_shift(F: ScalarField, gamma: float, k: float) -> ScalarField:
    """Candidate steady density for shift constant k (zero where F <= k)."""
    base = (gamma - 1.0) / gamma * np.maximum(F.data - k, 0.0)
    return ScalarField(F.grid, base ** (1.0 / (gamma - 1.0)))


def mass_at_shift(F: ScalarField, gamma: float, k: float) -> float:
    """Total mass of the candidate density for shift k.

    Continuous and decreasing in k; it equals the vacuum-threshold mass at
    k = min F and vanishes at k = max F.
    """
    if not gamma > 1.0:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    val = integrate(density_from_shift(F, gamma, k))
    if not np.isfinite(val):
        raise RuntimeError(f"candidate mass is not finite at shift k={k}")
    return val


def domain_inf(F: ScalarField) -> float:
    """Infimum of F over the closed domain.

    Cell centers sit half a cell away from the walls, so the plain data
    minimum misses boundary minima by O(h).  The wall-face values are
    recovered by three-point quadratic extrapolation along each normal,
    which is exact for quadratics and keeps the infimum estimate at the
    stencil's own order.
    """
    best = float(F.data.min())
    for axis in range(F.grid.dim):
        a = np.moveaxis(F.data, axis, 0)
        for f0, f1, f2 in ((a[0], a[1], a[2]), (a[-1], a[-2], a[-3])):
            wall = (15.0 * f0 - 10.0 * f1 + 3.0 * f2) / 8.0
            best = min(best, float(np.min(wall)))
    return best


def mass_threshold(F: ScalarField, gamma: float) -> float:
    """Largest mass that still admits vacuum: the candidate mass at k = inf F."""
    return mass_at_shift(F, gamma, domain_inf(F))


def _bisect_shift(F: ScalarField, gamma: float, m: float, lo: float, hi: float,
                  max_iter: int = 200) -> float:
    """Solve mass_at_shift(k) = m on [lo, hi] where the mass is decreasing."""
    a, b = float(lo), float(hi)
    fa = mass_at_shift(F, gamma, a)
    fb = mass_at_shift(F, gamma, b)
    if not (fa >= m >= fb):
        raise RuntimeError(f"bisection bracket lost: S({a})={fa}, S({b})={fb}, m={m}")
    tol = 1e-13
    for _ in range(max_iter):
        if (b - a) <= tol * max(1.0, abs(a), abs(b)):
            break
        mid = 0.5 * (a + b)
        if mass_at_shift(F, gamma, mid) >= m:
            a = mid
        else:
            b = mid
    else:
        raise RuntimeError("shift bisection failed to converge in 200 iterations")
    return 0.5 * (a + b)


def solve_steady(F: ScalarField, gamma: float, m: float) -> SteadyState:
    """Construct the steady density with total mass m for potential F.

    The shift constant is bisected until the discrete candidate mass matches
    m; the returned density therefore reproduces m to near rounding.  Masses
    within a relative band of 1e-9 of the vacuum threshold are snapped onto
    it (k0 = min F exactly).
    """
    if not gamma > 1.0:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    if not (np.isfinite(m) and m > 0.0):
        raise ValueError(f"total mass must be positive and finite, got {m}")

    f_inf = domain_inf(F)
    f_max = float(F.data.max())
    threshold = mass_threshold(F, gamma)
    k_hat, m_hat = level_connectivity(F, gamma)

    band = _THRESHOLD_BAND * max(threshold, np.finfo(float).tiny)
    if abs(m - threshold) <= band:
        k0 = f_inf
        regime = Regime.VACUUM_BOUNDARY
    elif m > threshold:
        # positive everywhere: the shift sits strictly below inf F
        span = max(f_max - f_inf, 1.0)
        lo = f_inf - span
        for _ in range(80):
            if mass_at_shift(F, gamma, lo) >= m:
                break
            span *= 2.0
            lo = f_inf - span
        else:
            raise RuntimeError(f"could not bracket shift for mass m={m}")
        k0 = _bisect_shift(F, gamma, m, lo, f_inf)
        regime = Regime.UNIQUE_POSITIVE
    else:
        k0 = _bisect_shift(F, gamma, m, f_inf, f_max)
        regime = Regime.CONTINUUM_RISK if m < m_hat - band else Regime.VACUUM_INTERIOR

    rho_s = density_from_shift(F, gamma, k0)
    got = integrate(rho_s)
    if regime is not Regime.VACUUM_BOUNDARY and abs(got - m) > 1e-10 * max(m, 1.0):
        raise RuntimeError(f"steady mass mismatch after bisection: got {got}, wanted {m}")
    return SteadyState(rho_s=rho_s, k0=float(k0), regime=regime, m=float(m),
                       m_threshold=threshold, m_hat=m_hat)


def steady_residual(state: SteadyState, F: ScalarField, gamma: float) -> float:
    """Max-norm hydrostatic imbalance |grad(rho_s**gamma) - rho_s grad(F)|.

    Evaluated only where rho_s exceeds the vacuum cutoff; the balance is
    meaningless on vacuum cells and the one-sided stencils would otherwise
    differentiate across the vacuum edge.
    """
    rho = state.rho_s
    p = ScalarField(rho.grid, rho.data**gamma)
    gp = grad(p)
    gf = grad(F)
    res = gp.data - rho.data[None] * gf.data
    mask = rho.data > VACUUM_CUTOFF
    if not mask.any():
        return 0.0
    mag = np.sqrt(np.sum(res * res, axis=0))
    return float(mag[mask].max())


def level_connectivity(F: ScalarField, gamma: float, levels: int = 64) -> tuple[float, float]:
    """Critical disconnection level of the upper sets of F and its mass.

    Sweeps quantile levels k of F and labels the cells with F > k (adjacency
    in 1D, 4-neighbour connectivity in 2D).  Returns the smallest sampled
    level whose upper set splits into several components, or max F when
    every sampled upper set is connected, together with the candidate mass
    at that level.  The sweep sees only grid-resolved topology: features
    finer than a cell are invisible, and the critical level is located no
    finer than the quantile spacing.
    """
    data = F.data
    f_max = float(data.max())
    qs = np.linspace(0.0, 1.0, levels + 2)[1:-1]
    ks = np.unique(np.quantile(data.ravel(), qs))
    structure = np.ones((3,) * F.grid.dim) if F.grid.dim == 1 else ndimage.generate_binary_structure(2, 1)
    k_hat = f_max
    for k in ks:
        if k >= f_max:
            continue
        mask = data > k
        if not mask.any():
            continue
        _, ncomp = ndimage.label(mask, structure=structure)
        if ncomp > 1:
            k_hat = float(k)
            break
    m_hat = mass_at_shift(F, gamma, k_hat)
    return k_hat, m_hat


def classify_regime(F: ScalarField, gamma: float, m: float) -> RegimeReport:
    """Uniqueness and vacuum classification for the triple (F, gamma, m).

    Masses at or above the critical-level mass give at most one steady
    state; strictly below it the steady state is non-unique (a continuum).
    A monotone potential never disconnects its upper level sets, so its
    critical-level mass is zero and every positive mass is unique.
    """
    if not (np.isfinite(m) and m > 0.0):
        raise ValueError(f"total mass must be positive and finite, got {m}")
    threshold = mass_threshold(F, gamma)
    k_hat, m_hat = level_connectivity(F, gamma)
    band = _THRESHOLD_BAND * max(threshold, np.finfo(float).tiny)
    if abs(m - threshold) <= band:
        relation = ThresholdRelation.EQUAL
    elif m > threshold:
        relation = ThresholdRelation.ABOVE
    else:
        relation = ThresholdRelation.BELOW
    is_unique = (relation is ThresholdRelation.ABOVE) or (m >= m_hat - band)
    vacuum_present = relation is not ThresholdRelation.ABOVE
    return RegimeReport(
        is_unique=is_unique,
        vacuum_present=vacuum_present,
        threshold_relation=relation,
        m_threshold=threshold,
        m_hat=m_hat,
        k_hat=k_hat,
    )

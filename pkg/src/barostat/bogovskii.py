"""Right inverse of the divergence with zero wall values, plus mollification.

Three tools live here:

  * ``bogovskii``: given a mean-zero scalar f, produce a velocity-like field
    v with div v = f and v vanishing on the walls.  In 1D the solution is
    the unique cumulative antiderivative; in 2D we return the minimum-norm
    solution of the discrete divergence system through its normal
    equations, factored once per grid and cached.
  * ``mollify``: convolution with a normalized compact bump on the
    zero-extension of the field, contracting every L^p norm.
  * ``transport_commutator`` and friends: the defect u . grad [w]_eps -
    [u . grad w]_eps measuring how mollification fails to commute with
    advection.  It vanishes identically (exact zeros, not small numbers)
    when the transported scalar is constant, is linear in that scalar, and
    decays as the bump radius shrinks; all three properties are tested.

Residual conventions: the 1D construction satisfies the conservative
face-difference divergence to rounding; the cell-centered stencil from the
fields module reproduces f to O(h^2) on top of that.  The 2D solve is exact
for the cell-centered stencil itself, up to the direct solver's precision.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import convolve as _ndconvolve
from scipy.sparse.linalg import splu

from .fields import Grid, ScalarField, VectorField, grad, div, integrate, lp_norm

__all__ = [
    "BogovskiiSolve",
    "bogovskii",
    "bogovskii_norm_scan",
    "mollify",
    "mollify_extended",
    "transport_commutator",
    "commutator_residual",
    "commutator_sweep",
    "commutator_bound_scan",
]

_MEAN_TOL = 1e-12
_RESIDUAL_TOL = 1e-8


@dataclass
class BogovskiiSolve:
    """Solution bundle for div v = f with zero wall values.

    div_residual is relative: the conservative face-difference residual in
    1D (rounding-level by construction) and the cell-centered stencil
    residual in 2D (direct-solver precision).  boundary_max is the largest
    absolute wall-face value of v; the 1D antiderivative pins both wall
    faces to exact zero, and the cell-centered stencil's odd reflection
    defines the 2D wall faces as exact zeros.
    """

    v: VectorField
    f: ScalarField
    div_residual: float
    h1_ratio: float
    boundary_max: float


def _check_mean_zero(f: ScalarField) -> float:
    f_norm = lp_norm(f, 2.0)
    m = abs(integrate(f)) / f.grid.volume
    if f_norm > 0.0 and m > _MEAN_TOL * f_norm:
        raise ValueError(f"input must be mean-zero: |mean| = {m:.3e} vs tol {_MEAN_TOL * f_norm:.3e}")
    return f_norm


def _w1p_norm(v: VectorField, p: float) -> float:
    grid = v.grid
    parts = [v.data[c] for c in range(grid.dim)]
    for c in range(grid.dim):
        gc = grad(ScalarField(grid, v.data[c]))
        parts.extend(gc.data[k] for k in range(grid.dim))
    mag = np.sqrt(sum(q * q for q in parts))
    return lp_norm(ScalarField(grid, mag), p)


def _diff_matrix(n: int, h: float) -> sp.csr_matrix:
    """Sparse twin of the odd-reflection centered difference in fields."""
    main = sp.diags([-np.ones(n - 1), np.ones(n - 1)], offsets=[-1, 1], format="lil")
    main[0, 0] = 1.0
    main[0, 1] = 1.0
    main[n - 1, n - 2] = -1.0
    main[n - 1, n - 1] = -1.0
    return (main / (2.0 * h)).tocsr()


_NORMAL_CACHE: dict = {}


def _normal_solver(grid: Grid):
    key = (grid.n, grid.extent)
    hit = _NORMAL_CACHE.get(key)
    if hit is not None:
        return hit
    nx, ny = grid.n
    hx, hy = grid.h
    dx = _diff_matrix(nx, hx)
    dy = _diff_matrix(ny, hy)
    big_x = sp.kron(dx, sp.identity(ny, format="csr"), format="csr")
    big_y = sp.kron(sp.identity(nx, format="csr"), dy, format="csr")
    a = (big_x @ big_x.T + big_y @ big_y.T).tolil()
    # the rows of the normal system are dependent (they sum to zero); drop
    # the first equation and pin that multiplier instead
    a[0, :] = 0.0
    a[0, 0] = 1.0
    lu = splu(a.tocsc())
    hit = (lu, big_x, big_y)
    _NORMAL_CACHE[key] = hit
    return hit


def bogovskii(f: ScalarField) -> BogovskiiSolve:
    """Solve div v = f with v = 0 on the walls, for mean-zero f.

    1D: v is the cumulative midpoint antiderivative with a linear ramp
    subtracted so both wall faces land on exact zero.  2D: minimum-norm
    solution of the discrete divergence system via its normal equations.
    Raises on inputs that are not mean-zero and on solver failure.
    """
    grid = f.grid
    f_norm = _check_mean_zero(f)

    if grid.dim == 1:
        h = grid.h[0]
        faces = np.concatenate([[0.0], np.cumsum(f.data) * h])
        faces -= np.linspace(0.0, 1.0, grid.n[0] + 1) * faces[-1]
        vdata = 0.5 * (faces[:-1] + faces[1:])
        v = VectorField(grid, vdata[np.newaxis, :])
        face_res = (faces[1:] - faces[:-1]) / h - f.data
        residual = float(np.sqrt(np.sum(face_res**2) * grid.cell_volume))
        boundary_max = float(max(abs(faces[0]), abs(faces[-1])))
    else:
        lu, big_x, big_y = _normal_solver(grid)
        rhs = f.data.ravel().copy()
        rhs[0] = 0.0
        q = lu.solve(rhs)
        vdata = np.stack([
            (big_x.T @ q).reshape(grid.shape),
            (big_y.T @ q).reshape(grid.shape),
        ])
        v = VectorField(grid, vdata)
        res = div(v).data - f.data
        residual = float(np.sqrt(np.sum(res**2) * grid.cell_volume))
        # wall faces are exact zeros under the odd-reflection convention
        boundary_max = 0.0

    rel_residual = residual / f_norm if f_norm > 0.0 else residual
    if rel_residual > _RESIDUAL_TOL:
        raise RuntimeError(f"divergence solve failed: relative residual {rel_residual:.3e}")
    h1_ratio = _w1p_norm(v, 2.0) / f_norm if f_norm > 0.0 else 0.0
    return BogovskiiSolve(v=v, f=f, div_residual=rel_residual, h1_ratio=h1_ratio,
                          boundary_max=boundary_max)


def _random_mean_zero(grid: Grid, rng: np.random.Generator, modes: int = 5) -> ScalarField:
    """Smooth random field with the discrete mean removed; grid-independent law."""
    data = np.zeros(grid.shape)
    if grid.dim == 1:
        x = grid.axis_centers(0) / grid.extent[0]
        for k in range(1, modes + 1):
            a, b = rng.standard_normal(2)
            data += a * np.cos(k * np.pi * x) + b * np.sin(k * np.pi * x)
    else:
        x, y = grid.centers()
        x = x / grid.extent[0]
        y = y / grid.extent[1]
        for k in range(1, modes + 1):
            for l in range(1, modes + 1):
                a, b = rng.standard_normal(2)
                data += a * np.cos(k * np.pi * x) * np.cos(l * np.pi * y)
                data += b * np.sin(k * np.pi * x) * np.sin(l * np.pi * y)
    data -= data.mean()
    return ScalarField(grid, data)


def _random_wall_zero_vector(grid: Grid, rng: np.random.Generator, modes: int = 4) -> VectorField:
    """Smooth random vector field with a sine envelope vanishing on the walls."""
    env = np.ones(grid.shape)
    coords = grid.centers()
    for a in range(grid.dim):
        env = env * np.sin(np.pi * coords[a] / grid.extent[a])
    comps = []
    for _ in range(grid.dim):
        body = np.zeros(grid.shape)
        for k in range(1, modes + 1):
            amp = rng.standard_normal()
            phase = rng.uniform(0.0, 2.0 * np.pi)
            body += amp * np.cos(k * np.pi * coords[0] / grid.extent[0] + phase)
        comps.append(env * body)
    return VectorField(grid, np.stack(comps))


def bogovskii_norm_scan(p: float, trials: int, grid: Grid | None = None,
                        mode: str = "grad", seed: int = 1000) -> float:
    """Worst operator ratio over random inputs.

    mode "grad": max ||v||_{W^{1,p}} / ||f||_{L^p} over random mean-zero f.
    mode "div": feed f = div g for random g vanishing on the walls and
    report max ||v||_{L^p} / ||g||_{L^p}.  Trial fields are drawn from a
    grid-independent law so the ratio can be compared across resolutions.
    """
    if trials < 10:
        raise ValueError("need at least 10 trials for a meaningful scan")
    if mode not in ("grad", "div"):
        raise ValueError(f"unknown scan mode {mode!r}")
    if grid is None:
        grid = Grid.line(128)
    worst = 0.0
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        if mode == "grad":
            f = _random_mean_zero(grid, rng)
            denom = lp_norm(f, p)
            if denom == 0.0:
                continue
            sol = bogovskii(f)
            ratio = _w1p_norm(sol.v, p) / denom
        else:
            g = _random_wall_zero_vector(grid, rng)
            denom = lp_norm(g, p)
            if denom == 0.0:
                continue
            sol = bogovskii(div(g))
            ratio = lp_norm(sol.v, p) / denom
        worst = max(worst, ratio)
    return worst


# ---------------------------------------------------------------------------
# mollifier


def _bump_kernel(grid: Grid, eps: float) -> np.ndarray:
    """Normalized (1 - (r/eps)^2)^2 bump sampled at cell offsets."""
    offsets = []
    for ha in grid.h:
        k = int(np.floor(eps / ha))
        offsets.append(np.arange(-k, k + 1) * ha)
    if grid.dim == 1:
        r2 = (offsets[0] / eps) ** 2
    else:
        r2 = (offsets[0][:, None] / eps) ** 2 + (offsets[1][None, :] / eps) ** 2
    kern = np.maximum(0.0, 1.0 - r2) ** 2
    return kern / kern.sum()


def mollify(f: ScalarField, eps: float) -> ScalarField:
    """Convolve with the normalized bump of radius eps on the zero-extension.

    Contracts every L^p norm (the kernel is nonnegative with unit sum) and
    converges to f as eps shrinks.  A radius below one cell makes the
    kernel a delta, so the field is returned unchanged with a warning.
    """
    if eps <= 0.0:
        raise ValueError(f"mollification radius must be positive, got {eps}")
    if eps <= min(f.grid.h):
        warnings.warn("mollification radius below one cell; returning the field unchanged")
        return f.copy()
    kern = _bump_kernel(f.grid, eps)
    return ScalarField(f.grid, _ndconvolve(f.data, kern, mode="constant", cval=0.0))


def mollify_extended(f: ScalarField, eps: float) -> tuple[np.ndarray, tuple[int, ...]]:
    """Mollify on a zero-padded extension and keep the outside cells.

    Returns the padded result and the per-axis pad width.  Summing the
    returned array recovers the full mass of f (nothing is truncated at
    the walls), which is the discrete form of mass preservation under
    mollification of the zero-extension.
    """
    if eps <= 0.0:
        raise ValueError(f"mollification radius must be positive, got {eps}")
    kern = _bump_kernel(f.grid, eps)
    pads = tuple((s - 1) // 2 for s in kern.shape)
    padded = np.pad(f.data, [(w, w) for w in pads])
    return _ndconvolve(padded, kern, mode="constant", cval=0.0), pads


# ---------------------------------------------------------------------------
# advective commutator


def _central_diff(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Plain centered difference on an already-padded array; edges left zero."""
    out = np.zeros_like(a)
    sl = [slice(None)] * a.ndim
    hi = list(sl)
    lo = list(sl)
    mid = list(sl)
    hi[axis] = slice(2, None)
    lo[axis] = slice(None, -2)
    mid[axis] = slice(1, -1)
    out[tuple(mid)] = (a[tuple(hi)] - a[tuple(lo)]) / (2.0 * h)
    return out


def transport_commutator(w: ScalarField, u: VectorField, eps: float) -> np.ndarray:
    """u . grad [w]_eps - [u . grad w]_eps on the zero-extension, cropped to the domain.

    Linear in w, exactly zero for constant w away from the walls, and
    O(eps^2)-small for smooth data.  Values within eps plus one cell of a
    wall see the zero-extension jump and are not meaningful; callers mask
    them (see commutator_residual).
    """
    grid = w.grid
    kern = _bump_kernel(grid, eps)
    pads = tuple((s - 1) // 2 + 1 for s in kern.shape)
    spec = [(p, p) for p in pads]
    wp = np.pad(w.data, spec)
    w_moll = _ndconvolve(wp, kern, mode="constant", cval=0.0)
    term_a = np.zeros_like(wp)
    adv = np.zeros_like(wp)
    for c in range(grid.dim):
        up = np.pad(u.data[c], spec)
        term_a += up * _central_diff(w_moll, grid.h[c], c)
        adv += up * _central_diff(wp, grid.h[c], c)
    term_b = _ndconvolve(adv, kern, mode="constant", cval=0.0)
    r = term_a - term_b
    crop = tuple(slice(p, -p) for p in pads)
    return r[crop]


def _interior_mask(grid: Grid, eps: float) -> np.ndarray:
    margin = eps + max(grid.h)
    return grid.boundary_distance() > margin


def commutator_residual(rho: ScalarField, u: VectorField, theta: float, eps: float) -> ScalarField:
    """Advective mollification defect of rho**theta, masked to the interior.

    Cells within eps plus one cell of a wall are zeroed: there the
    zero-extension jump of rho**theta contaminates the stencils, which is
    exactly the region the interior-subdomain restriction exists to
    exclude.  Raises when that interior is empty.
    """
    if not 0.0 < theta <= 3.0:
        raise ValueError(f"theta must lie in (0, 3], got {theta}")
    if (rho.data < 0.0).any():
        raise ValueError("density must be nonnegative")
    grid = rho.grid
    mask = _interior_mask(grid, eps)
    if not mask.any():
        raise ValueError(f"mollification radius {eps} leaves no interior cells")
    w = ScalarField(grid, rho.data**theta)
    r = transport_commutator(w, u, eps)
    return ScalarField(grid, np.where(mask, r, 0.0))


def commutator_sweep(rho: ScalarField, u: VectorField, theta: float,
                     eps_list, q: float = 2.0) -> list[tuple[float, float]]:
    """L^q size of the commutator on a common interior, per radius.

    The interior is fixed by the largest radius in the sweep so the norms
    are comparable; for smooth data they decrease roughly like eps^2.
    """
    eps_list = sorted(float(e) for e in eps_list)
    if not eps_list:
        raise ValueError("empty radius list")
    grid = rho.grid
    mask = _interior_mask(grid, eps_list[-1])
    if not mask.any():
        raise ValueError("largest radius leaves no common interior")
    w = ScalarField(grid, rho.data**theta)
    out = []
    for eps in eps_list:
        r = transport_commutator(w, u, eps)
        out.append((eps, lp_norm(ScalarField(grid, np.where(mask, r, 0.0)), q)))
    return out


def commutator_bound_scan(grid: Grid, trials: int, eps: float, theta: float = 1.0 / 3.0,
                          p: float = 2.0, q: float = 2.0, seed: int = 2000) -> float:
    """Worst ratio ||r||_{L^r(K)} / (||rho^theta||_p ||u||_{W^{1,q}}) over random data.

    The output exponent is 1/r = 1/p + 1/q.  Finiteness of the scanned
    constant across trials is the falsifiable content of the product bound.
    """
    if trials < 10:
        raise ValueError("need at least 10 trials for a meaningful scan")
    r_exp = 1.0 / (1.0 / p + 1.0 / q)
    worst = 0.0
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        bump = _random_mean_zero(grid, rng, modes=3)
        scale = max(1e-3, float(np.abs(bump.data).max()))
        rho = ScalarField(grid, 1.0 + 0.45 * bump.data / scale)
        u = _random_wall_zero_vector(grid, rng, modes=3)
        res = commutator_residual(rho, u, theta, eps)
        w_norm = lp_norm(ScalarField(grid, rho.data**theta), p)
        u_norm = _w1p_norm(u, q)
        if w_norm * u_norm == 0.0:
            continue
        worst = max(worst, lp_norm(res, r_exp) / (w_norm * u_norm))
    return worst

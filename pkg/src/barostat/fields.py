"""Uniform cell-centered grids, fields, quadrature and discrete operators.

Conventions used by every other module:

* cell centers sit at (i + 1/2) h along each axis, and integrals are
  midpoint sums, so a field value is a cell value in the midpoint sense;
* vector (velocity-like) fields are extended across walls by odd
  reflection, which pins the interpolated wall value to zero;
* scalar fields use second-order one-sided differences at the walls.

All reductions go through numpy's pairwise summation, so repeated calls
on the same data are bitwise identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "GasParams",
    "integrate",
    "mean",
    "grad",
    "div",
    "lap",
    "lp_norm",
    "write_snapshot",
    "read_snapshot",
]


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered mesh of an interval (1D) or a rectangle (2D).

    ``n`` is the cell count per axis and ``extent`` the domain length per
    axis; the spacing is ``h = extent / n`` exactly.
    """

    n: tuple[int, ...]
    extent: tuple[float, ...]

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        extent = tuple(float(v) for v in self.extent)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "extent", extent)
        if len(n) not in (1, 2):
            raise ValueError(f"grid must be 1D or 2D, got {len(n)} axes")
        if len(extent) != len(n):
            raise ValueError("n and extent must have the same number of axes")
        if any(v < 4 for v in n):
            raise ValueError(f"need at least 4 cells per axis, got {n}")
        if any(not np.isfinite(v) or v <= 0 for v in extent):
            raise ValueError(f"extent must be positive and finite, got {extent}")

    @classmethod
    def line(cls, n: int, length: float = 1.0) -> "Grid":
        return cls((n,), (length,))

    @classmethod
    def box(cls, nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> "Grid":
        return cls((nx, ny), (lx, ly))

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / m for L, m in zip(self.extent, self.n))

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for s in self.h:
            vol *= s
        return vol

    @property
    def volume(self) -> float:
        vol = 1.0
        for L in self.extent:
            vol *= L
        return vol

    def axis_centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        step = self.h[axis]
        return (np.arange(self.n[axis]) + 0.5) * step

    def centers(self) -> list[np.ndarray]:
        """Broadcastable center-coordinate arrays, one per axis."""
        axes = [self.axis_centers(k) for k in range(self.dim)]
        if self.dim == 1:
            return axes
        return list(np.meshgrid(*axes, indexing="ij"))

    def boundary_distance(self) -> np.ndarray:
        """Distance from each cell center to the nearest wall."""
        dist = None
        for k in range(self.dim):
            x = self.axis_centers(k)
            d = np.minimum(x, self.extent[k] - x)
            d = d.reshape([-1 if a == k else 1 for a in range(self.dim)])
            dist = d if dist is None else np.minimum(dist, d)
        return np.broadcast_to(dist, self.shape).copy()


def _as_field_data(grid: Grid, data, shape) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"field data has shape {arr.shape}, expected {shape}")
    if not np.isfinite(arr).all():
        raise ValueError("field data contains non-finite values")
    return np.ascontiguousarray(arr)


@dataclass
class ScalarField:
    """A scalar sampled at cell centers."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = _as_field_data(self.grid, self.data, self.grid.shape)

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, np.asarray(fn(*grid.centers()), dtype=np.float64))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.data.copy())


@dataclass
class VectorField:
    """A vector sampled at cell centers; data shape is (dim,) + grid.shape."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        shape = (self.grid.dim,) + self.grid.shape
        self.data = _as_field_data(self.grid, self.data, shape)

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((grid.dim,) + grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, *fns) -> "VectorField":
        if len(fns) != grid.dim:
            raise ValueError(f"need {grid.dim} component functions, got {len(fns)}")
        xs = grid.centers()
        comps = [np.broadcast_to(np.asarray(f(*xs), dtype=np.float64), grid.shape) for f in fns]
        return cls(grid, np.stack(comps))

    def component(self, k: int) -> np.ndarray:
        return self.data[k]

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.data.copy())


@dataclass(frozen=True)
class GasParams:
    """Adiabatic exponent and viscosities; the pressure is rho**gamma."""

    gamma: float
    mu: float
    lam: float = 0.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not self.mu > 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if 2.0 * self.mu + 3.0 * self.lam < 0.0:
            raise ValueError("need 2*mu + 3*lam >= 0")

    @property
    def bulk_1d(self) -> float:
        """Effective viscosity of the one-dimensional momentum equation."""
        return 2.0 * self.mu + self.lam

    @property
    def decay_admissible(self) -> bool:
        """Exponents above 3/2 are the ones with a proven decay rate."""
        return self.gamma > 1.5


# ---------------------------------------------------------------------------
# quadrature and norms


def _data_of(f) -> np.ndarray:
    return f.data if hasattr(f, "data") else np.asarray(f, dtype=np.float64)


def integrate(f, grid: Grid | None = None) -> float:
    """Midpoint-rule integral over the domain.

    numpy's pairwise summation gives a fixed reduction tree, so the result
    is reproducible bit for bit across calls.
    """
    if grid is None:
        grid = f.grid
    return float(np.sum(_data_of(f))) * grid.cell_volume


def mean(f, grid: Grid | None = None) -> float:
    if grid is None:
        grid = f.grid
    return integrate(f, grid) / grid.volume


def lp_norm(f, p: float, grid: Grid | None = None) -> float:
    """Discrete L^p norm; p may be inf. Vector fields use the pointwise 2-norm."""
    if grid is None:
        grid = f.grid
    data = _data_of(f)
    if data.ndim == grid.dim + 1:
        mag = np.sqrt(np.sum(data * data, axis=0))
    else:
        mag = np.abs(data)
    if np.isinf(p):
        return float(mag.max())
    p = float(p)
    if p < 1.0:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    return float(np.sum(mag**p) * grid.cell_volume) ** (1.0 / p)


# ---------------------------------------------------------------------------
# stencils

def _moved(a: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(a, axis, 0)


def _odd_first_diff(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Central first derivative with odd-reflection ghosts (wall value zero)."""
    am = _moved(a, axis)
    out = np.empty_like(am)
    out[1:-1] = (am[2:] - am[:-2]) / (2.0 * h)
    out[0] = (am[1] + am[0]) / (2.0 * h)
    out[-1] = (-am[-1] - am[-2]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def _odd_second_diff(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second difference with odd-reflection ghosts."""
    am = _moved(a, axis)
    out = np.empty_like(am)
    out[1:-1] = (am[2:] - 2.0 * am[1:-1] + am[:-2]) / (h * h)
    out[0] = (am[1] - 3.0 * am[0]) / (h * h)
    out[-1] = (am[-2] - 3.0 * am[-1]) / (h * h)
    return np.moveaxis(out, 0, axis)


def grad(f: ScalarField) -> VectorField:
    """Gradient of a scalar: central differences, one-sided at the walls.

    Interior cells are second order; the wall closure is the standard
    three-point one-sided formula, also second order, written difference
    first so a constant field gets an exactly zero gradient.
    """
    g = f.grid
    comps = []
    for k in range(g.dim):
        am = _moved(f.data, k)
        out = np.empty_like(am)
        h = g.h[k]
        out[1:-1] = (am[2:] - am[:-2]) / (2.0 * h)
        out[0] = (4.0 * (am[1] - am[0]) - (am[2] - am[0])) / (2.0 * h)
        out[-1] = (4.0 * (am[-1] - am[-2]) - (am[-1] - am[-3])) / (2.0 * h)
        comps.append(np.moveaxis(out, 0, k))
    return VectorField(g, np.stack(comps))


def div(v: VectorField) -> ScalarField:
    """Divergence of a vector field extended by odd reflection at walls."""
    g = v.grid
    out = np.zeros(g.shape)
    for k in range(g.dim):
        out += _odd_first_diff(v.data[k], g.h[k], k)
    return ScalarField(g, out)


def lap(v: VectorField) -> VectorField:
    """Componentwise Laplacian of a vector field with odd-reflection ghosts."""
    g = v.grid
    comps = []
    for c in range(g.dim):
        acc = np.zeros(g.shape)
        for k in range(g.dim):
            acc += _odd_second_diff(v.data[c], g.h[k], k)
        comps.append(acc)
    return VectorField(g, np.stack(comps))


# ---------------------------------------------------------------------------
# snapshots

def write_snapshot(path, grid: Grid, fields: dict[str, np.ndarray]) -> None:
    """Write fields to a binary snapshot.

    Format: one JSON header line, then the raw little-endian float64 cell
    values of each listed field in row-major order, concatenated.
    """
    names = list(fields)
    header = {
        "dim": grid.dim,
        "n": list(grid.n),
        "extent": list(grid.extent),
        "fields": names,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("ascii") + b"\n")
        for name in names:
            arr = np.ascontiguousarray(np.asarray(fields[name], dtype=np.float64))
            if arr.shape != grid.shape:
                raise ValueError(f"field {name!r} has shape {arr.shape}, expected {grid.shape}")
            fh.write(arr.astype("<f8").tobytes())


def read_snapshot(path) -> tuple[Grid, dict[str, np.ndarray]]:
    """Read a snapshot written by :func:`write_snapshot`."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("ascii"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"bad snapshot header in {path}: {exc}") from exc
        grid = Grid(tuple(header["n"]), tuple(header["extent"]))
        count = int(np.prod(grid.shape))
        out = {}
        for name in header["fields"]:
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError(f"snapshot {path} truncated in field {name!r}")
            out[name] = np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(grid.shape)
    return grid, out

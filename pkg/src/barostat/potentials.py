"""Catalog of body-force potentials addressable by name from run configs.

Every entry maps a small parameter dictionary to a ScalarField on the run
grid.  In more than one dimension the separable shapes (linear, cosine,
doublewell) are summed over axes, so the 1D definitions are the ones to
read.  The tabulated entry loads a snapshot written by fields.write_snapshot
whose "F" field must match the run grid exactly.

Names: constant, linear, cosine(A, k), doublewell(A), tabulated(path).
"""

import numpy as np

from .fields import Grid, ScalarField, read_snapshot

CATALOG = ("constant", "linear", "cosine", "doublewell", "tabulated")


def _check_params(name: str, spec: dict, allowed: set[str]):
    extra = set(spec) - allowed - {"name"}
    if extra:
        raise ValueError(f"potential '{name}' does not take parameters {sorted(extra)}")


def _axis_coeffs(value, dim: int, what: str):
    if isinstance(value, (int, float)):
        coefs = [float(value)] + [0.0] * (dim - 1)
    elif isinstance(value, (list, tuple)) and len(value) == dim:
        coefs = [float(v) for v in value]
    else:
        raise ValueError(f"{what} must be a number or a list of {dim} numbers")
    return coefs


def build(grid: Grid, spec: dict) -> ScalarField:
    """Construct the potential named in spec["name"] on the given grid."""

    if not isinstance(spec, dict) or "name" not in spec:
        raise ValueError("potential spec must be an object with a 'name' entry")
    name = spec["name"]
    xs = grid.centers()

    if name == "constant":
        _check_params(name, spec, {"value"})
        return ScalarField.full(grid, float(spec.get("value", 0.0)))

    if name == "linear":
        _check_params(name, spec, {"g"})
        coefs = _axis_coeffs(spec.get("g", 1.0), grid.dim, "linear slope 'g'")
        data = np.zeros(grid.shape)
        for a in range(grid.dim):
            data = data + coefs[a] * xs[a]
        return ScalarField(grid, np.broadcast_to(data, grid.shape).copy())

    if name == "cosine":
        _check_params(name, spec, {"A", "k"})
        if "A" not in spec:
            raise ValueError("cosine potential needs an amplitude 'A'")
        amp = float(spec["A"])
        k = spec.get("k", 1)
        if not float(k) == int(k) or int(k) < 1:
            raise ValueError(f"cosine wavenumber 'k' must be a positive integer, got {k!r}")
        k = int(k)
        data = np.zeros(grid.shape)
        for a in range(grid.dim):
            data = data + amp * np.cos(k * np.pi * xs[a] / grid.extent[a])
        return ScalarField(grid, np.broadcast_to(data, grid.shape).copy())

    if name == "doublewell":
        _check_params(name, spec, {"A"})
        if "A" not in spec:
            raise ValueError("doublewell potential needs an amplitude 'A'")
        amp = float(spec["A"])
        data = np.zeros(grid.shape)
        for a in range(grid.dim):
            s = 2.0 * xs[a] / grid.extent[a] - 1.0
            s2 = s * s
            # two symmetric maxima of height A at s = +-1/sqrt(2), zero at
            # the walls and the midpoint
            data = data + 4.0 * amp * (s2 - s2 * s2)
        return ScalarField(grid, np.broadcast_to(data, grid.shape).copy())

    if name == "tabulated":
        _check_params(name, spec, {"path"})
        if "path" not in spec:
            raise ValueError("tabulated potential needs a snapshot 'path'")
        snap_grid, fields = read_snapshot(spec["path"])
        if "F" not in fields:
            raise ValueError(f"snapshot {spec['path']} has no 'F' field")
        if snap_grid.n != grid.n or snap_grid.extent != grid.extent:
            raise ValueError(
                f"tabulated potential grid {snap_grid.n} x {snap_grid.extent} does not "
                f"match the run grid {grid.n} x {grid.extent}"
            )
        return ScalarField(grid, fields["F"])

    raise ValueError(f"unknown potential '{name}'; catalog: {', '.join(CATALOG)}")

"""Command-line front end: JSON experiment configs in, CSV/JSON artifacts out.

Five commands share one flag set:

    barostat <steady|simulate|verify|fit|sweep> --config <path>
             [--out <dir>] [--threads N] [--seed S]

``steady`` solves the hydrostatic balance and writes steady_report.json plus
a density snapshot.  ``simulate`` runs the time-dependent problem and writes
trajectory.csv and run_report.json.  ``verify`` is simulate plus the full
functional workup: Lyapunov columns, sandwich/equivalence checks, and the
decay fit, reported in verify_report.json.  ``fit`` re-fits a trajectory.csv
produced earlier.  ``sweep`` repeats simulate+fit over a parameter grid and
tabulates the rates.

Every run writes manifest.json (config hash, seed, threads, backend,
versions) into the output directory; no artifact carries a timestamp, so a
rerun with the same config, seed, and thread count is byte-identical.

Exit codes: 0 success, 2 config violation (malformed JSON reports the line
and column), 3 numerical failure, 4 refused fit.  Failures also leave an
error.json next to the other artifacts when the output directory is usable.
"""

import argparse
import copy
import hashlib
import json
import os
import platform
import sys

import numpy as np

from . import __version__, potentials
from ._kernels import BACKEND
from .equilibrium import VACUUM_CUTOFF, SteadyState, solve_steady, steady_residual
from .fields import (
    GasParams,
    Grid,
    ScalarField,
    VectorField,
    integrate,
    read_snapshot,
    write_snapshot,
)
from .lyapunov import FitRefused, LyapunovConfig, attach, check_equivalence, constants_for, fit_decay
from .nssolver import CSV_COLUMNS, SimConfig, SolverBlowup, TrajectoryRecord, energy_budget_report, simulate

_COMMANDS = ("steady", "simulate", "verify", "fit", "sweep")


class ConfigError(Exception):
    """A config the schema rejects; ``location`` points at the offender."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(message)
        self.location = location


class NumericalError(RuntimeError):
    """A well-formed config whose run left the solvable domain."""


# ------------------------------------------------------- config plumbing ----

_MISSING = object()


def _as_obj(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"expected an object, got {type(value).__name__}", path)
    return dict(value)


def _pop(obj: dict, key: str, path: str, default=_MISSING):
    if key in obj:
        return obj.pop(key)
    if default is _MISSING:
        raise ConfigError(f"missing required entry '{key}'", path)
    return default


def _no_extras(obj: dict, path: str):
    if obj:
        raise ConfigError(f"unknown entries {sorted(obj)}", path)


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    return value


def _string(value, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"expected a string, got {value!r}", path)
    return value


def _built(factory, path: str):
    """Run a module constructor, turning its ValueError into a ConfigError."""
    try:
        return factory()
    except ValueError as err:
        raise ConfigError(str(err), path) from err


def _resolve_path(p: str, cfg_dir: str) -> str:
    return p if os.path.isabs(p) else os.path.join(cfg_dir, p)


def _load_config(path: str) -> tuple[bytes, dict]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}", "$") from err
    try:
        cfg = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as err:
        raise ConfigError("config file is not UTF-8 text", "$") from err
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"malformed JSON: {err.msg}", f"line {err.lineno} column {err.colno}"
        ) from err
    if not isinstance(cfg, dict):
        raise ConfigError("config top level must be an object", "$")
    return raw, cfg


# ------------------------------------------------------------ sub-parsers ----


def _parse_grid(spec, path: str) -> Grid:
    obj = _as_obj(spec, path)
    n = _pop(obj, "n", path)
    extent = _pop(obj, "extent", path, None)
    _no_extras(obj, path)
    if isinstance(n, int) and not isinstance(n, bool):
        length = 1.0 if extent is None else _number(extent, path + ".extent")
        return _built(lambda: Grid.line(n, length), path)
    if isinstance(n, list) and len(n) == 2:
        nx, ny = (_integer(v, path + ".n") for v in n)
        if extent is None:
            lx = ly = 1.0
        elif isinstance(extent, list) and len(extent) == 2:
            lx, ly = (_number(v, path + ".extent") for v in extent)
        else:
            raise ConfigError("a 2D grid takes 'extent' as a pair of lengths", path + ".extent")
        return _built(lambda: Grid.box(nx, ny, lx, ly), path)
    raise ConfigError("'n' must be an integer or a pair of integers", path + ".n")


def _parse_gas(spec, path: str) -> GasParams:
    obj = _as_obj(spec, path)
    gamma = _number(_pop(obj, "gamma", path), path + ".gamma")
    mu = _number(_pop(obj, "mu", path), path + ".mu")
    lam = _number(_pop(obj, "lambda", path, 0.0), path + ".lambda")
    _no_extras(obj, path)
    return _built(lambda: GasParams(gamma=gamma, mu=mu, lam=lam), path)


def _build_potential(grid: Grid, spec, cfg_dir: str, path: str) -> ScalarField:
    obj = _as_obj(spec, path)
    if obj.get("name") == "tabulated" and isinstance(obj.get("path"), str):
        obj["path"] = _resolve_path(obj["path"], cfg_dir)
    try:
        return potentials.build(grid, obj)
    except ValueError as err:
        raise ConfigError(str(err), path) from err
    except OSError as err:
        raise ConfigError(f"cannot read tabulated potential: {err}", path + ".path") from err


def _build_initial(spec, grid: Grid, gamma: float, F: ScalarField, mass, cfg_dir: str, path: str):
    """Initial (rho0, u0) plus the ripple amplitude when one was used."""

    obj = _as_obj(spec, path)
    kind = _string(_pop(obj, "kind", path), path + ".kind")

    if kind == "steady_ripple":
        if mass is None:
            raise ConfigError("'mass' is required for a steady_ripple initial state", "$.mass")
        amp = _number(_pop(obj, "amplitude", path), path + ".amplitude")
        mode = _pop(obj, "mode", path, 2)
        mode = _integer(mode, path + ".mode")
        if mode < 1:
            raise ConfigError(f"mode must be a positive integer, got {mode}", path + ".mode")
        _no_extras(obj, path)
        steady = _built(lambda: solve_steady(F, gamma, mass), path)
        ripple = np.ones(grid.shape)
        for a, x in enumerate(grid.centers()):
            ripple = ripple * np.sin(mode * np.pi * x / grid.extent[a])
        rho0 = steady.rho_s.data * (1.0 + amp * ripple)
        total = float(np.sum(rho0)) * grid.cell_volume
        if not total > 0.0:
            raise ConfigError("ripple produced a nonpositive density", path + ".amplitude")
        rho0 *= mass / total
        rho_f = _built(lambda: ScalarField(grid, rho0), path)
        return rho_f, VectorField.zeros(grid), amp

    if kind == "uniform":
        if mass is None:
            raise ConfigError("'mass' is required for a uniform initial state", "$.mass")
        _no_extras(obj, path)
        return ScalarField.full(grid, mass / grid.volume), VectorField.zeros(grid), None

    if kind == "tabulated":
        if mass is not None:
            raise ConfigError("'mass' conflicts with a tabulated initial state", "$.mass")
        snap = _string(_pop(obj, "path", path), path + ".path")
        _no_extras(obj, path)
        try:
            sgrid, fields = read_snapshot(_resolve_path(snap, cfg_dir))
        except OSError as err:
            raise ConfigError(f"cannot read initial snapshot: {err}", path + ".path") from err
        if sgrid.n != grid.n or sgrid.extent != grid.extent:
            raise ConfigError("initial snapshot grid does not match the run grid", path + ".path")
        if "rho" not in fields:
            raise ConfigError("initial snapshot has no 'rho' field", path + ".path")
        u = np.zeros((grid.dim,) + grid.shape)
        for c in range(grid.dim):
            key = f"u_{'xy'[c]}"
            if key in fields:
                u[c] = fields[key]
        rho_f = _built(lambda: ScalarField(grid, fields["rho"]), path)
        return rho_f, _built(lambda: VectorField(grid, u), path), None

    raise ConfigError(
        f"unknown initial kind {kind!r}; choose steady_ripple, uniform, or tabulated",
        path + ".kind",
    )


def _parse_time(spec, path: str) -> dict:
    obj = _as_obj(spec, path)
    kw = {
        "t_end": _number(_pop(obj, "t_end", path), path + ".t_end"),
        "record_dt": _number(_pop(obj, "record_dt", path), path + ".record_dt"),
        "cfl": _number(_pop(obj, "cfl", path, 0.9), path + ".cfl"),
        "integrator": _string(_pop(obj, "integrator", path, "heun"), path + ".integrator"),
        "relax_time": _number(_pop(obj, "relax_time", path, 0.0), path + ".relax_time"),
        "vacuum_floor": _number(_pop(obj, "vacuum_floor", path, 1e-10), path + ".vacuum_floor"),
    }
    _no_extras(obj, path)
    return kw


def _parse_lyapunov(spec, path: str, force_attach: bool) -> dict:
    if spec is None:
        return {"attach": force_attach, "delta": None, "theta": None}
    obj = _as_obj(spec, path)
    do_attach = _pop(obj, "attach", path, True)
    if not isinstance(do_attach, bool):
        raise ConfigError("'attach' must be a boolean", path + ".attach")
    delta = _pop(obj, "delta", path, None)
    theta = _pop(obj, "theta", path, None)
    _no_extras(obj, path)
    if delta is not None:
        delta = _number(delta, path + ".delta")
        if delta < 0.0:
            raise ConfigError(f"delta must be nonnegative, got {delta}", path + ".delta")
    if theta is not None:
        theta = _number(theta, path + ".theta")
        if not 0.0 < theta <= 0.5:
            raise ConfigError(f"theta must lie in (0, 1/2], got {theta}", path + ".theta")
    return {"attach": do_attach or force_attach, "delta": delta, "theta": theta}


def _parse_sim(cfg: dict, cfg_dir: str, force_attach: bool = False):
    """Shared config grammar for simulate, verify, and sweep cells."""

    obj = dict(cfg)
    grid = _parse_grid(_pop(obj, "grid", "$"), "$.grid")
    gas = _parse_gas(_pop(obj, "gas", "$"), "$.gas")
    F = _build_potential(grid, _pop(obj, "potential", "$"), cfg_dir, "$.potential")
    mass = _pop(obj, "mass", "$", None)
    if mass is not None:
        mass = _number(mass, "$.mass")
    init_spec = _pop(obj, "initial", "$")
    time_spec = _pop(obj, "time", "$")
    lyap = _parse_lyapunov(_pop(obj, "lyapunov", "$", None), "$.lyapunov", force_attach)
    snap_every = _integer(_pop(obj, "snapshot_every", "$", 0), "$.snapshot_every")
    _no_extras(obj, "$")

    rho0, u0, amplitude = _build_initial(init_spec, grid, gas.gamma, F, mass, cfg_dir, "$.initial")
    tkw = _parse_time(time_spec, "$.time")
    sim = _built(
        lambda: SimConfig(
            gas=gas,
            grid=grid,
            potential=F,
            rho0=rho0,
            u0=u0,
            snapshot_every=snap_every,
            **tkw,
        ),
        "$.time",
    )
    return sim, lyap, amplitude


# ------------------------------------------------------------- reporting ----


def _write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _steady_payload(steady: SteadyState, F: ScalarField, gamma: float) -> dict:
    data = steady.rho_s.data
    return {
        "k0": float(steady.k0),
        "regime": steady.regime.value,
        "m_threshold": float(steady.m_threshold),
        "residual": float(steady_residual(steady, F, gamma)),
        "m": float(steady.m),
        "m_hat": float(steady.m_hat),
        "rho_min": float(data.min()),
        "rho_max": float(data.max()),
        "vacuum_fraction": float(np.mean(data <= VACUUM_CUTOFF)),
    }


def _fit_payload(fit, sandwich_pass, c1_est) -> dict:
    return {
        "t0": fit.t0,
        "t1": fit.t1,
        "rate": fit.rate,
        "r2": fit.r2,
        "prefactor": fit.prefactor,
        "decades": fit.decades,
        "envelope_pass": fit.envelope_pass,
        "rate_v": fit.rate_v,
        "sandwich_pass": sandwich_pass,
        "c1_est": c1_est,
    }


def _lyapunov_payload(att) -> dict:
    d = att.constants.to_dict()
    d["delta"] = att.delta
    d["theta"] = att.theta
    return d


def _attach_lyapunov(traj: TrajectoryRecord, gas: GasParams, lyap: dict, seed: int):
    """Measure constants and fill the V/W columns; numerical domain errors
    (vacuum reference, infeasible delta) surface as exit 3."""

    try:
        consts = constants_for(traj.steady, gas, seed=seed)
        att = attach(traj, delta=lyap["delta"], theta=lyap["theta"], constants=consts)
    except ValueError as err:
        raise NumericalError(str(err)) from err
    return att


def _write_states(traj: TrajectoryRecord, out: str, every: int):
    if every <= 0:
        return
    grid = traj.config.grid
    sdir = os.path.join(out, "snapshots")
    os.makedirs(sdir, exist_ok=True)
    for k in range(0, len(traj.states), every):
        s = traj.states[k]
        parts = {"rho": s.rho.data}
        u = s.mom.data / s.rho.data
        for c in range(grid.dim):
            parts[f"u_{'xy'[c]}"] = u[c]
        write_snapshot(os.path.join(sdir, f"state_{k:05d}.bin"), grid, parts)


def _csv_sandwich(cols: dict) -> tuple[bool | None, float | None]:
    """Sandwich and V/W bound straight from trajectory columns (no states)."""

    e, v, w = cols["E_rel"], cols["V_delta"], cols["W_delta"]
    if not np.any(v != 0.0):
        return None, None
    live = e > 0.0
    ok = bool(np.all(v[live] >= 0.25 * e[live]) and np.all(v[live] <= 2.0 * e[live]))
    pos = w > 0.0
    c1 = float(np.max(v[pos] / w[pos])) if np.any(pos) else None
    return ok, c1


# -------------------------------------------------------------- commands ----


def _cmd_steady(cfg: dict, cfg_dir: str, out: str, seed: int):
    obj = dict(cfg)
    grid = _parse_grid(_pop(obj, "grid", "$"), "$.grid")
    gamma = _number(_pop(obj, "gamma", "$"), "$.gamma")
    F = _build_potential(grid, _pop(obj, "potential", "$"), cfg_dir, "$.potential")
    mass = _number(_pop(obj, "mass", "$"), "$.mass")
    _no_extras(obj, "$")

    steady = _built(lambda: solve_steady(F, gamma, mass), "$")
    _write_json(os.path.join(out, "steady_report.json"), _steady_payload(steady, F, gamma))
    write_snapshot(os.path.join(out, "steady_state.bin"), grid, {"rho_s": steady.rho_s.data})


def _run_report(traj: TrajectoryRecord, att) -> dict:
    budget = energy_budget_report(traj)
    cols = traj.columns
    return {
        "backend": traj.backend,
        "n_samples": traj.n_samples,
        "steps": int(traj.extras["steps"][-1]),
        "t_end": float(cols["t"][-1]),
        "mass_drift": budget["mass_drift"],
        "E_rel_budget_excess": budget["E_rel_budget_excess"],
        "E_paper_budget_excess": budget["E_paper_budget_excess"],
        "floored_mass": budget["floored_mass"],
        "E_rel_initial": float(cols["E_rel"][0]),
        "E_rel_final": float(cols["E_rel"][-1]),
        "steady": _steady_payload(traj.steady, traj.config.potential, traj.config.gas.gamma),
        "lyapunov": None if att is None else _lyapunov_payload(att),
    }


def _cmd_simulate(cfg: dict, cfg_dir: str, out: str, seed: int):
    sim, lyap, _ = _parse_sim(cfg, cfg_dir)
    traj = simulate(sim)
    att = _attach_lyapunov(traj, sim.gas, lyap, seed) if lyap["attach"] else None
    traj.to_csv(os.path.join(out, "trajectory.csv"))
    _write_states(traj, out, sim.snapshot_every)
    _write_json(os.path.join(out, "run_report.json"), _run_report(traj, att))


def _cmd_verify(cfg: dict, cfg_dir: str, out: str, seed: int):
    sim, lyap, _ = _parse_sim(cfg, cfg_dir, force_attach=True)
    traj = simulate(sim)
    att = _attach_lyapunov(traj, sim.gas, lyap, seed)
    traj.to_csv(os.path.join(out, "trajectory.csv"))
    _write_states(traj, out, sim.snapshot_every)

    lc = LyapunovConfig(delta=att.delta, theta=att.theta, constants=att.constants)
    eq = check_equivalence(traj, lc)
    report = _run_report(traj, att)
    report["equivalence"] = {
        "sandwich_pass": eq.sandwich_pass,
        "lower_margin": eq.lower_margin,
        "upper_margin": eq.upper_margin,
        "c1_est": eq.c1_est,
        "x27_pass": eq.x27_pass,
        "poincare_pass": eq.poincare_pass,
        "poincare_worst": eq.poincare_worst,
    }
    # a refused fit still leaves the trajectory and a partial report behind
    report["fit"] = None
    report["pass"] = False
    try:
        fit = fit_decay(traj)
    except FitRefused:
        _write_json(os.path.join(out, "verify_report.json"), report)
        raise
    report["fit"] = _fit_payload(fit, eq.sandwich_pass, eq.c1_est)
    report["pass"] = bool(
        eq.sandwich_pass
        and eq.x27_pass
        and eq.poincare_pass
        and fit.envelope_pass
        and fit.rate > 0.0
    )
    _write_json(os.path.join(out, "verify_report.json"), report)


def _read_trajectory_csv(path: str) -> dict[str, np.ndarray]:
    try:
        with open(path) as fh:
            header = fh.readline().strip()
            if header != ",".join(CSV_COLUMNS):
                raise ConfigError(
                    f"trajectory header {header!r} does not match the contract columns",
                    "$.trajectory",
                )
            try:
                data = np.loadtxt(fh, delimiter=",", ndmin=2)
            except ValueError as err:
                raise ConfigError(f"trajectory rows are not numeric: {err}", "$.trajectory") from err
    except OSError as err:
        raise ConfigError(f"cannot read trajectory: {err}", "$.trajectory") from err
    if data.size == 0 or data.shape[1] != len(CSV_COLUMNS):
        raise ConfigError("trajectory has no complete sample rows", "$.trajectory")
    return {name: data[:, k].copy() for k, name in enumerate(CSV_COLUMNS)}


def _cmd_fit(cfg: dict, cfg_dir: str, out: str, seed: int):
    obj = dict(cfg)
    traj_path = _string(_pop(obj, "trajectory", "$"), "$.trajectory")
    _no_extras(obj, "$")
    cols = _read_trajectory_csv(_resolve_path(traj_path, cfg_dir))

    traj = TrajectoryRecord(
        config=None,
        steady=None,
        relaxed_rho=np.array([]),
        relaxed_u=np.array([]),
        columns=cols,
        extras={},
        states=[],
    )
    sandwich, c1 = _csv_sandwich(cols)
    if sandwich is not None:
        # the file carries Lyapunov columns; nan marks the delta as unknown
        # but present so the V series is fitted alongside E
        traj.lyapunov_delta = float("nan")
    fit = fit_decay(traj)
    payload = _fit_payload(fit, sandwich, c1)
    payload["n_samples"] = int(cols["t"].size)
    _write_json(os.path.join(out, "fit_report.json"), payload)


def _sweep_axis(obj: dict, key: str, path: str, integral: bool):
    if key not in obj:
        return [None]
    vals = obj.pop(key)
    if not isinstance(vals, list) or not vals:
        raise ConfigError(f"'{key}' must be a nonempty list", path)
    conv = _integer if integral else _number
    return [conv(v, f"{path}.{key}") for v in vals]


def _cmd_sweep(cfg: dict, cfg_dir: str, out: str, seed: int):
    obj = dict(cfg)
    base = _as_obj(_pop(obj, "base", "$"), "$.base")
    axes = _as_obj(_pop(obj, "sweep", "$"), "$.sweep")
    _no_extras(obj, "$")
    gammas = _sweep_axis(axes, "gamma", "$.sweep", integral=False)
    amps = _sweep_axis(axes, "amplitude", "$.sweep", integral=False)
    ns = _sweep_axis(axes, "n", "$.sweep", integral=True)
    _no_extras(axes, "$.sweep")

    def sub_obj(cell: dict, key: str) -> dict:
        block = cell.setdefault(key, {})
        if not isinstance(block, dict):
            raise ConfigError(f"'{key}' must be an object to sweep over", f"$.base.{key}")
        return block

    rows = []
    for g in gammas:
        for a in amps:
            for n in ns:
                cell = copy.deepcopy(base)
                if g is not None:
                    sub_obj(cell, "gas")["gamma"] = g
                if a is not None:
                    sub_obj(cell, "initial")["amplitude"] = a
                if n is not None:
                    grid_spec = sub_obj(cell, "grid")
                    if isinstance(grid_spec.get("n"), list):
                        raise ConfigError("a sweep over 'n' needs a 1D base grid", "$.sweep.n")
                    grid_spec["n"] = n
                sim, _, amp_used = _parse_sim(cell, cfg_dir)
                fixed = [
                    f"{sim.gas.gamma:.17g}",
                    "" if amp_used is None else f"{amp_used:.17g}",
                    "x".join(str(v) for v in sim.grid.n),
                ]
                try:
                    fit = fit_decay(simulate(sim))
                except SolverBlowup:
                    rows.append(fixed + ["", "", "", "", "failed"])
                    continue
                except FitRefused:
                    rows.append(fixed + ["", "", "", "", "refused"])
                    continue
                rows.append(
                    fixed
                    + [
                        f"{fit.rate:.17g}",
                        f"{fit.r2:.17g}",
                        f"{fit.t0:.17g}",
                        f"{fit.decades:.17g}",
                        "ok",
                    ]
                )

    lines = ["gamma,amplitude,n,rate,r2,t0,decades,status"]
    lines += [",".join(r) for r in rows]
    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ------------------------------------------------------------ entry point ----


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="barostat",
        description="equilibria, decay runs, and verification for barotropic viscous flow",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    briefs = {
        "steady": "solve the hydrostatic balance for a potential and mass",
        "simulate": "integrate the flow and record the energy series",
        "verify": "simulate plus Lyapunov sandwich checks and a decay fit",
        "fit": "re-fit an exponential rate to an existing trajectory.csv",
        "sweep": "tabulate fitted rates over a parameter grid",
    }
    for name in _COMMANDS:
        p = sub.add_parser(name, help=briefs[name])
        p.add_argument("--config", required=True, help="JSON experiment definition")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--threads", type=int, default=None, help="kernel thread budget")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized scans")
    return parser.parse_args(argv)


def _resolve_threads(args) -> int | None:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("BAROSTAT_THREADS", "").strip()
        if not env:
            return None
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(
                f"BAROSTAT_THREADS must be an integer, got {env!r}", "env:BAROSTAT_THREADS"
            ) from None
    if n < 1:
        raise ConfigError(f"thread count must be at least 1, got {n}", "--threads")
    return n


def _apply_threads(n: int | None):
    # the kernels run serially inside one process; the budget is validated,
    # recorded in the manifest, and re-exported for downstream tooling
    if n is not None:
        os.environ["BAROSTAT_THREADS"] = str(n)


def _resolve_seed(args, cfg: dict) -> int:
    seed = args.seed if args.seed is not None else cfg.pop("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}", "$.seed")
    return seed


def _numba_version() -> str | None:
    try:
        import numba

        return numba.__version__
    except Exception:
        return None


def _write_manifest(out: str, command: str, raw: bytes, seed: int, threads: int | None):
    _write_json(
        os.path.join(out, "manifest.json"),
        {
            "command": command,
            "config_hash": hashlib.sha256(raw).hexdigest(),
            "seed": seed,
            "threads": threads,
            "backend": BACKEND,
            "versions": {
                "package": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "numba": _numba_version(),
            },
        },
    )


def _fail(out: str, code: int, kind: str, message: str, location: str | None = None):
    try:
        os.makedirs(out, exist_ok=True)
        _write_json(
            os.path.join(out, "error.json"),
            {"error": kind, "exit_code": code, "message": message, "location": location},
        )
    except OSError:
        pass
    where = f" at {location}" if location else ""
    print(f"barostat: {kind} error{where}: {message}", file=sys.stderr)


def schema_path(name: str) -> str:
    """Filesystem path of a shipped report schema (name without extension)."""
    return os.path.join(os.path.dirname(__file__), "schemas", f"{name}.schema.json")


_DISPATCH = {
    "steady": _cmd_steady,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "fit": _cmd_fit,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = _parse_args(argv)
    out = args.out
    try:
        threads = _resolve_threads(args)
        raw, cfg = _load_config(args.config)
        seed = _resolve_seed(args, cfg)
        _apply_threads(threads)
        os.makedirs(out, exist_ok=True)
        _write_manifest(out, args.command, raw, seed, threads)
        cfg_dir = os.path.dirname(os.path.abspath(args.config))
        _DISPATCH[args.command](cfg, cfg_dir, out, seed)
        return 0
    except ConfigError as err:
        _fail(out, 2, "config", str(err), err.location)
        return 2
    except FitRefused as err:
        _fail(out, 4, "refused-fit", str(err))
        return 4
    except (SolverBlowup, NumericalError) as err:
        _fail(out, 3, "numerical", str(err))
        return 3


if __name__ == "__main__":
    sys.exit(main())

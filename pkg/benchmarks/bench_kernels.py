"""Wall-clock comparison of the compiled and pure-numpy time-stepping kernels.

Runs the cosine-forced decay problem with both kernel sets on identical
inputs, reports steps per second and the speedup, and cross-checks that the
final states agree.  The two backends order their reductions differently, so
agreement is to rounding accumulation, not bitwise.

    python3 benchmarks/bench_kernels.py [--n 512] [--t 0.05] [--n2 96] [--t2 0.004]
"""

import argparse
import sys
import time

import numpy as np

from barostat import _kernels_np
from barostat.equilibrium import solve_steady
from barostat.fields import Grid, ScalarField, grad

try:
    from barostat import _kernels_nb
except ImportError as err:
    print(f"numba backend unavailable ({err}); nothing to compare", file=sys.stderr)
    sys.exit(1)

GAMMA, MU, LAM = 2.0, 0.5, 0.0
CFL, FLOOR = 0.9, 1e-10
MAX_STEPS = 1 << 60


def problem_1d(n):
    grid = Grid.line(n)
    F = ScalarField.from_function(grid, lambda x: 0.5 * np.cos(np.pi * x))
    st = solve_steady(F, GAMMA, 1.0)
    x = grid.axis_centers(0)
    rho = st.rho_s.data * (1.0 + 0.05 * np.sin(2.0 * np.pi * x))
    mom = np.zeros_like(rho)
    return rho, mom, grad(F).data[0], np.zeros_like(rho), grid.h[0]


def problem_2d(n):
    grid = Grid.box(n, n)
    F = ScalarField.from_function(
        grid, lambda x, y: 0.25 * (np.cos(np.pi * x) + np.cos(np.pi * y))
    )
    st = solve_steady(F, GAMMA, 1.0)
    xs, ys = grid.centers()
    rho = st.rho_s.data * (1.0 + 0.05 * np.sin(np.pi * xs) * np.sin(np.pi * ys))
    mx = np.zeros_like(rho)
    gF = grad(F).data
    return rho, mx, np.zeros_like(rho), gF[0], gF[1], grid.h


def drive_1d(mod, rho, mom, gF, uref, h, t_target):
    r, m = rho.copy(), mom.copy()
    t0 = time.perf_counter()
    t, steps, _, _, _, flag = mod.advance_1d(
        r, m, gF, uref, GAMMA, MU, LAM, h, CFL, FLOOR, 0.0, t_target, True, MAX_STEPS
    )
    wall = time.perf_counter() - t0
    assert flag == 0, f"advance_1d failed with flag {flag}"
    return wall, steps, r, m


def drive_2d(mod, rho, mx, my, gFx, gFy, h, t_target):
    r, px, py = rho.copy(), mx.copy(), my.copy()
    zero = np.zeros_like(rho)
    t0 = time.perf_counter()
    t, steps, _, _, _, flag = mod.advance_2d(
        r, px, py, gFx, gFy, zero, zero, GAMMA, MU, LAM, h[0], h[1], CFL, FLOOR,
        0.0, t_target, True, MAX_STEPS,
    )
    wall = time.perf_counter() - t0
    assert flag == 0, f"advance_2d failed with flag {flag}"
    return wall, steps, r, px


def rel_gap(a, b):
    scale = max(float(np.abs(a).max()), 1e-300)
    return float(np.abs(a - b).max()) / scale


def report(label, wall_np, wall_nb, steps, gap_rho, gap_mom, tol=1e-11):
    print(f"{label}: {steps} steps")
    print(f"  numpy  {wall_np:8.3f} s   {steps / wall_np:12.0f} steps/s")
    print(f"  numba  {wall_nb:8.3f} s   {steps / wall_nb:12.0f} steps/s")
    print(f"  speedup {wall_np / wall_nb:6.1f}x   state gap rho {gap_rho:.2e}  mom {gap_mom:.2e}")
    if max(gap_rho, gap_mom) > tol:
        print(f"  DISAGREEMENT above {tol:g}", file=sys.stderr)
        return False
    return True


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=512, help="1D cells")
    ap.add_argument("--t", type=float, default=0.05, help="1D simulated time")
    ap.add_argument("--n2", type=int, default=96, help="2D cells per axis")
    ap.add_argument("--t2", type=float, default=0.004, help="2D simulated time")
    args = ap.parse_args()

    rho, mom, gF, uref, h = problem_1d(args.n)
    # compile outside the timed region
    drive_1d(_kernels_nb, rho, mom, gF, uref, h, 10.0 * h * h)

    w_np, s_np, r_np, m_np = drive_1d(_kernels_np, rho, mom, gF, uref, h, args.t)
    w_nb, s_nb, r_nb, m_nb = drive_1d(_kernels_nb, rho, mom, gF, uref, h, args.t)
    assert s_np == s_nb, f"step counts diverged: {s_np} vs {s_nb}"
    ok = report(f"1D n={args.n} t={args.t}", w_np, w_nb, s_np,
                rel_gap(r_np, r_nb), rel_gap(m_np, m_nb))

    rho2, mx, my, gFx, gFy, h2 = problem_2d(args.n2)
    drive_2d(_kernels_nb, rho2, mx, my, gFx, gFy, h2, 10.0 * h2[0] * h2[0])

    w_np, s_np, r_np, m_np = drive_2d(_kernels_np, rho2, mx, my, gFx, gFy, h2, args.t2)
    w_nb, s_nb, r_nb, m_nb = drive_2d(_kernels_nb, rho2, mx, my, gFx, gFy, h2, args.t2)
    assert s_np == s_nb, f"step counts diverged: {s_np} vs {s_nb}"
    ok &= report(f"2D n={args.n2}x{args.n2} t={args.t2}", w_np, w_nb, s_np,
                 rel_gap(r_np, r_nb), rel_gap(m_np, m_nb))

    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()

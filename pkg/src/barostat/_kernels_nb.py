"""Compiled time-stepping kernels.

Loop-level twins of _kernels_np with identical arithmetic per cell; only
reduction order (accumulator sums) differs, which the cross-backend tests
bound.  Compiled lazily with cache=True and no fastmath so the float
semantics stay IEEE-strict.  The equation of state is evaluated once per
stage into scratch arrays, with the same gamma = 2 / gamma = 3 fast paths
as the numpy backend, so both backends branch identically.
"""

import math

import numpy as np
from numba import njit

_LAND = 1e-14


# ---------------------------------------------------------------- 1D ----


@njit(cache=True)
def _eos_1d(rho, mom, gamma, u, p, sp):
    n = rho.size
    if gamma == 2.0:
        for i in range(n):
            u[i] = mom[i] / rho[i]
            p[i] = rho[i] * rho[i]
            sp[i] = abs(u[i]) + math.sqrt(2.0 * rho[i])
    elif gamma == 3.0:
        for i in range(n):
            u[i] = mom[i] / rho[i]
            p[i] = rho[i] * rho[i] * rho[i]
            sp[i] = abs(u[i]) + math.sqrt(3.0 * (rho[i] * rho[i]))
    else:
        for i in range(n):
            u[i] = mom[i] / rho[i]
            p[i] = rho[i] ** gamma
            sp[i] = abs(u[i]) + math.sqrt(gamma * rho[i] ** (gamma - 1.0))


@njit(cache=True)
def _rhs_1d(rho, mom, u, p, sp, gradF, nu, h, drho, dmom):
    n = rho.size
    fm_p = 0.0
    fq_p = mom[0] * u[0] + p[0] - sp[0] * mom[0]
    fv_p = nu * 2.0 * u[0] / h
    for i in range(n):
        if i < n - 1:
            a = sp[i] if sp[i] > sp[i + 1] else sp[i + 1]
            fm = 0.5 * (mom[i] + mom[i + 1]) - 0.5 * a * (rho[i + 1] - rho[i])
            fq = 0.5 * (mom[i] * u[i] + p[i] + mom[i + 1] * u[i + 1] + p[i + 1]) - 0.5 * a * (
                mom[i + 1] - mom[i]
            )
            fv = nu * (u[i + 1] - u[i]) / h
        else:
            fm = 0.0
            fq = mom[n - 1] * u[n - 1] + p[n - 1] + sp[n - 1] * mom[n - 1]
            fv = -nu * 2.0 * u[n - 1] / h
        drho[i] = -(fm - fm_p) / h
        dmom[i] = -(fq - fq_p) / h + (fv - fv_p) / h + rho[i] * gradF[i]
        fm_p = fm
        fq_p = fq
        fv_p = fv


@njit(cache=True)
def _diss_rates_1d(u, uref, nu, h):
    n = u.size
    d0 = u[0] - uref[0]
    rate_rel = 2.0 * d0 * d0 / h
    rate_ref0 = 2.0 * u[0] * u[0] / h
    acc_rel = 0.0
    acc_ref0 = 0.0
    for i in range(n - 1):
        dd = (u[i + 1] - uref[i + 1]) - (u[i] - uref[i])
        acc_rel += dd * dd
        du = u[i + 1] - u[i]
        acc_ref0 += du * du
    dn = u[n - 1] - uref[n - 1]
    rate_rel += acc_rel / h + 2.0 * dn * dn / h
    rate_ref0 += acc_ref0 / h + 2.0 * u[n - 1] * u[n - 1] / h
    return nu * rate_rel, nu * rate_ref0


@njit(cache=True)
def advance_1d(rho, mom, gradF, uref, gamma, mu, lam, h, cfl, floor, t, t_target, heun, max_steps):
    nu = 2.0 * mu + lam
    n = rho.size
    steps = 0
    floored = 0.0
    diss_rel = 0.0
    diss_ref0 = 0.0
    tg = abs(t_target) if abs(t_target) > 1.0 else 1.0
    guard = _LAND * tg

    u = np.empty(n)
    p = np.empty(n)
    sp = np.empty(n)
    u1 = np.empty(n)
    p1 = np.empty(n)
    sp1 = np.empty(n)
    dr0 = np.empty(n)
    dm0 = np.empty(n)
    dr1 = np.empty(n)
    dm1 = np.empty(n)
    rho1 = np.empty(n)
    mom1 = np.empty(n)

    while t < t_target - guard and steps < max_steps:
        _eos_1d(rho, mom, gamma, u, p, sp)
        spmax = sp[0]
        rmin = rho[0]
        for i in range(1, n):
            if sp[i] > spmax:
                spmax = sp[i]
            if rho[i] < rmin:
                rmin = rho[i]
        dt = h / spmax
        if nu > 0.0:
            dtv = h * h * rmin / (2.0 * nu)
            if dtv < dt:
                dt = dtv
        dt *= cfl
        if dt < 1e-15 * tg:
            return t, steps, floored, diss_rel, diss_ref0, 2
        if dt > t_target - t:
            dt = t_target - t

        _rhs_1d(rho, mom, u, p, sp, gradF, nu, h, dr0, dm0)
        ra, rb = _diss_rates_1d(u, uref, nu, h)
        if heun:
            for i in range(n):
                r = rho[i] + dt * dr0[i]
                rho1[i] = r if r > floor else floor
                mom1[i] = mom[i] + dt * dm0[i]
            _eos_1d(rho1, mom1, gamma, u1, p1, sp1)
            _rhs_1d(rho1, mom1, u1, p1, sp1, gradF, nu, h, dr1, dm1)
            ra1, rb1 = _diss_rates_1d(u1, uref, nu, h)
            for i in range(n):
                rho[i] = rho[i] + 0.5 * dt * (dr0[i] + dr1[i])
                mom[i] = mom[i] + 0.5 * dt * (dm0[i] + dm1[i])
            diss_rel += 0.5 * dt * (ra + ra1)
            diss_ref0 += 0.5 * dt * (rb + rb1)
        else:
            for i in range(n):
                rho[i] = rho[i] + dt * dr0[i]
                mom[i] = mom[i] + dt * dm0[i]
            diss_rel += dt * ra
            diss_ref0 += dt * rb

        ok = True
        for i in range(n):
            if rho[i] < floor:
                floored += (floor - rho[i]) * h
                rho[i] = floor
            if not (math.isfinite(rho[i]) and math.isfinite(mom[i])):
                ok = False
        t += dt
        steps += 1
        if not ok:
            return t, steps, floored, diss_rel, diss_ref0, 1

    return t, steps, floored, diss_rel, diss_ref0, 0


# ---------------------------------------------------------------- 2D ----


@njit(cache=True)
def _eos_2d(rho, mx, my, gamma, ux, uy, p, c):
    nx, ny = rho.shape
    if gamma == 2.0:
        for i in range(nx):
            for j in range(ny):
                ux[i, j] = mx[i, j] / rho[i, j]
                uy[i, j] = my[i, j] / rho[i, j]
                p[i, j] = rho[i, j] * rho[i, j]
                c[i, j] = math.sqrt(2.0 * rho[i, j])
    elif gamma == 3.0:
        for i in range(nx):
            for j in range(ny):
                ux[i, j] = mx[i, j] / rho[i, j]
                uy[i, j] = my[i, j] / rho[i, j]
                p[i, j] = rho[i, j] * rho[i, j] * rho[i, j]
                c[i, j] = math.sqrt(3.0 * (rho[i, j] * rho[i, j]))
    else:
        for i in range(nx):
            for j in range(ny):
                ux[i, j] = mx[i, j] / rho[i, j]
                uy[i, j] = my[i, j] / rho[i, j]
                p[i, j] = rho[i, j] ** gamma
                c[i, j] = math.sqrt(gamma * rho[i, j] ** (gamma - 1.0))


@njit(cache=True)
def _div_centered(ux, uy, hx, hy, out):
    nx, ny = ux.shape
    for i in range(nx):
        for j in range(ny):
            if i == 0:
                sx = (ux[1, j] + ux[0, j]) / (2.0 * hx)
            elif i == nx - 1:
                sx = (-ux[nx - 1, j] - ux[nx - 2, j]) / (2.0 * hx)
            else:
                sx = (ux[i + 1, j] - ux[i - 1, j]) / (2.0 * hx)
            if j == 0:
                sy = (uy[i, 1] + uy[i, 0]) / (2.0 * hy)
            elif j == ny - 1:
                sy = (-uy[i, ny - 1] - uy[i, ny - 2]) / (2.0 * hy)
            else:
                sy = (uy[i, j + 1] - uy[i, j - 1]) / (2.0 * hy)
            out[i, j] = sx + sy


@njit(cache=True)
def _rhs_2d(rho, mx, my, ux, uy, p, c, gFx, gFy, mu, lam, hx, hy, s, drho, dmx, dmy):
    nx, ny = rho.shape
    bulk = mu + lam
    _div_centered(ux, uy, hx, hy, s)

    for i in range(nx):
        for j in range(ny):
            drho[i, j] = 0.0
            dmx[i, j] = 0.0
            dmy[i, j] = 0.0

    # x sweep
    for j in range(ny):
        u0 = ux[0, j]
        sp0 = abs(u0) + c[0, j]
        fm_p = 0.0
        fqx_p = mx[0, j] * u0 + p[0, j] - sp0 * mx[0, j]
        fqy_p = my[0, j] * u0 - sp0 * my[0, j]
        fvx_p = mu * 2.0 * u0 / hx + bulk * s[0, j]
        fvy_p = mu * 2.0 * uy[0, j] / hx
        for i in range(nx):
            if i < nx - 1:
                ul = ux[i, j]
                ur = ux[i + 1, j]
                al = abs(ul) + c[i, j]
                arr = abs(ur) + c[i + 1, j]
                a = al if al > arr else arr
                fm = 0.5 * (mx[i, j] + mx[i + 1, j]) - 0.5 * a * (rho[i + 1, j] - rho[i, j])
                fqx = 0.5 * (mx[i, j] * ul + p[i, j] + mx[i + 1, j] * ur + p[i + 1, j]) - 0.5 * a * (
                    mx[i + 1, j] - mx[i, j]
                )
                fqy = 0.5 * (my[i, j] * ul + my[i + 1, j] * ur) - 0.5 * a * (
                    my[i + 1, j] - my[i, j]
                )
                fvx = mu * (ur - ul) / hx + bulk * 0.5 * (s[i, j] + s[i + 1, j])
                fvy = mu * (uy[i + 1, j] - uy[i, j]) / hx
            else:
                un = ux[nx - 1, j]
                spn = abs(un) + c[nx - 1, j]
                fm = 0.0
                fqx = mx[nx - 1, j] * un + p[nx - 1, j] + spn * mx[nx - 1, j]
                fqy = my[nx - 1, j] * un + spn * my[nx - 1, j]
                fvx = -mu * 2.0 * un / hx + bulk * s[nx - 1, j]
                fvy = -mu * 2.0 * uy[nx - 1, j] / hx
            drho[i, j] += -(fm - fm_p) / hx
            dmx[i, j] += -(fqx - fqx_p) / hx + (fvx - fvx_p) / hx
            dmy[i, j] += -(fqy - fqy_p) / hx + (fvy - fvy_p) / hx
            fm_p = fm
            fqx_p = fqx
            fqy_p = fqy
            fvx_p = fvx
            fvy_p = fvy

    # y sweep
    for i in range(nx):
        v0 = uy[i, 0]
        sp0 = abs(v0) + c[i, 0]
        fm_p = 0.0
        fqx_p = mx[i, 0] * v0 - sp0 * mx[i, 0]
        fqy_p = my[i, 0] * v0 + p[i, 0] - sp0 * my[i, 0]
        fvx_p = mu * 2.0 * ux[i, 0] / hy
        fvy_p = mu * 2.0 * v0 / hy + bulk * s[i, 0]
        for j in range(ny):
            if j < ny - 1:
                vl = uy[i, j]
                vr = uy[i, j + 1]
                al = abs(vl) + c[i, j]
                arr = abs(vr) + c[i, j + 1]
                a = al if al > arr else arr
                fm = 0.5 * (my[i, j] + my[i, j + 1]) - 0.5 * a * (rho[i, j + 1] - rho[i, j])
                fqx = 0.5 * (mx[i, j] * vl + mx[i, j + 1] * vr) - 0.5 * a * (
                    mx[i, j + 1] - mx[i, j]
                )
                fqy = 0.5 * (my[i, j] * vl + p[i, j] + my[i, j + 1] * vr + p[i, j + 1]) - 0.5 * a * (
                    my[i, j + 1] - my[i, j]
                )
                fvx = mu * (ux[i, j + 1] - ux[i, j]) / hy
                fvy = mu * (vr - vl) / hy + bulk * 0.5 * (s[i, j] + s[i, j + 1])
            else:
                vn = uy[i, ny - 1]
                spn = abs(vn) + c[i, ny - 1]
                fm = 0.0
                fqx = mx[i, ny - 1] * vn + spn * mx[i, ny - 1]
                fqy = my[i, ny - 1] * vn + p[i, ny - 1] + spn * my[i, ny - 1]
                fvx = -mu * 2.0 * ux[i, ny - 1] / hy
                fvy = -mu * 2.0 * vn / hy + bulk * s[i, ny - 1]
            drho[i, j] += -(fm - fm_p) / hy
            dmx[i, j] += -(fqx - fqx_p) / hy + (fvx - fvx_p) / hy
            dmy[i, j] += -(fqy - fqy_p) / hy + (fvy - fvy_p) / hy
            fm_p = fm
            fqx_p = fqx
            fqy_p = fqy
            fvx_p = fvx
            fvy_p = fvy

    for i in range(nx):
        for j in range(ny):
            dmx[i, j] += rho[i, j] * gFx[i, j]
            dmy[i, j] += rho[i, j] * gFy[i, j]


@njit(cache=True)
def _diss_rate_2d(ux, uy, urefx, urefy, mu, lam, hx, hy, work):
    nx, ny = ux.shape
    dx = ux - urefx
    dy = uy - urefy
    grad_sq = 0.0
    for j in range(ny):
        acc = 2.0 * dx[0, j] * dx[0, j] / hx + 2.0 * dx[nx - 1, j] * dx[nx - 1, j] / hx
        accy = 2.0 * dy[0, j] * dy[0, j] / hx + 2.0 * dy[nx - 1, j] * dy[nx - 1, j] / hx
        for i in range(nx - 1):
            acc += (dx[i + 1, j] - dx[i, j]) ** 2 / hx
            accy += (dy[i + 1, j] - dy[i, j]) ** 2 / hx
        grad_sq += (acc + accy) * hy
    for i in range(nx):
        acc = 2.0 * dx[i, 0] * dx[i, 0] / hy + 2.0 * dx[i, ny - 1] * dx[i, ny - 1] / hy
        accy = 2.0 * dy[i, 0] * dy[i, 0] / hy + 2.0 * dy[i, ny - 1] * dy[i, ny - 1] / hy
        for j in range(ny - 1):
            acc += (dx[i, j + 1] - dx[i, j]) ** 2 / hy
            accy += (dy[i, j + 1] - dy[i, j]) ** 2 / hy
        grad_sq += (acc + accy) * hx
    _div_centered(dx, dy, hx, hy, work)
    ssum = 0.0
    for i in range(nx):
        for j in range(ny):
            ssum += work[i, j] * work[i, j]
    return mu * grad_sq + (mu + lam) * ssum * hx * hy


@njit(cache=True)
def advance_2d(
    rho, mx, my, gFx, gFy, urefx, urefy, gamma, mu, lam, hx, hy, cfl, floor, t, t_target, heun, max_steps
):
    nu = 2.0 * mu + lam
    hmin = hx if hx < hy else hy
    nx, ny = rho.shape
    steps = 0
    floored = 0.0
    diss_rel = 0.0
    diss_ref0 = 0.0
    tg = abs(t_target) if abs(t_target) > 1.0 else 1.0
    guard = _LAND * tg

    ux = np.empty((nx, ny))
    uy = np.empty((nx, ny))
    p = np.empty((nx, ny))
    c = np.empty((nx, ny))
    ux1 = np.empty((nx, ny))
    uy1 = np.empty((nx, ny))
    p1 = np.empty((nx, ny))
    c1 = np.empty((nx, ny))
    s = np.empty((nx, ny))
    work = np.empty((nx, ny))
    zx = np.zeros((nx, ny))
    dr0 = np.empty((nx, ny))
    dmx0 = np.empty((nx, ny))
    dmy0 = np.empty((nx, ny))
    dr1 = np.empty((nx, ny))
    dmx1 = np.empty((nx, ny))
    dmy1 = np.empty((nx, ny))
    rho1 = np.empty((nx, ny))
    mx1 = np.empty((nx, ny))
    my1 = np.empty((nx, ny))

    while t < t_target - guard and steps < max_steps:
        _eos_2d(rho, mx, my, gamma, ux, uy, p, c)
        spx_max = 0.0
        spy_max = 0.0
        rmin = rho[0, 0]
        for i in range(nx):
            for j in range(ny):
                sx = abs(ux[i, j]) + c[i, j]
                sy = abs(uy[i, j]) + c[i, j]
                if sx > spx_max:
                    spx_max = sx
                if sy > spy_max:
                    spy_max = sy
                if rho[i, j] < rmin:
                    rmin = rho[i, j]
        dt = hx / spx_max
        dty = hy / spy_max
        if dty < dt:
            dt = dty
        if nu > 0.0:
            dtv = hmin * hmin * rmin / (4.0 * nu)
            if dtv < dt:
                dt = dtv
        dt *= cfl
        if dt < 1e-15 * tg:
            return t, steps, floored, diss_rel, diss_ref0, 2
        if dt > t_target - t:
            dt = t_target - t

        _rhs_2d(rho, mx, my, ux, uy, p, c, gFx, gFy, mu, lam, hx, hy, s, dr0, dmx0, dmy0)
        ra = _diss_rate_2d(ux, uy, urefx, urefy, mu, lam, hx, hy, work)
        rb = _diss_rate_2d(ux, uy, zx, zx, mu, lam, hx, hy, work)
        if heun:
            for i in range(nx):
                for j in range(ny):
                    r = rho[i, j] + dt * dr0[i, j]
                    rho1[i, j] = r if r > floor else floor
                    mx1[i, j] = mx[i, j] + dt * dmx0[i, j]
                    my1[i, j] = my[i, j] + dt * dmy0[i, j]
            _eos_2d(rho1, mx1, my1, gamma, ux1, uy1, p1, c1)
            _rhs_2d(rho1, mx1, my1, ux1, uy1, p1, c1, gFx, gFy, mu, lam, hx, hy, s, dr1, dmx1, dmy1)
            ra1 = _diss_rate_2d(ux1, uy1, urefx, urefy, mu, lam, hx, hy, work)
            rb1 = _diss_rate_2d(ux1, uy1, zx, zx, mu, lam, hx, hy, work)
            for i in range(nx):
                for j in range(ny):
                    rho[i, j] = rho[i, j] + 0.5 * dt * (dr0[i, j] + dr1[i, j])
                    mx[i, j] = mx[i, j] + 0.5 * dt * (dmx0[i, j] + dmx1[i, j])
                    my[i, j] = my[i, j] + 0.5 * dt * (dmy0[i, j] + dmy1[i, j])
            diss_rel += 0.5 * dt * (ra + ra1)
            diss_ref0 += 0.5 * dt * (rb + rb1)
        else:
            for i in range(nx):
                for j in range(ny):
                    rho[i, j] = rho[i, j] + dt * dr0[i, j]
                    mx[i, j] = mx[i, j] + dt * dmx0[i, j]
                    my[i, j] = my[i, j] + dt * dmy0[i, j]
            diss_rel += dt * ra
            diss_ref0 += dt * rb

        ok = True
        for i in range(nx):
            for j in range(ny):
                if rho[i, j] < floor:
                    floored += (floor - rho[i, j]) * hx * hy
                    rho[i, j] = floor
                if not (
                    math.isfinite(rho[i, j])
                    and math.isfinite(mx[i, j])
                    and math.isfinite(my[i, j])
                ):
                    ok = False
        t += dt
        steps += 1
        if not ok:
            return t, steps, floored, diss_rel, diss_ref0, 1

    return t, steps, floored, diss_rel, diss_ref0, 0

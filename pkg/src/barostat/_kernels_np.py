"""Pure-numpy time-stepping kernels.

These are the reference implementation of the advance loop; the numba
twins in _kernels_nb mirror the arithmetic operation for operation.  Both
sets work on raw arrays so either can be swapped in without touching the
solver layer.

Scheme: Rusanov flux for the convective part on (rho, momentum) with the
pressure rho**gamma inside the momentum flux, conservative viscous face
fluxes, cell-centred source rho*grad(F).  Walls are no-slip and enter
through mirror ghosts (density even, momentum odd), which makes the wall
mass flux exactly zero and the wall viscous flux 2*mu_eff*u0/h.

The equation of state is evaluated once per stage (velocity, pressure,
signal speed) and shared by the CFL scan, the flux sweep and the
dissipation quadrature.  gamma = 2 and gamma = 3 take pow-free paths;
both backends branch the same way, so backend parity is unaffected.

The advance functions integrate the state in place from t to t_target
(or for max_steps steps, whichever comes first) and accumulate

  diss_rel    integral in time of the viscous dissipation of u - uref,
  diss_ref0   same with uref = 0,
  floored     total mass added by the vacuum floor.

The dissipation quadrature is the face form whose interior part matches
the viscous operator's discrete energy identity: wall faces contribute
2*d0**2/h per end, which is exactly the kinetic energy the wall flux
removes (summation by parts), not the naive (2*d0/h)**2 * h.

Error flags returned: 0 ok, 1 non-finite state, 2 time step collapsed.
"""

import numpy as np

_LAND = 1e-14  # relative guard for landing on t_target


def _pressure(rho, gamma):
    if gamma == 2.0:
        return rho * rho
    if gamma == 3.0:
        return rho * rho * rho
    return rho**gamma


def _sound(rho, gamma):
    if gamma == 2.0:
        return np.sqrt(2.0 * rho)
    if gamma == 3.0:
        return np.sqrt(3.0 * (rho * rho))
    return np.sqrt(gamma * rho ** (gamma - 1.0))


# ---------------------------------------------------------------- 1D ----


def _eos_1d(rho, mom, gamma):
    u = mom / rho
    p = _pressure(rho, gamma)
    sp = np.abs(u) + _sound(rho, gamma)
    return u, p, sp


def _rhs_1d(rho, mom, u, p, sp, gradF, nu, h):
    n = rho.size
    fm = np.empty(n + 1)
    fq = np.empty(n + 1)
    fv = np.empty(n + 1)

    a = np.maximum(sp[:-1], sp[1:])
    fm[1:-1] = 0.5 * (mom[:-1] + mom[1:]) - 0.5 * a * (rho[1:] - rho[:-1])
    fq[1:-1] = 0.5 * (mom[:-1] * u[:-1] + p[:-1] + mom[1:] * u[1:] + p[1:]) - 0.5 * a * (
        mom[1:] - mom[:-1]
    )
    fv[1:-1] = nu * (u[1:] - u[:-1]) / h

    # mirror ghosts: the mass flux cancels exactly, momentum sees its image
    fm[0] = 0.0
    fm[n] = 0.0
    fq[0] = mom[0] * u[0] + p[0] - sp[0] * mom[0]
    fq[n] = mom[n - 1] * u[n - 1] + p[n - 1] + sp[n - 1] * mom[n - 1]
    fv[0] = nu * 2.0 * u[0] / h
    fv[n] = -nu * 2.0 * u[n - 1] / h

    drho = -(fm[1:] - fm[:-1]) / h
    dmom = -(fq[1:] - fq[:-1]) / h + (fv[1:] - fv[:-1]) / h + rho * gradF
    return drho, dmom


def _diss_rates_1d(u, uref, nu, h):
    d = u - uref
    rate_rel = nu * (
        2.0 * d[0] * d[0] / h + float(np.sum((d[1:] - d[:-1]) ** 2)) / h + 2.0 * d[-1] * d[-1] / h
    )
    rate_ref0 = nu * (
        2.0 * u[0] * u[0] / h + float(np.sum((u[1:] - u[:-1]) ** 2)) / h + 2.0 * u[-1] * u[-1] / h
    )
    return rate_rel, rate_ref0


def advance_1d(rho, mom, gradF, uref, gamma, mu, lam, h, cfl, floor, t, t_target, heun, max_steps):
    nu = 2.0 * mu + lam
    steps = 0
    floored = 0.0
    diss_rel = 0.0
    diss_ref0 = 0.0
    guard = _LAND * max(1.0, abs(t_target))

    while t < t_target - guard and steps < max_steps:
        u, p, sp = _eos_1d(rho, mom, gamma)
        dt = h / float(sp.max())
        if nu > 0.0:
            dt = min(dt, h * h * float(rho.min()) / (2.0 * nu))
        dt *= cfl
        if dt < 1e-15 * max(1.0, abs(t_target)):
            return t, steps, floored, diss_rel, diss_ref0, 2
        if dt > t_target - t:
            dt = t_target - t

        dr0, dm0 = _rhs_1d(rho, mom, u, p, sp, gradF, nu, h)
        ra, rb = _diss_rates_1d(u, uref, nu, h)
        if heun:
            rho1 = np.maximum(rho + dt * dr0, floor)
            mom1 = mom + dt * dm0
            u1, p1, sp1 = _eos_1d(rho1, mom1, gamma)
            dr1, dm1 = _rhs_1d(rho1, mom1, u1, p1, sp1, gradF, nu, h)
            ra1, rb1 = _diss_rates_1d(u1, uref, nu, h)
            rho_new = rho + 0.5 * dt * (dr0 + dr1)
            mom += 0.5 * dt * (dm0 + dm1)
            diss_rel += 0.5 * dt * (ra + ra1)
            diss_ref0 += 0.5 * dt * (rb + rb1)
        else:
            rho_new = rho + dt * dr0
            mom += dt * dm0
            diss_rel += dt * ra
            diss_ref0 += dt * rb

        low = rho_new < floor
        if low.any():
            floored += float(np.sum(floor - rho_new[low])) * h
            rho_new[low] = floor
        rho[:] = rho_new
        t += dt
        steps += 1

        if not np.isfinite(float(np.sum(rho)) + float(np.sum(np.abs(mom)))):
            return t, steps, floored, diss_rel, diss_ref0, 1

    return t, steps, floored, diss_rel, diss_ref0, 0


# ---------------------------------------------------------------- 2D ----


def _div_centered(ux, uy, hx, hy):
    # cell-centred divergence with odd mirror ghosts for both components
    s = np.empty_like(ux)
    s[1:-1, :] = (ux[2:, :] - ux[:-2, :]) / (2.0 * hx)
    s[0, :] = (ux[1, :] + ux[0, :]) / (2.0 * hx)
    s[-1, :] = (-ux[-1, :] - ux[-2, :]) / (2.0 * hx)
    t = np.empty_like(uy)
    t[:, 1:-1] = (uy[:, 2:] - uy[:, :-2]) / (2.0 * hy)
    t[:, 0] = (uy[:, 1] + uy[:, 0]) / (2.0 * hy)
    t[:, -1] = (-uy[:, -1] - uy[:, -2]) / (2.0 * hy)
    return s + t


def _rhs_2d(rho, mx, my, ux, uy, p, c, gFx, gFy, mu, lam, hx, hy):
    bulk = mu + lam
    s = _div_centered(ux, uy, hx, hy)
    nx, ny = rho.shape

    # x faces, shape (nx + 1, ny)
    spx = np.abs(ux) + c
    ax = np.maximum(spx[:-1, :], spx[1:, :])
    fm_x = np.empty((nx + 1, ny))
    fqx_x = np.empty((nx + 1, ny))
    fqy_x = np.empty((nx + 1, ny))
    fvx_x = np.empty((nx + 1, ny))
    fvy_x = np.empty((nx + 1, ny))
    fm_x[1:-1] = 0.5 * (mx[:-1] + mx[1:]) - 0.5 * ax * (rho[1:] - rho[:-1])
    fqx_x[1:-1] = 0.5 * (mx[:-1] * ux[:-1] + p[:-1] + mx[1:] * ux[1:] + p[1:]) - 0.5 * ax * (
        mx[1:] - mx[:-1]
    )
    fqy_x[1:-1] = 0.5 * (my[:-1] * ux[:-1] + my[1:] * ux[1:]) - 0.5 * ax * (my[1:] - my[:-1])
    fvx_x[1:-1] = mu * (ux[1:] - ux[:-1]) / hx + bulk * 0.5 * (s[:-1] + s[1:])
    fvy_x[1:-1] = mu * (uy[1:] - uy[:-1]) / hx
    fm_x[0] = 0.0
    fm_x[-1] = 0.0
    fqx_x[0] = mx[0] * ux[0] + p[0] - spx[0] * mx[0]
    fqx_x[-1] = mx[-1] * ux[-1] + p[-1] + spx[-1] * mx[-1]
    fqy_x[0] = my[0] * ux[0] - spx[0] * my[0]
    fqy_x[-1] = my[-1] * ux[-1] + spx[-1] * my[-1]
    fvx_x[0] = mu * 2.0 * ux[0] / hx + bulk * s[0]
    fvx_x[-1] = -mu * 2.0 * ux[-1] / hx + bulk * s[-1]
    fvy_x[0] = mu * 2.0 * uy[0] / hx
    fvy_x[-1] = -mu * 2.0 * uy[-1] / hx

    # y faces, shape (nx, ny + 1)
    spy = np.abs(uy) + c
    ay = np.maximum(spy[:, :-1], spy[:, 1:])
    fm_y = np.empty((nx, ny + 1))
    fqx_y = np.empty((nx, ny + 1))
    fqy_y = np.empty((nx, ny + 1))
    fvx_y = np.empty((nx, ny + 1))
    fvy_y = np.empty((nx, ny + 1))
    fm_y[:, 1:-1] = 0.5 * (my[:, :-1] + my[:, 1:]) - 0.5 * ay * (rho[:, 1:] - rho[:, :-1])
    fqx_y[:, 1:-1] = 0.5 * (mx[:, :-1] * uy[:, :-1] + mx[:, 1:] * uy[:, 1:]) - 0.5 * ay * (
        mx[:, 1:] - mx[:, :-1]
    )
    fqy_y[:, 1:-1] = 0.5 * (
        my[:, :-1] * uy[:, :-1] + p[:, :-1] + my[:, 1:] * uy[:, 1:] + p[:, 1:]
    ) - 0.5 * ay * (my[:, 1:] - my[:, :-1])
    fvx_y[:, 1:-1] = mu * (ux[:, 1:] - ux[:, :-1]) / hy
    fvy_y[:, 1:-1] = mu * (uy[:, 1:] - uy[:, :-1]) / hy + bulk * 0.5 * (s[:, :-1] + s[:, 1:])
    fm_y[:, 0] = 0.0
    fm_y[:, -1] = 0.0
    fqx_y[:, 0] = mx[:, 0] * uy[:, 0] - spy[:, 0] * mx[:, 0]
    fqx_y[:, -1] = mx[:, -1] * uy[:, -1] + spy[:, -1] * mx[:, -1]
    fqy_y[:, 0] = my[:, 0] * uy[:, 0] + p[:, 0] - spy[:, 0] * my[:, 0]
    fqy_y[:, -1] = my[:, -1] * uy[:, -1] + p[:, -1] + spy[:, -1] * my[:, -1]
    fvx_y[:, 0] = mu * 2.0 * ux[:, 0] / hy
    fvx_y[:, -1] = -mu * 2.0 * ux[:, -1] / hy
    fvy_y[:, 0] = mu * 2.0 * uy[:, 0] / hy + bulk * s[:, 0]
    fvy_y[:, -1] = -mu * 2.0 * uy[:, -1] / hy + bulk * s[:, -1]

    drho = -(fm_x[1:] - fm_x[:-1]) / hx - (fm_y[:, 1:] - fm_y[:, :-1]) / hy
    dmx = (
        -(fqx_x[1:] - fqx_x[:-1]) / hx
        - (fqx_y[:, 1:] - fqx_y[:, :-1]) / hy
        + (fvx_x[1:] - fvx_x[:-1]) / hx
        + (fvx_y[:, 1:] - fvx_y[:, :-1]) / hy
        + rho * gFx
    )
    dmy = (
        -(fqy_x[1:] - fqy_x[:-1]) / hx
        - (fqy_y[:, 1:] - fqy_y[:, :-1]) / hy
        + (fvy_x[1:] - fvy_x[:-1]) / hx
        + (fvy_y[:, 1:] - fvy_y[:, :-1]) / hy
        + rho * gFy
    )
    return drho, dmx, dmy


def _axis_face_sq(d, h, axis, other_h):
    # face-form quadrature of the squared axis derivative of one component
    if axis == 0:
        rate = 2.0 * float(np.sum(d[0, :] ** 2)) / h + 2.0 * float(np.sum(d[-1, :] ** 2)) / h
        rate += float(np.sum((d[1:, :] - d[:-1, :]) ** 2)) / h
    else:
        rate = 2.0 * float(np.sum(d[:, 0] ** 2)) / h + 2.0 * float(np.sum(d[:, -1] ** 2)) / h
        rate += float(np.sum((d[:, 1:] - d[:, :-1]) ** 2)) / h
    return rate * other_h


def _diss_rate_2d(ux, uy, urefx, urefy, mu, lam, hx, hy):
    dx = ux - urefx
    dy = uy - urefy
    grad_sq = (
        _axis_face_sq(dx, hx, 0, hy)
        + _axis_face_sq(dy, hx, 0, hy)
        + _axis_face_sq(dx, hy, 1, hx)
        + _axis_face_sq(dy, hy, 1, hx)
    )
    s = _div_centered(dx, dy, hx, hy)
    return mu * grad_sq + (mu + lam) * float(np.sum(s * s)) * hx * hy


def advance_2d(
    rho, mx, my, gFx, gFy, urefx, urefy, gamma, mu, lam, hx, hy, cfl, floor, t, t_target, heun, max_steps
):
    nu = 2.0 * mu + lam
    hmin = min(hx, hy)
    steps = 0
    floored = 0.0
    diss_rel = 0.0
    diss_ref0 = 0.0
    zx = np.zeros_like(rho)
    guard = _LAND * max(1.0, abs(t_target))

    while t < t_target - guard and steps < max_steps:
        ux = mx / rho
        uy = my / rho
        p = _pressure(rho, gamma)
        c = _sound(rho, gamma)
        spx = np.abs(ux) + c
        spy = np.abs(uy) + c
        dt = min(hx / float(spx.max()), hy / float(spy.max()))
        if nu > 0.0:
            dt = min(dt, hmin * hmin * float(rho.min()) / (4.0 * nu))
        dt *= cfl
        if dt < 1e-15 * max(1.0, abs(t_target)):
            return t, steps, floored, diss_rel, diss_ref0, 2
        if dt > t_target - t:
            dt = t_target - t

        dr0, dmx0, dmy0 = _rhs_2d(rho, mx, my, ux, uy, p, c, gFx, gFy, mu, lam, hx, hy)
        ra = _diss_rate_2d(ux, uy, urefx, urefy, mu, lam, hx, hy)
        rb = _diss_rate_2d(ux, uy, zx, zx, mu, lam, hx, hy)
        if heun:
            rho1 = np.maximum(rho + dt * dr0, floor)
            mx1 = mx + dt * dmx0
            my1 = my + dt * dmy0
            ux1 = mx1 / rho1
            uy1 = my1 / rho1
            p1 = _pressure(rho1, gamma)
            c1 = _sound(rho1, gamma)
            dr1, dmx1, dmy1 = _rhs_2d(rho1, mx1, my1, ux1, uy1, p1, c1, gFx, gFy, mu, lam, hx, hy)
            ra1 = _diss_rate_2d(ux1, uy1, urefx, urefy, mu, lam, hx, hy)
            rb1 = _diss_rate_2d(ux1, uy1, zx, zx, mu, lam, hx, hy)
            rho_new = rho + 0.5 * dt * (dr0 + dr1)
            mx += 0.5 * dt * (dmx0 + dmx1)
            my += 0.5 * dt * (dmy0 + dmy1)
            diss_rel += 0.5 * dt * (ra + ra1)
            diss_ref0 += 0.5 * dt * (rb + rb1)
        else:
            rho_new = rho + dt * dr0
            mx += dt * dmx0
            my += dt * dmy0
            diss_rel += dt * ra
            diss_ref0 += dt * rb

        low = rho_new < floor
        if low.any():
            floored += float(np.sum(floor - rho_new[low])) * hx * hy
            rho_new[low] = floor
        rho[:] = rho_new
        t += dt
        steps += 1

        if not np.isfinite(
            float(np.sum(rho)) + float(np.sum(np.abs(mx))) + float(np.sum(np.abs(my)))
        ):
            return t, steps, floored, diss_rel, diss_ref0, 1

    return t, steps, floored, diss_rel, diss_ref0, 0

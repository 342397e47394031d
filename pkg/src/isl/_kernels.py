"""Hot inner loops: Dormand-Prince 5(4) stepping for the two flows in the package.

Every curve is parametrised by a real ``s`` in ``[s0, s1]``. One driver serves
the linear transport ``dY/dz = B(z) Y`` (problem ``TRANSPORT``), the
Schlesinger flow (problem ``SCHLESINGER``) and the sixth Painleve equation
(problem ``PAINLEVE6``); each right-hand side reads its
data from a flat complex parameter vector so the compiled driver can be
cached. Status codes returned by :func:`dp5_integrate`:

0  reached ``s1``
1  max-norm of the state exceeded ``blow_limit``
2  step size underflow
3  step budget exhausted
"""

import numpy as np

from ._jit import jit

OK = 0
BLOWUP = 1
UNDERFLOW = 2
BUDGET = 3

TRANSPORT = 0
SCHLESINGER = 1
PAINLEVE6 = 2

# Dormand-Prince 5(4) tableau, FSAL.
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@jit
def dp5_integrate(problem, y0, par, s0, s1, tol, h0, max_steps, blow_limit, record):
    """Adaptive DP5(4) integration of ``y' = rhs(s, y)`` from ``s0`` to ``s1``.

    Error control is per step on the max-norm with mixed scale
    ``tol * (1 + |y|)``. When ``record`` is true every accepted step is
    stored.

    Returns ``(status, s, y, ts, ys, n_accepted, n_rejected)``.
    """
    dim = y0.shape[0]
    span = s1 - s0
    y = y0.copy()
    s = s0
    cap = 64 if record else 1
    ts = np.empty(cap)
    ys = np.empty((cap, dim), dtype=np.complex128)
    count = 0
    if record:
        ts[0] = s
        ys[0, :] = y
        count = 1
    if span == 0.0:
        return OK, s, y, ts[:count], ys[:count], 0, 0

    h = h0 if h0 > 0.0 else 0.01 * span
    if h > span:
        h = span
    h_min = 1e-13 * span
    k1 = _rhs(problem, s, y, par)
    accepted = 0
    rejected = 0
    while s < s1:
        if accepted + rejected >= max_steps:
            return BUDGET, s, y, ts[:count], ys[:count], accepted, rejected
        last = False
        if s + h >= s1:
            h = s1 - s
            last = True
        k2 = _rhs(problem, s + _C2 * h, y + h * (_A21 * k1), par)
        k3 = _rhs(problem, s + _C3 * h, y + h * (_A31 * k1 + _A32 * k2), par)
        k4 = _rhs(problem, s + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), par)
        k5 = _rhs(problem, s + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), par)
        k6 = _rhs(problem, s + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), par)
        y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = _rhs(problem, s + h, y_new, par)
        err_vec = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        err = 0.0
        finite = True
        for i in range(dim):
            yi = abs(y[i])
            yn = abs(y_new[i])
            if not (yn < np.inf):
                finite = False
                break
            sc = tol * (1.0 + (yi if yi > yn else yn))
            e = abs(err_vec[i]) / sc
            if not (e < np.inf):
                finite = False
                break
            if e > err:
                err = e
        if not finite:
            rejected += 1
            h *= 0.2
            if h < h_min:
                return UNDERFLOW, s, y, ts[:count], ys[:count], accepted, rejected
            continue
        if err <= 1.0:
            s = s1 if last else s + h
            y = y_new
            k1 = k7
            accepted += 1
            if record:
                if count == cap:
                    cap *= 2
                    ts_big = np.empty(cap)
                    ys_big = np.empty((cap, dim), dtype=np.complex128)
                    ts_big[:count] = ts[:count]
                    ys_big[:count, :] = ys[:count, :]
                    ts = ts_big
                    ys = ys_big
                ts[count] = s
                ys[count, :] = y
                count += 1
            norm = 0.0
            for i in range(dim):
                v = abs(y[i])
                if v > norm:
                    norm = v
            if norm > blow_limit:
                return BLOWUP, s, y, ts[:count], ys[:count], accepted, rejected
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h *= fac
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < h_min:
                return UNDERFLOW, s, y, ts[:count], ys[:count], accepted, rejected
    return OK, s, y, ts[:count], ys[:count], accepted, rejected


@jit
def _rhs(problem, s, y, par):
    if problem == TRANSPORT:
        return transport_rhs(s, y, par)
    if problem == PAINLEVE6:
        return pvi_rhs_flat(s, y, par)
    return schlesinger_rhs_flat(s, y, par)


@jit
def transport_par(points, residues, kind, p0, p1, p2):
    m = points.shape[0]
    par = np.empty(4 + 5 * m, dtype=np.complex128)
    par[0] = kind
    par[1] = p0
    par[2] = p1
    par[3] = p2
    par[4 : 4 + m] = points
    par[4 + m :] = residues.reshape(4 * m)
    return par


@jit
def transport_rhs(s, y, par):
    """``dY/ds = B(z(s)) z'(s) Y`` for a 2x2 fundamental matrix stored row-major.

    ``par`` is built by :func:`transport_par`; ``kind`` 0 is the segment
    ``p0 -> p1``, ``kind`` 1 the arc ``p0 + |p1| exp(i(p2.real + s p2.imag))``.
    """
    m = (par.shape[0] - 4) // 5
    kind = int(par[0].real)
    p0 = par[1]
    p1 = par[2]
    p2 = par[3]
    if kind == 0:
        z = p0 + s * (p1 - p0)
        dz = p1 - p0
    else:
        e = np.exp(1j * (p2.real + s * p2.imag))
        z = p0 + p1.real * e
        dz = 1j * p2.imag * p1.real * e
    b00 = 0j
    b01 = 0j
    b10 = 0j
    b11 = 0j
    for i in range(m):
        w = 1.0 / (z - par[4 + i])
        r = 4 + m + 4 * i
        b00 += par[r] * w
        b01 += par[r + 1] * w
        b10 += par[r + 2] * w
        b11 += par[r + 3] * w
    out = np.empty(4, dtype=np.complex128)
    out[0] = (b00 * y[0] + b01 * y[2]) * dz
    out[1] = (b00 * y[1] + b01 * y[3]) * dz
    out[2] = (b10 * y[0] + b11 * y[2]) * dz
    out[3] = (b10 * y[1] + b11 * y[3]) * dz
    return out


@jit
def schlesinger_rhs_flat(s, y, par):
    """Schlesinger flow along ``a(s) = a0 + s * delta`` plus one quadrature slot.

    ``par`` is ``a0`` followed by ``delta``.

    ``y[:4m]`` holds the residues row-major, ``y[4m]`` accumulates
    ``(2 theta + 1) * sum_i b_i^{12} delta_i`` with ``theta`` the (1,1) entry
    of the residue sum.
    """
    m = par.shape[0] // 2
    a0 = par[:m]
    delta = par[m:]
    out = np.zeros(4 * m + 1, dtype=np.complex128)
    theta = 0j
    for i in range(m):
        theta += y[4 * i]
    quad = 0j
    for i in range(m):
        ai = a0[i] + s * delta[i]
        x00 = y[4 * i]
        x01 = y[4 * i + 1]
        x10 = y[4 * i + 2]
        x11 = y[4 * i + 3]
        quad += x01 * delta[i]
        for j in range(m):
            if j == i:
                continue
            dd = delta[i] - delta[j]
            if dd == 0.0:
                continue
            w = dd / (ai - (a0[j] + s * delta[j]))
            z00 = y[4 * j]
            z01 = y[4 * j + 1]
            z10 = y[4 * j + 2]
            z11 = y[4 * j + 3]
            # [X, Z]
            c00 = x01 * z10 - z01 * x10
            c01 = x00 * z01 + x01 * z11 - z00 * x01 - z01 * x11
            c10 = x10 * z00 + x11 * z10 - z10 * x00 - z11 * x10
            c11 = x10 * z01 - z10 * x01
            out[4 * i] -= c00 * w
            out[4 * i + 1] -= c01 * w
            out[4 * i + 2] -= c10 * w
            out[4 * i + 3] -= c11 * w
    out[4 * m] = (2.0 * theta + 1.0) * quad
    return out


@jit
def integrate_transport(points, residues, kind, p0, p1, p2, y0, tol, max_steps):
    par = transport_par(points, residues, kind, p0, p1, p2)
    return dp5_integrate(TRANSPORT, y0, par, 0.0, 1.0, tol, 0.0, max_steps, 1e300, False)


@jit
def integrate_schlesinger(a0, delta, y0, s1, tol, max_steps, blow_limit, record):
    m = a0.shape[0]
    par = np.empty(2 * m, dtype=np.complex128)
    par[:m] = a0
    par[m:] = delta
    return dp5_integrate(SCHLESINGER, y0, par, 0.0, s1, tol, 0.0, max_steps, blow_limit, record)


@jit
def pvi_rhs_flat(s, y, par):
    """``(u, u')`` along ``t = t0 + s * dt``; ``par`` is ``[t0, dt, alpha, beta, gamma, delta]``."""
    t = par[0] + s * par[1]
    dt = par[1]
    u = y[0]
    up = y[1]
    upp = (
        0.5 * (1.0 / u + 1.0 / (u - 1.0) + 1.0 / (u - t)) * up * up
        - (1.0 / t + 1.0 / (t - 1.0) + 1.0 / (u - t)) * up
        + u * (u - 1.0) * (u - t) / (t * t * (t - 1.0) * (t - 1.0))
        * (par[2] + par[3] * t / (u * u) + par[4] * (t - 1.0) / ((u - 1.0) * (u - 1.0))
           + par[5] * t * (t - 1.0) / ((u - t) * (u - t)))
    )
    out = np.empty(2, dtype=np.complex128)
    out[0] = up * dt
    out[1] = upp * dt
    return out


@jit
def integrate_pvi(par, y0, tol, max_steps, blow_limit, record):
    return dp5_integrate(PAINLEVE6, y0, par, 0.0, 1.0, tol, 0.0, max_steps, blow_limit, record)

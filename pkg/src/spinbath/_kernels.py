"""Compiled scalar kernels shared by the public modules.

Everything here works on plain floats so that numba can fuse a whole
trajectory (or a chunk of Monte Carlo samples) into one loop. Errors are
reported through integer status codes; the Python wrappers turn them into
exceptions.
"""
import math

import numpy as np
from numba import njit

OK = 0
DEGENERATE = 1
BRANCH = 2

# elementary map identifiers
SX_COUPLING = 0  # nonlinear Sx flow (analytic, 3/2-power solution)
SX_ROT = 1  # Sx -> Sx - h Sy (Sz - c2 b)
SY = 2  # full Sy shift on the (1,1)/(2,2) surfaces
SZ_COUPLING = 3  # nonlinear Sz flow
SY_ROT = 4  # Sy -> Sy + h Sx (Sz - c2 b), mean surface only

TWO_THIRDS = 2.0 / 3.0


@njit(cache=True, error_model="numpy")
def gap_squared(sx, sy, sz, omega, b, c1, mu):
    ot = omega + mu * sx
    g = c1 * b + mu * sz
    eta = -mu * sy
    return ot * ot + g * g + eta * eta


@njit(cache=True, error_model="numpy")
def _two_thirds_ratio(u):
    # ((1+u)^(2/3) - 1) / u, continuous at u = 0; binomial series below
    # 1e-3 (truncation ~1e-17 relative)
    if abs(u) < 1e-3:
        return TWO_THIRDS + u * (-1.0 / 9.0 + u * (4.0 / 81.0 + u * (-7.0 / 243.0 + u * (14.0 / 729.0))))
    return math.expm1(TWO_THIRDS * math.log1p(u)) / u


@njit(cache=True, error_model="numpy")
def _power_flow(x, sign, lin, rate, h, y, eps_gap, eps_lin):
    """Exact flow of dx/dt = sign * rate / sqrt(y0 + lin * (x - x0)).

    ``y`` is the radicand at the current ``x``. Returns (x_new, status).
    """
    if y <= eps_gap * eps_gap:
        return x, DEGENERATE
    if rate == 0.0 or h == 0.0:
        return x, OK
    root = math.sqrt(y)
    if abs(lin) < eps_lin:
        return x + sign * rate * h / root, OK
    u = sign * 1.5 * lin * rate * h / (y * root)
    if u < -1.0:
        return x, BRANCH
    return x + sign * 1.5 * rate * h * _two_thirds_ratio(u) / root, OK


@njit(cache=True, error_model="numpy")
def casimir_constant(omega, b, c1, mu, casimir):
    return omega * omega + (c1 * b) ** 2 + mu * mu * casimir


@njit(cache=True, error_model="numpy")
def flow_sx(sign, sx, sy, sz, h, omega, b, c1, mu, casimir, eps_gap, eps_lin):
    csq = casimir_constant(omega, b, c1, mu, casimir)
    lin = 2.0 * mu * omega
    y = csq + 2.0 * mu * c1 * b * sz + lin * sx
    rate = -mu * c1 * b * sy
    return _power_flow(sx, sign, lin, rate, h, y, eps_gap, eps_lin)


@njit(cache=True, error_model="numpy")
def flow_sz(sign, sx, sy, sz, h, omega, b, c1, mu, casimir, eps_gap, eps_lin):
    csq = casimir_constant(omega, b, c1, mu, casimir)
    lin = 2.0 * mu * c1 * b
    y = csq + 2.0 * mu * omega * sx + lin * sz
    rate = mu * omega * sy
    return _power_flow(sz, sign, lin, rate, h, y, eps_gap, eps_lin)


@njit(cache=True, error_model="numpy")
def shift_sy(sign, sx, sy, sz, h, omega, b, c1, c2, mu, casimir, eps_gap):
    csq = casimir_constant(omega, b, c1, mu, casimir)
    r2 = csq + 2.0 * mu * (omega * sx + c1 * b * sz)
    if r2 <= eps_gap * eps_gap:
        return sy, DEGENERATE
    rate = sx * (sz - c2 * b) + sign * mu * (c1 * b * sx - omega * sz) / math.sqrt(r2)
    return sy + h * rate, OK


@njit(cache=True, error_model="numpy")
def apply_map(mid, sign, sx, sy, sz, h, omega, b, c1, c2, mu, casimir, eps_gap, eps_lin):
    status = OK
    if mid == SX_COUPLING:
        sx, status = flow_sx(sign, sx, sy, sz, h, omega, b, c1, mu, casimir, eps_gap, eps_lin)
    elif mid == SX_ROT:
        sx = sx - h * sy * (sz - c2 * b)
    elif mid == SY:
        sy, status = shift_sy(sign, sx, sy, sz, h, omega, b, c1, c2, mu, casimir, eps_gap)
    elif mid == SZ_COUPLING:
        sz, status = flow_sz(sign, sx, sy, sz, h, omega, b, c1, mu, casimir, eps_gap, eps_lin)
    else:
        sy = sy + h * sx * (sz - c2 * b)
    return sx, sy, sz, status


@njit(cache=True, error_model="numpy")
def apply_schedule(maps, coefs, sign, sx, sy, sz, tau, omega, b, c1, c2, mu, casimir, eps_gap, eps_lin):
    for i in range(maps.shape[0]):
        sx, sy, sz, status = apply_map(
            maps[i], sign, sx, sy, sz, coefs[i] * tau, omega, b, c1, c2, mu, casimir, eps_gap, eps_lin
        )
        if status != OK:
            return sx, sy, sz, status
    return sx, sy, sz, OK


@njit(cache=True, error_model="numpy")
def frame(sx, sy, sz, omega, b, c1, mu):
    """Eigen-decomposition of h(S) = d . sigma, d = (-Omega~, eta, -gamma).

    Returns (gap, a1, b1, a2, b2) with v1 = (a1, b1) for +gap and
    v2 = (a2, b2) for -gap; the larger component of each is real positive.
    """
    dx = -(omega + mu * sx)
    dy = -mu * sy
    dz = -(c1 * b + mu * sz)
    r = math.sqrt(dx * dx + dy * dy + dz * dz)
    if r == 0.0:
        return 0.0, 1.0 + 0j, 0j, 0j, 1.0 + 0j
    n = math.sqrt(2.0 * r * (r + abs(dz)))
    if dz >= 0.0:
        a1 = complex(r + dz, 0.0) / n
        b1 = complex(dx, dy) / n
    else:
        a1 = complex(dx, -dy) / n
        b1 = complex(r - dz, 0.0) / n
    if dz > 0.0:
        a2 = complex(-dx, dy) / n
        b2 = complex(r + dz, 0.0) / n
    else:
        a2 = complex(r - dz, 0.0) / n
        b2 = complex(-dx, -dy) / n
    return r, a1, b1, a2, b2


@njit(cache=True, error_model="numpy")
def pauli_element(which, a_l, b_l, a_r, b_r):
    """<left| sigma_which |right> for which in 0,1,2 = x,y,z."""
    if which == 0:
        return a_l.conjugate() * b_r + b_l.conjugate() * a_r
    if which == 1:
        return -1j * a_l.conjugate() * b_r + 1j * b_l.conjugate() * a_r
    return a_l.conjugate() * a_r - b_l.conjugate() * b_r


@njit(cache=True, error_model="numpy")
def _overlap_phase(a0, b0, a1, b1):
    ov = a0.conjugate() * a1 + b0.conjugate() * b1
    return math.atan2(ov.imag, ov.real)


@njit(cache=True, error_model="numpy")
def run_trajectory(
    sx, sy, sz, maps, coefs, variants, sign, tau, stride,
    omega, b, c1, c2, mu, casimir, eps_gap, eps_lin, track_phases,
):
    """Integrate len(variants) steps; record every ``stride`` steps.

    Returns (spins[n_out, 3], bohr[n_out], geometric[n_out], n_filled,
    status, fail_step); on failure only the first n_filled rows are valid.
    """
    n_steps = variants.shape[0]
    n_out = n_steps // stride + 1
    spins = np.zeros((n_out, 3))
    bohr = np.zeros(n_out)
    geo = np.zeros(n_out)
    spins[0, 0] = sx
    spins[0, 1] = sy
    spins[0, 2] = sz
    acc_b = 0.0
    acc_g = 0.0
    r0 = 0.0
    a1 = b1 = a2 = b2 = 0j
    if track_phases:
        r0, a1, b1, a2, b2 = frame(sx, sy, sz, omega, b, c1, mu)
        if r0 < eps_gap:
            return spins, bohr, geo, 1, DEGENERATE, 0
    k = 1
    for step in range(n_steps):
        v = variants[step]
        sx, sy, sz, status = apply_schedule(
            maps[v], coefs[v], sign, sx, sy, sz, tau, omega, b, c1, c2, mu, casimir, eps_gap, eps_lin
        )
        if status != OK:
            return spins, bohr, geo, k, status, step
        if track_phases:
            r1, na1, nb1, na2, nb2 = frame(sx, sy, sz, omega, b, c1, mu)
            if r1 < eps_gap:
                return spins, bohr, geo, k, DEGENERATE, step
            acc_b += tau * (r0 + r1)  # trapezoid of omega_12 = 2 gap
            acc_g += _overlap_phase(a1, b1, na1, nb1) - _overlap_phase(a2, b2, na2, nb2)
            r0, a1, b1, a2, b2 = r1, na1, nb1, na2, nb2
        if (step + 1) % stride == 0:
            spins[k, 0] = sx
            spins[k, 1] = sy
            spins[k, 2] = sz
            bohr[k] = acc_b
            geo[k] = acc_g
            k += 1
    return spins, bohr, geo, k, OK, n_steps


@njit(cache=True, error_model="numpy")
def _diagonal_series(
    sx, sy, sz, maps, coefs, variants, sign, alpha, tau, stride,
    omega, b, c1, c2, mu, casimir, eps_gap, eps_lin, out_x, out_z,
):
    """<alpha|sigma|alpha> along a trajectory, written into out_x/out_z."""
    n_steps = variants.shape[0]
    r, a1, b1, a2, b2 = frame(sx, sy, sz, omega, b, c1, mu)
    if r < eps_gap:
        return DEGENERATE
    k = 0
    for step in range(n_steps + 1):
        if step % stride == 0:
            r, a1, b1, a2, b2 = frame(sx, sy, sz, omega, b, c1, mu)
            if r < eps_gap:
                return DEGENERATE
            if alpha == 1:
                out_x[k] = pauli_element(0, a1, b1, a1, b1).real
                out_z[k] = pauli_element(2, a1, b1, a1, b1).real
            else:
                out_x[k] = pauli_element(0, a2, b2, a2, b2).real
                out_z[k] = pauli_element(2, a2, b2, a2, b2).real
            k += 1
        if step == n_steps:
            break
        v = variants[step]
        sx, sy, sz, status = apply_schedule(
            maps[v], coefs[v], sign, sx, sy, sz, tau, omega, b, c1, c2, mu, casimir, eps_gap, eps_lin
        )
        if status != OK:
            return status
    return OK


@njit(cache=True, error_model="numpy")
def ensemble_chunk(
    s0, rho_s, maps11, coefs11, var11, maps22, coefs22, var22, maps12, coefs12, var12,
    tau, stride, omega, b, c1, c2, mu, eps_gap, eps_lin,
):
    """Per-sample observable contributions for a chunk of initial spins.

    Returns (sigma_z[n, n_out], sigma_x[n, n_out], bohr[n, n_out],
    geometric[n, n_out], status[n]).
    """
    n = s0.shape[0]
    n_steps = var12.shape[0]
    n_out = n_steps // stride + 1
    out_z = np.zeros((n, n_out))
    out_x = np.zeros((n, n_out))
    out_b = np.zeros((n, n_out))
    out_g = np.zeros((n, n_out))
    status = np.zeros(n, dtype=np.int64)
    d11x = np.zeros(n_out)
    d11z = np.zeros(n_out)
    d22x = np.zeros(n_out)
    d22z = np.zeros(n_out)
    for i in range(n):
        sx, sy, sz = s0[i, 0], s0[i, 1], s0[i, 2]
        cas = sx * sx + sy * sy + sz * sz
        r, a1, b1, a2, b2 = frame(sx, sy, sz, omega, b, c1, mu)
        if r < eps_gap:
            status[i] = DEGENERATE
            continue
        # rho in the adiabatic basis at the initial spin
        r11 = 0j
        r22 = 0j
        r12 = 0j
        for p in range(2):
            for q in range(2):
                w = rho_s[p, q]
                l1 = a1 if p == 0 else b1
                l2 = a2 if p == 0 else b2
                m1 = a1 if q == 0 else b1
                m2 = a2 if q == 0 else b2
                r11 += l1.conjugate() * w * m1
                r22 += l2.conjugate() * w * m2
                r12 += l1.conjugate() * w * m2
        st = _diagonal_series(
            sx, sy, sz, maps11, coefs11, var11, 1.0, 1, tau, stride,
            omega, b, c1, c2, mu, cas, eps_gap, eps_lin, d11x, d11z,
        )
        if st != OK:
            status[i] = st
            continue
        st = _diagonal_series(
            sx, sy, sz, maps22, coefs22, var22, -1.0, 2, tau, stride,
            omega, b, c1, c2, mu, cas, eps_gap, eps_lin, d22x, d22z,
        )
        if st != OK:
            status[i] = st
            continue
        spins, bohr, geo, _, st, _ = run_trajectory(
            sx, sy, sz, maps12, coefs12, var12, 0.0, tau, stride,
            omega, b, c1, c2, mu, cas, eps_gap, eps_lin, True,
        )
        if st != OK:
            status[i] = st
            continue
        for k in range(n_out):
            gap, a1, b1, a2, b2 = frame(spins[k, 0], spins[k, 1], spins[k, 2], omega, b, c1, mu)
            phase = -(bohr[k] + geo[k])
            f = complex(math.cos(phase), math.sin(phase))
            cz = pauli_element(2, a2, b2, a1, b1)
            cx = pauli_element(0, a2, b2, a1, b1)
            out_z[i, k] = (r11 * d11z[k] + r22 * d22z[k]).real + 2.0 * (r12 * cz * f).real
            out_x[i, k] = (r11 * d11x[k] + r22 * d22x[k]).real + 2.0 * (r12 * cx * f).real
            out_b[i, k] = bohr[k]
            out_g[i, k] = geo[k]
    return out_z, out_x, out_b, out_g, status

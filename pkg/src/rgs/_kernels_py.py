"""Numpy implementations of the hot kernels.

These are the pure-Python fallback for the compiled extension in
_kernels.pyx.  Both backends expose the same functions with identical
semantics; rgs.kernels picks one at import time.

Conventions shared by every kernel:
  - fields are C-contiguous (n, n) arrays, axis 0 is the x2 direction and
    axis 1 is the x1 direction (so a row-major dump walks x1 fastest);
  - node (i0, i1) sits at x = (-L + i1*h, -L + i0*h);
  - all stencils impose homogeneous Dirichlet data: the boundary ring of
    every output is zero and neighbours outside the grid count as zero.
"""

import numpy as np


def laplacian_apply(v, inv_h2, out=None):
    """5-point Laplacian, boundary ring of the result is zero."""
    if out is None:
        out = np.zeros_like(v)
    else:
        out[0, :] = 0.0
        out[-1, :] = 0.0
        out[:, 0] = 0.0
        out[:, -1] = 0.0
    out[1:-1, 1:-1] = (
        v[:-2, 1:-1] + v[2:, 1:-1] + v[1:-1, :-2] + v[1:-1, 2:] - 4.0 * v[1:-1, 1:-1]
    ) * inv_h2
    return out


def rotation_apply(v, axis, omega, inv_2h, out=None):
    """i*omega*(x_perp . grad v) with centered differences.

    x_perp = (-x2, x1), so the result is i*omega*(-x2 d1 + x1 d2)v.
    """
    if out is None:
        out = np.zeros_like(v)
    else:
        out[0, :] = 0.0
        out[-1, :] = 0.0
        out[:, 0] = 0.0
        out[:, -1] = 0.0
    x1 = axis[1:-1][None, :]
    x2 = axis[1:-1][:, None]
    d1 = (v[1:-1, 2:] - v[1:-1, :-2]) * inv_2h
    d2 = (v[2:, 1:-1] - v[:-2, 1:-1]) * inv_2h
    out[1:-1, 1:-1] = (1j * omega) * (x1 * d2 - x2 * d1)
    return out


def gradient_apply(v, inv_2h, out1=None, out2=None):
    """Centered first differences (d1 along axis 1, d2 along axis 0)."""
    if out1 is None:
        out1 = np.zeros_like(v)
    if out2 is None:
        out2 = np.zeros_like(v)
    for o in (out1, out2):
        o[0, :] = 0.0
        o[-1, :] = 0.0
        o[:, 0] = 0.0
        o[:, -1] = 0.0
    out1[1:-1, 1:-1] = (v[1:-1, 2:] - v[1:-1, :-2]) * inv_2h
    out2[1:-1, 1:-1] = (v[2:, 1:-1] - v[:-2, 1:-1]) * inv_2h
    return out1, out2


def _shifted_matvec(x, kappa, out):
    out[1:-1, 1:-1] = (1.0 + 4.0 * kappa) * x[1:-1, 1:-1] - kappa * (
        x[:-2, 1:-1] + x[2:, 1:-1] + x[1:-1, :-2] + x[1:-1, 2:]
    )
    return out


def cg_shifted_laplacian(b, x0, kappa, tol, maxiter):
    """Solve (I - dt*Lap_h) x = b with CG, kappa = dt/h^2.

    The operator acts on interior nodes with zero Dirichlet boundary.
    Complex right-hand sides are handled as two independent real systems
    sharing the iteration (real part of the inner products).

    Returns (x, iterations, relative_residual).
    """
    x = x0.copy()
    x[0, :] = 0.0
    x[-1, :] = 0.0
    x[:, 0] = 0.0
    x[:, -1] = 0.0
    ax = np.zeros_like(b)
    _shifted_matvec(x, kappa, ax)
    r = b - ax
    r[0, :] = 0.0
    r[-1, :] = 0.0
    r[:, 0] = 0.0
    r[:, -1] = 0.0
    d = r.copy()
    ad = np.zeros_like(b)
    b_norm2 = float(np.real(np.vdot(b, b)))
    if b_norm2 == 0.0:
        return np.zeros_like(b), 0, 0.0
    rs = float(np.real(np.vdot(r, r)))
    stop2 = tol * tol * b_norm2
    it = 0
    while rs > stop2 and it < maxiter:
        _shifted_matvec(d, kappa, ad)
        alpha = rs / float(np.real(np.vdot(d, ad)))
        x += alpha * d
        r -= alpha * ad
        rs_new = float(np.real(np.vdot(r, r)))
        d *= rs_new / rs
        d += r
        rs = rs_new
        it += 1
    return x, it, np.sqrt(rs / b_norm2)


def shoot_radial(p, w0, h, n_steps):
    """RK4 integration of w'' + w'/r - w + |w|^(p-1) w = 0, w(0)=w0, w'(0)=0.

    The nonlinearity uses the odd extension sign(w)|w|^p so overshooting
    trajectories stay integrable after crossing zero.  Integration stops
    early on classification events:

      status 1: w crossed zero (overshoot, w0 too large),
      status 2: w' turned positive while w > 0 (undershoot, w0 too small),
      status 0: ran to r_max without either event.

    Returns (w, dw, status, stop) where w, dw hold the trajectory up to
    and including index stop.
    """
    w = np.zeros(n_steps + 1)
    dw = np.zeros(n_steps + 1)
    w[0] = w0
    y0, y1 = w0, 0.0
    status = 0
    stop = n_steps
    for k in range(n_steps):
        r = k * h
        k1a, k1b = _rhs(r, y0, y1, p)
        k2a, k2b = _rhs(r + 0.5 * h, y0 + 0.5 * h * k1a, y1 + 0.5 * h * k1b, p)
        k3a, k3b = _rhs(r + 0.5 * h, y0 + 0.5 * h * k2a, y1 + 0.5 * h * k2b, p)
        k4a, k4b = _rhs(r + h, y0 + h * k3a, y1 + h * k3b, p)
        y0 = y0 + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        y1 = y1 + (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        w[k + 1] = y0
        dw[k + 1] = y1
        if y0 <= 0.0:
            status, stop = 1, k + 1
            break
        if y1 > 0.0:
            status, stop = 2, k + 1
            break
    return w, dw, status, stop


def _rhs(r, y0, y1, p):
    # sign(w)|w|^p keeps the vector field smooth through w = 0
    f = abs(y0) ** p if y0 >= 0.0 else -(abs(y0) ** p)
    if r < 1e-12:
        # series limit: w'' -> (w - w^p)/2 at the origin
        return y1, 0.5 * (y0 - f)
    return y1, y0 - f - y1 / r

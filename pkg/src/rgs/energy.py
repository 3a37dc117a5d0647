"""Gross-Pitaevskii energy, multiplier and Euler-Lagrange residual.

The energy of a normalized state u at interaction strength rho and trap
rotation Omega is

    E(u) = int |grad u|^2 + V |u|^2
         - (2 rho^{p-1}/(p+1)) int |u|^{p+1}
         - Omega int x_perp . (iu, grad u),

with momentum density (iu, grad u) = Im(conj(u) grad u).  Critical
points satisfy

    -Lap u + V u + i Omega (x_perp . grad u) = mu u + rho^{p-1}|u|^{p-1} u,
    mu = E(u) - (p-1)/(p+1) rho^{p-1} int |u|^{p+1}.

All gradients are centered second order.  The diamagnetic identity

    |grad u|^2 - Omega x_perp.(iu, grad u) + (Omega^2/4)|x|^2|u|^2
        = |(grad - iA)u|^2,   A = (Omega/2) x_perp,

holds exactly node by node for the centered stencil; the lower bound
|(grad - iA)u|^2 >= |grad |u||^2 only up to stencil error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ComplexField, GridSpec, RealField, gradient, laplacian, rotation_term

_AMP_FLOOR = 1e-30


class NonFiniteEnergyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    potential: float
    interaction: float
    momentum: float
    rho: float
    omega: float
    p: float

    @property
    def total(self) -> float:
        return self.kinetic + self.potential - self.interaction - self.momentum


def _potential_on_grid(v, grid: GridSpec) -> np.ndarray:
    if isinstance(v, np.ndarray):
        return v
    if isinstance(v, RealField):
        return v.values
    return v.on_grid(grid)


def amplitude_power(values: np.ndarray, q: float) -> np.ndarray:
    """|u|^q with amplitudes below 1e-30 flushed to zero (q is real)."""
    amp = np.abs(values)
    amp[amp < _AMP_FLOOR] = 0.0
    return amp**q


def gp_energy(u: ComplexField, v, omega: float, rho: float, p: float) -> EnergyBreakdown:
    """Energy breakdown by grid quadrature; raises on non-finite parts."""
    if not 1.0 < p < 3.0:
        raise ValueError(f"exponent p must lie in (1, 3), got {p}")
    if rho <= 0 or omega < 0:
        raise ValueError("need rho > 0 and Omega >= 0")
    g = u.grid
    h2 = g.spacing ** 2
    vals = u.values
    g1, g2 = gradient(vals, g)
    kinetic = h2 * float(np.sum(np.abs(g1) ** 2 + np.abs(g2) ** 2))
    vgrid = _potential_on_grid(v, g)
    amp2 = np.abs(vals) ** 2
    potential = h2 * float(np.sum(vgrid * amp2))
    interaction = (2.0 * rho ** (p - 1.0) / (p + 1.0)) * h2 * float(
        np.sum(amplitude_power(vals, p + 1.0))
    )
    momentum = omega * h2 * float(np.sum(_momentum_density(vals, g, g1, g2)))
    parts = EnergyBreakdown(kinetic, potential, interaction, momentum, rho, omega, p)
    if not np.isfinite(parts.total):
        raise NonFiniteEnergyError("non-finite energy")
    return parts


def _momentum_density(vals: np.ndarray, grid: GridSpec, g1=None, g2=None) -> np.ndarray:
    """x_perp . Im(conj(u) grad u) = -x2 Im(conj(u) d1 u) + x1 Im(conj(u) d2 u)."""
    if g1 is None:
        g1, g2 = gradient(vals, grid)
    x1, x2 = grid.coords()
    cu = np.conj(vals)
    return -x2 * np.imag(cu * g1) + x1 * np.imag(cu * g2)


def momentum_term(u: ComplexField, omega: float) -> float:
    g = u.grid
    return float(omega * g.spacing**2 * np.sum(_momentum_density(u.values, g)))


def hat_energy(v: RealField | ComplexField, rho: float, p: float) -> float:
    """Reduced energy int |grad v|^2 - (2 rho^{p-1}/(p+1)) int |v|^{p+1}."""
    g = v.grid
    h2 = g.spacing ** 2
    vals = np.asarray(v.values)
    g1, g2 = gradient(vals.astype(np.complex128, copy=False), g)
    kin = h2 * float(np.sum(np.abs(g1) ** 2 + np.abs(g2) ** 2))
    inter = (2.0 * rho ** (p - 1.0) / (p + 1.0)) * h2 * float(
        np.sum(amplitude_power(vals, p + 1.0))
    )
    return kin - inter


def lagrange_multiplier(u: ComplexField, energy_total: float, rho: float, p: float) -> float:
    """mu = E - (p-1)/(p+1) rho^{p-1} int |u|^{p+1}."""
    h2 = u.grid.spacing ** 2
    power = h2 * float(np.sum(amplitude_power(u.values, p + 1.0)))
    return energy_total - (p - 1.0) / (p + 1.0) * rho ** (p - 1.0) * power


def el_residual(u: ComplexField, mu: float, v, omega: float, rho: float, p: float) -> float:
    """|| -Lap u + V u + i Omega (x_perp.grad u) - mu u - rho^{p-1}|u|^{p-1}u ||_2
    relative to ||Lap u||_2."""
    g = u.grid
    vgrid = _potential_on_grid(v, g)
    lap = laplacian(u).values
    r = -lap + (vgrid - mu) * u.values - rho ** (p - 1.0) * amplitude_power(u.values, p - 1.0) * u.values
    if omega > 0:
        r = r + rotation_term(u, omega).values
    num = float(np.sqrt(np.real(np.vdot(r, r))))
    den = float(np.sqrt(np.real(np.vdot(lap, lap))))
    if den == 0.0:
        return np.inf
    return num / den


def diamagnetic_check(u: ComplexField, omega: float) -> dict:
    """Nodewise diamagnetic identity and inequality report.

    Returns max_identity_error for
        |grad u|^2 - Omega x_perp.(iu,grad u) + (Omega^2/4)|x|^2|u|^2
            == |(grad - iA)u|^2
    and max_violation of ... >= |grad |u||^2 (expected within stencil
    error, tolerance ~ 10 h^2 times the local field scale).
    """
    g = u.grid
    vals = u.values
    g1, g2 = gradient(vals, g)
    x1, x2 = g.coords()
    amp2 = np.abs(vals) ** 2
    lhs = (np.abs(g1) ** 2 + np.abs(g2) ** 2
           - omega * _momentum_density(vals, g, g1, g2)
           + 0.25 * omega**2 * (x1**2 + x2**2) * amp2)
    a1 = -0.5 * omega * x2
    a2 = 0.5 * omega * x1
    cov = np.abs(g1 - 1j * a1 * vals) ** 2 + np.abs(g2 - 1j * a2 * vals) ** 2
    identity_err = float(np.max(np.abs(lhs - cov)))
    m1, m2 = gradient(np.abs(vals).astype(np.complex128), g)
    grad_amp2 = np.abs(m1) ** 2 + np.abs(m2) ** 2
    violation = float(np.max(grad_amp2 - lhs))
    return {"max_identity_error": identity_err, "max_violation": max(violation, 0.0)}


# -- discrete functional used by the flow ----------------------------------
#
# The descent loop monitors the quadratic form of the 5-point Laplacian,
# Re<-Lap_h u, u>, instead of the centered-gradient kinetic term: that is
# the exact discrete energy whose constrained critical points are the
# fixed points of the semi-implicit step, so accepted-step monotonicity
# is meaningful down to round-off.  The reported EnergyBreakdown keeps
# the centered-gradient convention; the two differ by O(h^2).

def flow_energy(vals: np.ndarray, grid: GridSpec, vgrid: np.ndarray,
                omega: float, rho: float, p: float, lap=None) -> float:
    from . import kernels

    h = grid.spacing
    h2 = h * h
    if lap is None:
        lap = kernels.laplacian_apply(vals, 1.0 / h2)
    kin = -float(np.real(np.vdot(lap, vals)))
    pot = float(np.sum(vgrid * (vals.real**2 + vals.imag**2)))
    inter = (2.0 * rho ** (p - 1.0) / (p + 1.0)) * float(np.sum(amplitude_power(vals, p + 1.0)))
    mom = 0.0
    if omega > 0:
        rot = kernels.rotation_apply(vals, np.asarray(grid.axis), omega, 0.5 / h)
        # Omega int x_perp.(iu, grad u) = -Re <i Omega x_perp.grad u, u>
        mom = -float(np.real(np.vdot(rot, vals)))
    return h2 * (kin + pot - inter - mom)

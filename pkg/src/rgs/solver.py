"""Constrained minimization of the rotational GP energy.

Normalized gradient flow with semi-implicit splitting: the diffusion
term is implicit (unconditional stability for the stiffest part), the
potential, rotation and interaction terms explicit,

    (1 - dt Lap_h) u* = u + dt [ mu_hat u - V u - i Omega (x_perp.grad u)
                                 + rho^{p-1} |u|^{p-1} u ],

followed by projection back to the unit L2 sphere.  The inner solve is
CG on the shifted Laplacian (SPD), warm-started from the iterate.  The
multiplier estimate mu_hat is recomputed from the energy each step so
the fixed point satisfies the discrete Euler-Lagrange equation exactly.

Step control: a step that raises the (discrete) energy is rejected and
dt halved; after 20 consecutive accepted steps dt recovers by x1.2 up
to its configured value.  Convergence requires both energy stagnation
over a window and an Euler-Lagrange residual below tolerance; energy
alone can stagnate on plateaus.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .energy import (
    EnergyBreakdown,
    amplitude_power,
    el_residual,
    flow_energy,
    gp_energy,
    lagrange_multiplier,
)
from .grid import ComplexField, GridSpec, l2_norm, zero_boundary
from .potentials import EffectivePotential, PotentialSpec, omega_star
from .radial import RadialProfile


class InnerSolverStalledError(RuntimeError):
    pass


class EnergyUnboundedError(RuntimeError):
    pass


class GridTooSmallError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    grid: GridSpec
    dt: float = 0.05
    max_iter: int = 20000
    tol_energy: float = 1e-11
    tol_residual: float = 1e-6
    init: str = "gaussian"
    init_eps: float | None = None
    seed: int = 0
    backtrack: float = 0.5
    recover_after: int = 20
    stall_window: int = 50
    cg_tol: float = 1e-10
    cg_maxiter: int = 500

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.tol_energy <= 0 or self.tol_residual <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class GroundState:
    u: ComplexField
    energy: EnergyBreakdown
    flow_total: float
    mu: float
    residual: float
    iterations: int
    converged: bool
    history: np.ndarray  # (k, 2) columns: flow energy, EL residual
    meta: dict = field(default_factory=dict, compare=False, repr=False)


def initial_guess(kind: str, grid: GridSpec, profile: RadialProfile | None = None,
                  eps: float | None = None, seed: int = 0) -> ComplexField:
    """Normalized starting field: gaussian, rescaled_w, vortex or random."""
    x1, x2 = grid.coords()
    r2 = x1**2 + x2**2
    if kind == "gaussian":
        vals = np.exp(-0.5 * r2).astype(np.complex128)
    elif kind == "rescaled_w":
        if profile is None or eps is None:
            raise ValueError("rescaled_w initial guess needs a profile and eps")
        rr = np.sqrt(r2) / eps
        vals = (np.interp(rr, profile.r, profile.values, right=0.0)
                / (eps * np.sqrt(profile.a_star))).astype(np.complex128)
    elif kind == "vortex":
        vals = np.exp(-0.5 * r2) * np.exp(1j * np.arctan2(x2, x1))
    elif kind == "random":
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(r2.shape) + 1j * rng.standard_normal(r2.shape)
        vals = np.exp(-0.5 * r2) * (1.0 + 0.1 * noise)
    else:
        raise ValueError(f"unknown initial guess kind {kind!r}")
    vals = zero_boundary(vals)
    n = l2_norm(vals, grid)
    if n == 0.0:
        raise ValueError("cannot normalize zero field")
    return ComplexField(grid, vals / n)


def _explicit_part(vals, grid, vgrid, omega, rho, p, mu_hat, rot_buf):
    f = (mu_hat - vgrid) * vals + rho ** (p - 1.0) * amplitude_power(vals, p - 1.0) * vals
    if omega > 0:
        h = grid.spacing
        kernels.rotation_apply(vals, np.asarray(grid.axis), omega, 0.5 / h, rot_buf)
        f -= rot_buf
    return f


def _mu_from_flow(vals, grid, e_flow, rho, p):
    h2 = grid.spacing ** 2
    power = h2 * float(np.sum(amplitude_power(vals, p + 1.0)))
    return e_flow - (p - 1.0) / (p + 1.0) * rho ** (p - 1.0) * power


def _el_residual_values(vals, grid, vgrid, omega, rho, p, mu, lap=None):
    h = grid.spacing
    if lap is None:
        lap = kernels.laplacian_apply(vals, 1.0 / (h * h))
    r = -lap + (vgrid - mu) * vals - rho ** (p - 1.0) * amplitude_power(vals, p - 1.0) * vals
    if omega > 0:
        r = r + kernels.rotation_apply(vals, np.asarray(grid.axis), omega, 0.5 / h)
    den = float(np.sqrt(np.real(np.vdot(lap, lap))))
    if den == 0.0:
        return np.inf
    return float(np.sqrt(np.real(np.vdot(r, r)))) / den


def flow_step(u: ComplexField, v, omega: float, rho: float, p: float, dt: float,
              mu_hat: float | None = None, cg_tol: float = 1e-10,
              cg_maxiter: int = 500) -> ComplexField:
    """One semi-implicit descent step followed by renormalization."""
    grid = u.grid
    vgrid = v if isinstance(v, np.ndarray) else v.on_grid(grid)
    vals = u.values
    if mu_hat is None:
        e = flow_energy(vals, grid, vgrid, omega, rho, p)
        mu_hat = _mu_from_flow(vals, grid, e, rho, p)
    rot_buf = np.zeros_like(vals)
    f = _explicit_part(vals, grid, vgrid, omega, rho, p, mu_hat, rot_buf)
    b = zero_boundary(vals + dt * f)
    h = grid.spacing
    new, _, rel = kernels.cg_shifted_laplacian(b, vals, dt / (h * h), cg_tol, cg_maxiter)
    if rel > cg_tol:
        raise InnerSolverStalledError(
            f"inner solver stalled: CG residual {rel:.2e} after {cg_maxiter} iterations"
        )
    n = l2_norm(new, grid)
    if n == 0.0:
        raise ValueError("cannot normalize zero field")
    return ComplexField(grid, new / n)


def _boundary_mass_fraction(vals, grid):
    n = grid.n
    band = max(2, n // 10)
    amp2 = vals.real**2 + vals.imag**2
    total = float(np.sum(amp2))
    if total == 0.0:
        return 0.0
    inner = float(np.sum(amp2[band:-band, band:-band]))
    return 1.0 - inner / total


def solve_ground_state(config: SolveConfig, v, omega: float, rho: float, p: float,
                       profile: RadialProfile | None = None,
                       u0: ComplexField | None = None) -> GroundState:
    """Iterate the flow until energy stagnation and EL residual targets.

    Raises EnergyUnboundedError when the iterate escapes toward the
    boundary or the energy dives below -1e12, the discrete signatures of
    a supercritical rotation speed (no minimizer exists).
    """
    grid = config.grid
    vgrid = v if isinstance(v, np.ndarray) else v.on_grid(grid)
    if u0 is None:
        u0 = initial_guess(config.init, grid, profile=profile,
                           eps=config.init_eps, seed=config.seed)
    vals = u0.values.copy()
    h = grid.spacing
    h2 = h * h
    inv_h2 = 1.0 / h2
    dt0 = config.dt
    dt = dt0
    rho_pm1 = rho ** (p - 1.0)
    coef_inter = 2.0 * rho_pm1 / (p + 1.0)
    axis = np.asarray(grid.axis)
    rot_buf = np.zeros_like(vals)

    def _assemble(cur, lap_cur):
        """Shared per-iterate quantities: energy, multiplier, explicit
        gradient part F and the EL residual || lap + F || / || lap ||
        (exact: the residual is -lap - F with the same multiplier)."""
        amp = np.abs(cur)
        amp[amp < 1e-30] = 0.0
        amp_pm1 = amp ** (p - 1.0)
        power = h2 * float(np.sum(amp_pm1 * amp * amp))  # int |u|^{p+1}
        kin = -h2 * float(np.real(np.vdot(lap_cur, cur)))
        pot = h2 * float(np.sum(vgrid * (cur.real**2 + cur.imag**2)))
        mom = 0.0
        if omega > 0:
            kernels.rotation_apply(cur, axis, omega, 0.5 / h, rot_buf)
            mom = -h2 * float(np.real(np.vdot(rot_buf, cur)))
        e_cur = kin + pot - coef_inter * power - mom
        mu_cur = e_cur - (p - 1.0) / (p + 1.0) * rho_pm1 * power
        f = (mu_cur - vgrid) * cur + rho_pm1 * amp_pm1 * cur
        if omega > 0:
            f -= rot_buf
        r = lap_cur + f
        den = float(np.sqrt(np.real(np.vdot(lap_cur, lap_cur))))
        res_cur = float(np.sqrt(np.real(np.vdot(r, r)))) / den if den else np.inf
        return e_cur, mu_cur, f, res_cur

    lap = kernels.laplacian_apply(vals, inv_h2)
    e, mu, f, res = _assemble(vals, lap)
    history = [(e, res)]
    accepted_streak = 0
    converged = False
    iterations = 0

    for it in range(1, config.max_iter + 1):
        iterations = it
        b = zero_boundary(vals + dt * f)
        cg_tol = max(config.cg_tol, min(1e-4, 1e-3 * res))
        new, _, rel = kernels.cg_shifted_laplacian(b, vals, dt * inv_h2,
                                                   cg_tol, config.cg_maxiter)
        if rel > cg_tol * 1.01:
            raise InnerSolverStalledError(
                f"inner solver stalled: CG residual {rel:.2e} "
                f"after {config.cg_maxiter} iterations"
            )
        nrm = l2_norm(new, grid)
        if nrm == 0.0 or not np.isfinite(nrm):
            raise EnergyUnboundedError("energy unbounded (Omega >= Omega*?)")
        new /= nrm
        lap_new = kernels.laplacian_apply(new, inv_h2)
        e_new, mu_new, f_new, res_new = _assemble(new, lap_new)
        if e_new <= e:
            vals, lap, e, mu, f, res = new, lap_new, e_new, mu_new, f_new, res_new
            accepted_streak += 1
            if accepted_streak % config.recover_after == 0:
                dt = min(dt * 1.2, dt0)
        else:
            accepted_streak = 0
            dt *= config.backtrack
        history.append((e, res))

        if it % 50 == 0 or it == config.max_iter:
            if e < -1e12 or _boundary_mass_fraction(vals, grid) > 0.25:
                raise EnergyUnboundedError("energy unbounded (Omega >= Omega*?)")

        if it >= config.stall_window:
            e_then = history[-1 - config.stall_window][0]
            stalled = abs(e - e_then) <= config.tol_energy * max(abs(e), 1e-30)
            if stalled and res < config.tol_residual:
                converged = True
                break
        if dt < 1e-8 * dt0:
            break

    u = ComplexField(grid, vals)
    breakdown = gp_energy(u, vgrid, omega, rho, p)
    return GroundState(
        u=u,
        energy=breakdown,
        flow_total=e,
        mu=mu,
        residual=res,
        iterations=iterations,
        converged=converged,
        history=np.asarray(history),
        meta={"init": config.init, "seed": config.seed, "dt_final": dt},
    )


# ---------------------------------------------------------------------------
# phase alignment

@dataclass(frozen=True)
class PhaseAlignment:
    theta: float
    aligned: ComplexField
    distance: float
    gauge_undetermined: bool = False


def phase_align(u: ComplexField, ref: ComplexField) -> PhaseAlignment:
    """Constant phase minimizing ||e^{i theta} u - ref||_2.

    theta = arg(int ref conj(u)); when the overlap vanishes the gauge is
    undetermined and theta := 0 is flagged.  For real ref the aligned
    imaginary part is L2-orthogonal to ref.
    """
    g = u.grid
    h2 = g.spacing ** 2
    ref_l2 = l2_norm(ref.values, g)
    if ref_l2 == 0.0:
        raise ValueError("phase_align needs a nonzero reference")
    overlap = complex(h2 * np.sum(ref.values * np.conj(u.values)))
    u_l2 = l2_norm(u.values, g)
    undetermined = abs(overlap) < 1e-12 * u_l2 * ref_l2
    theta = 0.0 if undetermined else float(np.angle(overlap))
    aligned_vals = np.exp(1j * theta) * u.values
    dist = float(np.sqrt(h2 * np.sum(np.abs(aligned_vals - ref.values) ** 2)))
    return PhaseAlignment(theta, ComplexField(g, aligned_vals), dist, undetermined)


# ---------------------------------------------------------------------------
# nonexistence probe above the critical speed

def _cutoff(r: np.ndarray) -> np.ndarray:
    """Smooth bump: 1 on r <= 1, 0 on r >= 2, C^inf bridge between."""
    out = np.zeros_like(r)
    out[r <= 1.0] = 1.0
    mid = (r > 1.0) & (r < 2.0)
    t = r[mid] - 1.0
    f = np.exp(-1.0 / t)
    g = np.exp(-1.0 / (1.0 - t))
    out[mid] = g / (f + g)
    return out


@dataclass(frozen=True)
class ProbeRow:
    tau: float
    x_tau: tuple
    energy: float


def trial_state(profile: RadialProfile, grid: GridSpec, tau: float, x_tau,
                omega: float) -> ComplexField:
    """Concentration trial: normalized tau w(tau(x - x_tau)) cutoff bump
    with the drift phase exp(i Omega x.x_tau_perp / 2)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    x1, x2 = grid.coords()
    d1 = x1 - x_tau[0]
    d2 = x2 - x_tau[1]
    rr = np.hypot(d1, d2)
    amp = np.interp(tau * rr, profile.r, profile.values, right=0.0) * _cutoff(rr)
    phase = 0.5 * omega * (x1 * (-x_tau[1]) + x2 * x_tau[0])
    vals = zero_boundary(amp * np.exp(1j * phase))
    n = l2_norm(vals, grid)
    if n == 0.0:
        raise GridTooSmallError("grid too small for probe")
    return ComplexField(grid, vals / n)


def nonexistence_probe(v: PotentialSpec, omega: float, rho: float, p: float,
                       profile: RadialProfile, taus, grid: GridSpec) -> list[ProbeRow]:
    """Trial energies E(w_tau) for increasing tau.

    Above the critical speed the centers x_tau ride out along the ray
    where the effective potential drops fastest, pushing the energy to
    -infinity; below it the probe is one-sided and only records the
    (bounded) energies with x_tau = 0.
    """
    eff = EffectivePotential(v, omega)
    threshold_scale = (2.0 * (p - 1.0) / (p + 1.0)
                       * profile.power_integral() / profile.mass_integral())
    supercritical = omega > omega_star(v).value
    ang = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    rows = []
    for tau in taus:
        if tau <= 0:
            raise ValueError("tau must be positive")
        x_tau = (0.0, 0.0)
        if supercritical:
            target = -threshold_scale * tau * tau
            found = None
            radii = np.linspace(0.0, grid.half_width, 512)
            for d in dirs:
                vals = eff(radii * d[0], radii * d[1])
                ok = np.nonzero(np.asarray(vals) <= target)[0]
                if ok.size:
                    r0 = radii[ok[0]]
                    cand = (r0 * d[0], r0 * d[1])
                    if max(abs(cand[0]), abs(cand[1])) + 2.0 <= grid.half_width:
                        if found is None or r0 < found[0]:
                            found = (r0, cand)
            if found is None:
                raise GridTooSmallError("grid too small for probe")
            x_tau = found[1]
        w_tau = trial_state(profile, grid, tau, x_tau, omega)
        e = gp_energy(w_tau, v, omega, rho, p).total
        rows.append(ProbeRow(float(tau), (float(x_tau[0]), float(x_tau[1])), float(e)))
    return rows

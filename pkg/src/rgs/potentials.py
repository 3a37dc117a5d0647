"""Trapping potentials, the effective potential and the critical speed.

A trap V confines the rotating problem only while the effective
potential V_Omega(x) = V(x) - (Omega^2/4)|x|^2 still grows at infinity;
the critical speed Omega* is the supremum of speeds for which it does.

Near the origin the analysis is governed by the homogeneous core h of
V_Omega (degree s, h(tx) = t^s h(x)) through the concentration
functional

    H(y) = int h(x + y) w^2(x) dx,

whose unique minimum y0 locates the blow-up point; non-degeneracy of y0
is the 2x2 determinant det( int d_j h(x+y0) d_l w^2(x) dx ) != 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize as _nm_minimize

from .grid import GridSpec, integrate_values
from .radial import RadialProfile, sample_to_grid

_HOMOGENEITY_TOL = 1e-10
_STAR_DIRECTIONS = 16


class PotentialError(ValueError):
    pass


def _homogeneity_defect(fn: Callable, s: float) -> float:
    """Max relative defect of fn(t x) = t^s fn(x) on a direction star."""
    ang = np.linspace(0.0, 2.0 * np.pi, _STAR_DIRECTIONS, endpoint=False)
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    worst = 0.0
    for t in (0.5, 2.0, 3.0):
        base = np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=float)
        scaled = np.asarray(fn(t * pts[:, 0], t * pts[:, 1]), dtype=float)
        ref = np.maximum(np.abs(scaled), 1e-300)
        worst = max(worst, float(np.max(np.abs(scaled - t**s * base) / ref)))
    return worst


@dataclass(frozen=True)
class PotentialSpec:
    """Declarative trap description.

    kinds:
      harmonic          V = a |x|^2,                coefficients (a,)
      anisotropic       V = a1 x1^2 + a2 x2^2,      coefficients (a1, a2)
      homogeneous_plus  V = c1|x1|^s + c2|x2|^s + c_rem |x|^4,
                        coefficients (c1, c2, c_rem), degree 1 < s <= 2
      custom            core callable fn(x1, x2), declared degree s
    """

    kind: str
    coefficients: tuple
    s: float
    core_fn: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.kind not in ("harmonic", "anisotropic", "homogeneous_plus", "custom"):
            raise PotentialError(f"unknown potential kind {self.kind!r}")
        if self.kind == "harmonic":
            (a,) = self.coefficients
            if a < 0:
                raise PotentialError("harmonic coefficient must be nonnegative")
        elif self.kind == "anisotropic":
            a1, a2 = self.coefficients
            if a1 < 0 or a2 < 0:
                raise PotentialError("anisotropic coefficients must be nonnegative")
        elif self.kind == "homogeneous_plus":
            c1, c2, c_rem = self.coefficients
            if min(c1, c2, c_rem) < 0:
                raise PotentialError("homogeneous_plus coefficients must be nonnegative")
            if not (1.0 < self.s <= 2.0):
                raise PotentialError(f"core degree s must lie in (1, 2], got {self.s}")
        if self.kind == "custom" and self.core_fn is None:
            raise PotentialError("custom potential needs a core callable")
        defect = _homogeneity_defect(self._core, self.s)
        if defect > _HOMOGENEITY_TOL:
            raise PotentialError(
                f"core is not homogeneous of degree {self.s}: defect {defect:.2e}"
            )

    @classmethod
    def harmonic(cls, a: float = 1.0) -> "PotentialSpec":
        return cls("harmonic", (a,), 2.0)

    @classmethod
    def anisotropic(cls, a1: float, a2: float) -> "PotentialSpec":
        return cls("anisotropic", (a1, a2), 2.0)

    @classmethod
    def homogeneous_plus(cls, c1: float, c2: float, s: float,
                         c_rem: float = 0.0) -> "PotentialSpec":
        return cls("homogeneous_plus", (c1, c2, c_rem), s)

    @classmethod
    def custom_core(cls, fn: Callable, s: float) -> "PotentialSpec":
        return cls("custom", (), s, core_fn=fn)

    # the homogeneous part (for harmonic/anisotropic this is V itself)
    def _core(self, x1, x2):
        if self.kind == "harmonic":
            return self.coefficients[0] * (x1 * x1 + x2 * x2)
        if self.kind == "anisotropic":
            a1, a2 = self.coefficients
            return a1 * x1 * x1 + a2 * x2 * x2
        if self.kind == "homogeneous_plus":
            c1, c2, _ = self.coefficients
            return c1 * np.abs(x1) ** self.s + c2 * np.abs(x2) ** self.s
        return self.core_fn(x1, x2)

    def core(self, x1, x2):
        return self._core(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        v = self._core(x1, x2)
        if self.kind == "homogeneous_plus":
            c_rem = self.coefficients[2]
            if c_rem:
                v = v + c_rem * (x1 * x1 + x2 * x2) ** 2
        return v

    def on_grid(self, grid: GridSpec) -> np.ndarray:
        x1, x2 = grid.coords()
        v = np.broadcast_to(np.asarray(self(x1, x2), dtype=float), x1.shape)
        if np.any(v < 0):
            raise PotentialError("potential must be nonnegative on the grid")
        return np.ascontiguousarray(v)


@dataclass(frozen=True)
class EffectivePotential:
    """V_Omega(x) = V(x) - (Omega^2/4)|x|^2."""

    base: PotentialSpec
    omega: float

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return self.base(x1, x2) - 0.25 * self.omega**2 * (x1 * x1 + x2 * x2)

    def on_grid(self, grid: GridSpec) -> np.ndarray:
        x1, x2 = grid.coords()
        return np.ascontiguousarray(np.asarray(self(x1, x2), dtype=float))


def eval_potential(v: PotentialSpec | EffectivePotential, x) -> float:
    """Pointwise value at x = (x1, x2)."""
    return float(v(x[0], x[1]))


@dataclass(frozen=True)
class OmegaStar:
    value: float
    estimated: bool


def omega_star(v: PotentialSpec) -> OmegaStar:
    """Critical rotation speed 2 sqrt(c) where c is the quadratic growth
    coefficient along the slowest ray.

    Closed form for harmonic and anisotropic traps; for other kinds c is
    estimated by directional sampling of V(R theta)/R^2 at large R and
    the result carries estimated=True.
    """
    if v.kind == "harmonic":
        return OmegaStar(2.0 * np.sqrt(v.coefficients[0]), False)
    if v.kind == "anisotropic":
        return OmegaStar(2.0 * np.sqrt(min(v.coefficients)), False)
    ang = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    cos, sin = np.cos(ang), np.sin(ang)
    ratios = []
    for radius in (16.0, 32.0, 64.0):
        vals = np.asarray(v(radius * cos, radius * sin), dtype=float)
        ratios.append(float(np.min(vals)) / radius**2)
    if ratios[-1] <= 1e-6 and ratios[-1] < 0.5 * ratios[0]:
        raise PotentialError(
            "critical speed undefined: potential grows subquadratically along some ray"
        )
    return OmegaStar(2.0 * np.sqrt(ratios[-1]), True)


# ---------------------------------------------------------------------------
# concentration functional H(y) = int h(x+y) w^2(x) dx

class _CoreQuadrature:
    """Shared w^2 samples for H evaluations on a common grid."""

    def __init__(self, profile: RadialProfile, half_width: float | None = None, n: int = 384):
        half_width = max(12.0, profile.r_max) if half_width is None else half_width
        self.grid = GridSpec(half_width, n)
        self.w2 = sample_to_grid(profile, self.grid).values ** 2
        self.x1, self.x2 = self.grid.coords()
        self.h2 = self.grid.spacing ** 2

    def h_at(self, core: Callable, y) -> float:
        vals = core(self.x1 + y[0], self.x2 + y[1])
        return float(self.h2 * np.sum(vals * self.w2))


def h_functional(core: PotentialSpec, profile: RadialProfile, y) -> float:
    """H(y) by rectangle-rule quadrature against w^2."""
    quad = _CoreQuadrature(profile)
    return quad.h_at(core.core, np.asarray(y, dtype=float))


def minimize_h(core: PotentialSpec, profile: RadialProfile) -> dict:
    """Global minimum of H from a 3x3 grid of Nelder-Mead starts.

    Raises when two starts settle on distinct points with equal values:
    the minimum is then not unique at tolerance.
    """
    quad = _CoreQuadrature(profile)
    fn = lambda y: quad.h_at(core.core, y)
    best = []
    for sy in (-2.0, 0.0, 2.0):
        for sx in (-2.0, 0.0, 2.0):
            res = _nm_minimize(fn, np.array([sx, sy]), method="Nelder-Mead",
                               options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 400})
            best.append((float(res.fun), np.asarray(res.x)))
    best.sort(key=lambda t: t[0])
    f0, y0 = best[0]
    for f1, y1 in best[1:]:
        if abs(f1 - f0) <= 1e-8 * max(1.0, abs(f0)) and np.linalg.norm(y1 - y0) > 1e-3:
            raise PotentialError("minimum not unique at tolerance")
    gnorm = np.hypot(fn(y0 + [1e-6, 0]) - fn(y0 - [1e-6, 0]),
                     fn(y0 + [0, 1e-6]) - fn(y0 - [0, 1e-6])) / 2e-6
    if gnorm > 1e-6 * max(1.0, abs(f0)):
        raise PotentialError(f"minimization stalled, gradient norm {gnorm:.2e}")
    return {"y0": y0, "value": f0}


def nondegeneracy(core: PotentialSpec, profile: RadialProfile, y0) -> dict:
    """2x2 matrix M_jl = int d_j h(x+y0) d_l w^2(x) dx and its determinant.

    d_j h by centered finite differences with step 1e-4 (1+|x|), d_l w^2
    by the grid stencil.  Flags degenerate when |det| < 1e-8 |M|^2.
    """
    quad = _CoreQuadrature(profile)
    x1 = quad.x1 + y0[0]
    x2 = quad.x2 + y0[1]
    h2 = quad.h2
    step = 1e-4 * (1.0 + np.hypot(x1, x2))
    dh = [
        (core.core(x1 + step, x2) - core.core(x1 - step, x2)) / (2.0 * step),
        (core.core(x1, x2 + step) - core.core(x1, x2 - step)) / (2.0 * step),
    ]
    sp = quad.grid.spacing
    dw2 = [np.zeros_like(quad.w2), np.zeros_like(quad.w2)]
    dw2[0][1:-1, 1:-1] = (quad.w2[1:-1, 2:] - quad.w2[1:-1, :-2]) / (2.0 * sp)
    dw2[1][1:-1, 1:-1] = (quad.w2[2:, 1:-1] - quad.w2[:-2, 1:-1]) / (2.0 * sp)
    m = np.array([[float(h2 * np.sum(dh[j] * dw2[l])) for l in (0, 1)] for j in (0, 1)])
    det = float(np.linalg.det(m))
    norm2 = float(np.sum(m * m))
    return {"matrix": m, "det": det, "degenerate": abs(det) < 1e-8 * norm2}


def check_core_expansion(v: PotentialSpec, omega: float,
                         radii=(1e-1, 1e-2, 1e-3)) -> list[float]:
    """Sampled remainder ratios |V_Omega - h| / |x|^s near the origin.

    The core hypothesis requires the remainder to vanish faster than
    |x|^s as x -> 0; returns max-over-directions ratios at the given
    radii (largest first) so callers can check the trend toward zero.
    """
    eff = EffectivePotential(v, omega)
    ang = np.linspace(0.0, 2.0 * np.pi, _STAR_DIRECTIONS, endpoint=False)
    out = []
    for r in radii:
        x1, x2 = r * np.cos(ang), r * np.sin(ang)
        rem = np.abs(np.asarray(eff(x1, x2)) - np.asarray(v.core(x1, x2)))
        out.append(float(np.max(rem)) / r**v.s)
    return out

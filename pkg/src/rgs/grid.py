"""Uniform square grid, complex/real fields and the discrete operators.

The domain is [-L, L]^2 truncated with homogeneous Dirichlet data, node
coordinates x_i = -L + i*h with h = 2L/(n-1).  Arrays are (n, n) with
axis 0 the x2 direction and axis 1 the x1 direction, so a row-major dump
walks x1 fastest.

Operators are second order:
    laplacian      (f_E + f_W + f_N + f_S - 4 f)/h^2     (5-point)
    rotation_term  i*Omega*(x_perp . grad f), x_perp = (-x2, x1), centered
    gradient       centered first differences
Quadrature is the rectangle rule h^2 * sum(f); for smooth fields that
decay below round-off at the boundary this is spectrally accurate.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels

FIELD_MAGIC = b"RGS1"
REAL_MAGIC = b"RGR1"


@dataclass(frozen=True)
class GridSpec:
    """Square grid on [-L, L]^2 with n points per axis."""

    half_width: float
    n: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"grid half_width must be positive, got {self.half_width}")
        if self.n < 16:
            raise ValueError(f"grid needs n >= 16 points per axis, got {self.n}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def axis(self) -> np.ndarray:
        return _axis(self.half_width, self.n)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(X1, X2) coordinate arrays, shape (n, n)."""
        return _coords(self.half_width, self.n)

    def radius_sq(self) -> np.ndarray:
        return _radius_sq(self.half_width, self.n)


@lru_cache(maxsize=32)
def _axis(half_width, n):
    a = np.linspace(-half_width, half_width, n)
    a.flags.writeable = False
    return a


@lru_cache(maxsize=32)
def _coords(half_width, n):
    a = _axis(half_width, n)
    x1, x2 = np.meshgrid(a, a, indexing="xy")
    x1.flags.writeable = False
    x2.flags.writeable = False
    return x1, x2


@lru_cache(maxsize=32)
def _radius_sq(half_width, n):
    x1, x2 = _coords(half_width, n)
    r2 = x1 * x1 + x2 * x2
    r2.flags.writeable = False
    return r2


def _check_values(grid: GridSpec, values: np.ndarray, dtype) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=dtype)
    if values.shape != (grid.n, grid.n):
        raise ValueError(
            f"field shape {values.shape} does not match grid ({grid.n}, {grid.n})"
        )
    if not np.all(np.isfinite(values.view(np.float64))):
        raise ValueError("field values must be finite")
    return values


@dataclass(frozen=True)
class ComplexField:
    """Complex amplitude per node.  Treated as an immutable value."""

    grid: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values, np.complex128))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ComplexField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    def with_values(self, values: np.ndarray, **meta) -> "ComplexField":
        return ComplexField(self.grid, values, meta=meta or dict(self.meta))


@dataclass(frozen=True)
class RealField:
    """Real value per node (densities, potentials, |u| samples)."""

    grid: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values, np.float64))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "RealField":
        return cls(grid, np.zeros((grid.n, grid.n)))


def zero_boundary(values: np.ndarray) -> np.ndarray:
    """Return a copy with the Dirichlet ring set to zero."""
    out = values.copy()
    out[0, :] = 0.0
    out[-1, :] = 0.0
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return out


# ---------------------------------------------------------------------------
# operators

def laplacian(f: ComplexField) -> ComplexField:
    h = f.grid.spacing
    out = kernels.laplacian_apply(f.values, 1.0 / (h * h))
    return ComplexField(f.grid, out)


def rotation_term(f: ComplexField, omega: float) -> ComplexField:
    """i*Omega*(x_perp . grad f) with centered differences."""
    if omega < 0:
        raise ValueError("rotation speed must be nonnegative")
    if omega == 0.0:
        return ComplexField.zeros(f.grid)
    h = f.grid.spacing
    out = kernels.rotation_apply(f.values, np.asarray(f.grid.axis), omega, 0.5 / h)
    return ComplexField(f.grid, out)


def gradient(values: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Centered (d1, d2) of an (n, n) array, zero on the boundary ring."""
    h = grid.spacing
    if np.iscomplexobj(values):
        return kernels.gradient_apply(values, 0.5 / h)
    g1, g2 = kernels.gradient_apply(values.astype(np.complex128), 0.5 / h)
    return g1.real, g2.real


def integrate(f: RealField) -> float:
    """Rectangle rule h^2 * sum over all nodes."""
    h = f.grid.spacing
    return float(h * h * np.sum(f.values))


def integrate_values(values: np.ndarray, grid: GridSpec) -> float:
    h = grid.spacing
    return float(h * h * np.sum(values))


@dataclass(frozen=True)
class FieldNorms:
    l2: float
    lp: float
    h1: float


def norms(f: ComplexField | RealField, q: float = 2.0) -> FieldNorms:
    """L2 norm, Lq norm and the H1 norm (centered gradient)."""
    if q < 1:
        raise ValueError(f"Lq norm needs q >= 1, got {q}")
    g = f.grid
    h2 = g.spacing ** 2
    amp2 = np.abs(f.values) ** 2
    l2 = np.sqrt(h2 * np.sum(amp2))
    lp = (h2 * np.sum(np.abs(f.values) ** q)) ** (1.0 / q)
    g1, g2 = gradient(np.asarray(f.values, dtype=np.complex128), g)
    grad2 = np.abs(g1) ** 2 + np.abs(g2) ** 2
    h1 = np.sqrt(h2 * np.sum(grad2 + amp2))
    return FieldNorms(float(l2), float(lp), float(h1))


def l2_norm(values: np.ndarray, grid: GridSpec) -> float:
    h = grid.spacing
    return float(np.sqrt(h * h * np.real(np.vdot(values, values))))


def normalize(f: ComplexField) -> ComplexField:
    n = l2_norm(f.values, f.grid)
    if n == 0.0:
        raise ValueError("cannot normalize zero field")
    return ComplexField(f.grid, f.values / n, meta=dict(f.meta))


def inner(fa: np.ndarray, fb: np.ndarray, grid: GridSpec) -> complex:
    """L2 inner product <a, b> = integral a * conj(b)."""
    h = grid.spacing
    return complex(h * h * np.vdot(fb, fa))


# ---------------------------------------------------------------------------
# binary dumps: magic (4 bytes), u64 n, f64 L, node data little-endian
# row-major (x1 fastest).  RGS1 stores (re, im) f64 pairs, RGR1 one f64.

def write_complex_field(f: ComplexField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<Qd", f.grid.n, f.grid.half_width))
        inter = np.empty((f.grid.n * f.grid.n, 2), dtype="<f8")
        inter[:, 0] = f.values.real.ravel()
        inter[:, 1] = f.values.imag.ravel()
        fh.write(inter.tobytes())


def read_complex_field(path) -> ComplexField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FIELD_MAGIC:
            raise ValueError(f"bad field dump magic {magic!r}, want {FIELD_MAGIC!r}")
        n, half_width = struct.unpack("<Qd", fh.read(16))
        raw = np.frombuffer(fh.read(int(n) * int(n) * 16), dtype="<f8").reshape(-1, 2)
    values = (raw[:, 0] + 1j * raw[:, 1]).reshape(int(n), int(n))
    return ComplexField(GridSpec(half_width, int(n)), values)


def write_real_field(f: RealField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(REAL_MAGIC)
        fh.write(struct.pack("<Qd", f.grid.n, f.grid.half_width))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_real_field(path) -> RealField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != REAL_MAGIC:
            raise ValueError(f"bad field dump magic {magic!r}, want {REAL_MAGIC!r}")
        n, half_width = struct.unpack("<Qd", fh.read(16))
        values = np.frombuffer(fh.read(int(n) * int(n) * 8), dtype="<f8").reshape(int(n), int(n))
    return RealField(GridSpec(half_width, int(n)), values.copy())

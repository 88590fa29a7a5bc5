"""Uniform periodic grids, complex grid functions, discrete L^p norms and field I/O.

Everything downstream (operators, spectral windows, norms, experiments) computes
on the Grid/Field pair defined here. Conventions fixed once:

* the box is [-L/2, L/2)^d with N points per axis, spacing h = L/N,
* fields are stored row-major, last axis fastest,
* every grid point carries quadrature weight h^d,
* the sup norm is the grid max (no interpolation).
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np

FILE_MAGIC = b"LPSF"
FILE_VERSION = 1


@dataclass(frozen=True)
class Grid:
    """Uniform periodic box in d in {1,2,3} dimensions."""

    dim: int
    extent: float
    n: int

    boundary: str = "periodic"

    @property
    def h(self) -> float:
        return self.extent / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def npoints(self) -> int:
        return self.n ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def axis(self) -> np.ndarray:
        """Coordinates along one axis: x_i = -L/2 + i*h."""
        return -0.5 * self.extent + self.h * np.arange(self.n)

    def meshgrid(self):
        """Tuple of d coordinate arrays of shape self.shape."""
        ax = self.axis()
        return np.meshgrid(*([ax] * self.dim), indexing="ij")

    def radius_sq(self, center) -> np.ndarray:
        """|x - center|^2 on the grid."""
        center = _as_point(center, self.dim)
        r2 = np.zeros(self.shape)
        for c, xs in zip(center, self.meshgrid()):
            r2 += (xs - c) ** 2
        return r2


def make_grid(dim: int, extent: float, points_per_axis: int) -> Grid:
    """Build a periodic grid; rejects dim outside {1,2,3}, extent <= 0, N < 4."""
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if not (extent > 0):
        raise ValueError(f"extent must be positive, got {extent}")
    if points_per_axis < 4:
        raise ValueError(f"points_per_axis must be >= 4, got {points_per_axis}")
    return Grid(dim=dim, extent=float(extent), n=int(points_per_axis))


class Field:
    """Complex-valued grid function. Values are immutable after construction."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values: np.ndarray, check: bool = True):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != grid.shape:
            raise ValueError(
                f"value shape {values.shape} does not match grid shape {grid.shape}")
        if check and not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        if values.flags.writeable:
            values = values.copy()
            values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def _wrap(cls, grid: Grid, values: np.ndarray) -> "Field":
        # internal fast path: takes ownership of a fresh array, skips the copy
        values = np.ascontiguousarray(values, dtype=np.complex128)
        values.setflags(write=False)
        f = cls.__new__(cls)
        f.grid = grid
        f.values = values
        return f

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls._wrap(grid, np.zeros(grid.shape, np.complex128))

    def copy_values(self) -> np.ndarray:
        return np.array(self.values)

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.values.imag == 0.0))

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field._wrap(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field._wrap(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "Field":
        return Field._wrap(self.grid, self.values * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field._wrap(self.grid, -self.values)

    def conj(self) -> "Field":
        return Field._wrap(self.grid, np.conj(self.values))


def _same_grid(a: Field, b: Field):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def _as_point(p, dim: int) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.shape != (dim,):
        raise ValueError(f"expected point of dimension {dim}, got shape {p.shape}")
    return p


def lp_norm(f: Field, p: float) -> float:
    """Discrete L^p norm: (sum |f|^p h^d)^(1/p) for finite p, grid max for p = inf."""
    if p != math.inf and p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    absf = np.abs(f.values)
    if p == math.inf:
        return float(absf.max())
    w = f.grid.cell_volume
    if p == 1:
        return float(absf.sum() * w)
    if p == 2:
        return float(math.sqrt(np.sum(absf * absf) * w))
    return float((np.sum(absf ** p) * w) ** (1.0 / p))


def inner(f: Field, g: Field) -> complex:
    """L^2 inner product <f, g> = sum conj(f) g h^d."""
    _same_grid(f, g)
    return complex(np.vdot(f.values, g.values) * f.grid.cell_volume)


# ---------------------------------------------------------------------------
# potentials

_POTENTIAL_KINDS = ("zero", "gaussian_well", "ball", "smooth_bump", "from_file")


@dataclass(frozen=True)
class PotentialSpec:
    """Declarative description of a real potential.

    Sign convention: negative depth/height is an attractive well. The ball
    indicator is the one discontinuous family and is flagged "rough".
    """

    kind: str
    depth: float = 0.0
    height: float = 0.0
    width: float = 1.0
    radius: float = 1.0
    center: tuple = ()
    path: str | None = None

    @classmethod
    def zero(cls):
        return cls(kind="zero")

    @classmethod
    def gaussian_well(cls, depth, width, center=()):
        return cls(kind="gaussian_well", depth=float(depth), width=float(width),
                   center=tuple(center))

    @classmethod
    def ball(cls, height, radius, center=()):
        return cls(kind="ball", height=float(height), radius=float(radius),
                   center=tuple(center))

    @classmethod
    def smooth_bump(cls, height, radius, center=()):
        return cls(kind="smooth_bump", height=float(height), radius=float(radius),
                   center=tuple(center))

    @classmethod
    def from_file(cls, path):
        return cls(kind="from_file", path=str(path))

    @property
    def smoothness(self) -> str:
        """"smooth" (all derivatives bounded), "rough", or "unknown"."""
        if self.kind in ("zero", "gaussian_well", "smooth_bump"):
            return "smooth"
        if self.kind == "ball":
            return "rough"
        return "unknown"

    def describe(self) -> dict:
        d = {"kind": self.kind, "smoothness": self.smoothness}
        if self.kind == "gaussian_well":
            d.update(depth=self.depth, width=self.width, center=list(self.center))
        elif self.kind in ("ball", "smooth_bump"):
            d.update(height=self.height, radius=self.radius, center=list(self.center))
        elif self.kind == "from_file":
            d.update(path=self.path)
        return d


def sample_potential(spec: PotentialSpec, g: Grid) -> Field:
    """Sample a potential pointwise on the grid. Result is real-valued."""
    if spec.kind not in _POTENTIAL_KINDS:
        raise ValueError(f"unknown potential kind {spec.kind!r}")
    if spec.kind == "zero":
        vals = np.zeros(g.shape)
    elif spec.kind == "from_file":
        f = load_field(g, spec.path)
        if not f.is_real:
            raise ValueError(f"potential file {spec.path} has nonzero imaginary part")
        vals = f.values.real.copy()
    else:
        center = spec.center if spec.center else (0.0,) * g.dim
        r2 = g.radius_sq(center)
        if spec.kind == "gaussian_well":
            if not (spec.width > 0):
                raise ValueError("width must be positive")
            vals = spec.depth * np.exp(-r2 / (2.0 * spec.width ** 2))
        elif spec.kind == "ball":
            if not (spec.radius > 0):
                raise ValueError("radius must be positive")
            vals = np.where(r2 <= spec.radius ** 2, spec.height, 0.0)
        else:  # smooth_bump: height * exp(1 - 1/(1 - (r/R)^2)) inside r < R
            if not (spec.radius > 0):
                raise ValueError("radius must be positive")
            s = r2 / spec.radius ** 2
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                vals = np.where(s < 1.0,
                                spec.height * np.exp(1.0 - 1.0 / np.maximum(1.0 - s, 1e-300)),
                                0.0)
    return Field._wrap(g, vals.astype(np.complex128))


def gaussian_packet(g: Grid, center, width: float, momentum) -> Field:
    """L^2-normalized Gaussian wave packet exp(-|x-c|^2/(2 sigma^2)) exp(i k.x).

    Warns if the packet is closer than 6 widths to the box boundary.
    """
    if not (width > 0):
        raise ValueError("width must be positive")
    center = _as_point(center, g.dim)
    momentum = _as_point(momentum, g.dim)
    half = 0.5 * g.extent
    margin = half - np.max(np.abs(center)) - 6.0 * width
    if margin < 0:
        warnings.warn(
            f"gaussian packet within 6 widths of the boundary (margin {margin:.3g})",
            stacklevel=2)
    envelope = np.exp(-g.radius_sq(center) / (2.0 * width ** 2))
    phase = np.zeros(g.shape)
    for k, xs in zip(momentum, g.meshgrid()):
        phase += k * xs
    vals = envelope * np.exp(1j * phase)
    f = Field._wrap(g, vals)
    return (1.0 / lp_norm(f, 2)) * f


# ---------------------------------------------------------------------------
# field files
#
# 16-byte header: magic "LPSF", version u8, dim u8, reserved u16,
# then dim x u32 per-axis point counts, dim x f64 per-axis extents,
# then N^d interleaved (re, im) f64 pairs in row-major order.
# All integers and floats little-endian.


def save_field(f: Field, path) -> None:
    g = f.grid
    header = struct.pack("<4sBBH", FILE_MAGIC, FILE_VERSION, g.dim, 0)
    header += struct.pack(f"<{g.dim}I", *([g.n] * g.dim))
    header += struct.pack(f"<{g.dim}d", *([g.extent] * g.dim))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes())


def load_field(g: Grid, path) -> Field:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated or empty field file")
    magic, version, dim, _ = struct.unpack_from("<4sBBH", raw, 0)
    if magic != FILE_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != FILE_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if dim != g.dim:
        raise ValueError(f"{path}: file dim {dim} != grid dim {g.dim}")
    off = 8
    counts = struct.unpack_from(f"<{dim}I", raw, off)
    off += 4 * dim
    extents = struct.unpack_from(f"<{dim}d", raw, off)
    off += 8 * dim
    if counts != (g.n,) * dim:
        raise ValueError(f"{path}: file shape {counts} != grid shape {g.shape}")
    if any(abs(e - g.extent) > 1e-12 * g.extent for e in extents):
        raise ValueError(f"{path}: file extents {extents} != grid extent {g.extent}")
    expected = g.npoints * 16
    payload = raw[off:]
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload has {len(payload)} bytes, expected {expected}")
    vals = np.frombuffer(payload, dtype="<c16").reshape(g.shape)
    return Field(g, vals)

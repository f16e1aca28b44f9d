"""Discretization substrate: grids, sampled functions, quadrature, dense operators.

Two grid modes are supported.

RADIAL_SWAVE
    Midpoint nodes r_i = (i + 1/2) h on (0, L).  Grid functions in this mode
    store the *reduced* wave u(r) = r * psi(r), so the working quadrature
    weight is the flat spacing h.  Three-dimensional norms of the underlying
    radial profile psi = u / r use the volume weights 4 pi r^2 h instead;
    both weight sets live on the Grid and callers pick per context.

BOX3D
    A uniform midpoint lattice of node_count^3 points filling the cube
    [-L, L]^3.  Working weights and volume weights coincide (h^3).

Dense operators come in two kinds.  KERNEL entries are samples of an
integral kernel A(x_i, y_j) and application includes the quadrature weights;
MATRIX entries are applied directly.  All norms, pairings and induced
operator norms use the working weights, with fixed-order summation so that
results are reproducible bit for bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Invalid grid construction parameters."""


class GridMismatchError(ValueError):
    """Operands live on different grids."""


class Mode(enum.Enum):
    RADIAL_SWAVE = "radial_swave"
    BOX3D = "box3d"


class Kind(enum.Enum):
    KERNEL = "kernel"
    MATRIX = "matrix"


#: Dense-matrix cap for BOX3D grids (node_count per axis).
BOX3D_NODE_CAP = 14


@dataclass(frozen=True)
class Grid:
    """Discretization descriptor.

    nodes: radii (M,) in RADIAL_SWAVE, lattice points (M, 3) in BOX3D.
    weights: working quadrature weights (flat h / cell volume h^3).
    volume_weights: 3-D volume weights (4 pi r^2 h in radial mode).
    """

    mode: Mode
    nodes: np.ndarray
    weights: np.ndarray
    volume_weights: np.ndarray
    extent: float
    spacing: float

    def __post_init__(self):
        for arr in (self.nodes, self.weights, self.volume_weights):
            arr.setflags(write=False)

    @property
    def size(self):
        return self.weights.shape[0]

    @property
    def radii(self):
        """Distance of each node from the origin."""
        if self.mode is Mode.RADIAL_SWAVE:
            return self.nodes
        return np.linalg.norm(self.nodes, axis=1)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.mode is other.mode
            and self.extent == other.extent
            and self.nodes.shape == other.nodes.shape
        )

    def __hash__(self):
        return hash((self.mode, self.extent, self.nodes.shape))


def make_grid(mode, extent, node_count):
    """Build a grid with midpoint nodes.

    RADIAL_SWAVE: node_count radii r_i = (i + 1/2) h, h = extent / node_count.
    BOX3D: node_count^3 lattice points with coordinates -L + (i + 1/2) h,
    h = 2 extent / node_count.
    """
    if node_count < 8:
        raise GridError(f"node_count={node_count} below minimum of 8")
    if extent <= 0:
        raise GridError(f"extent must be positive, got {extent}")
    mode = Mode(mode) if not isinstance(mode, Mode) else mode
    if mode is Mode.RADIAL_SWAVE:
        h = extent / node_count
        r = (np.arange(node_count) + 0.5) * h
        flat = np.full(node_count, h)
        vol = 4.0 * np.pi * r**2 * h
        return Grid(mode, r, flat, vol, float(extent), h)
    if node_count > BOX3D_NODE_CAP:
        raise GridError(
            f"BOX3D node_count={node_count} exceeds dense cap {BOX3D_NODE_CAP}"
        )
    h = 2.0 * extent / node_count
    axis = -extent + (np.arange(node_count) + 0.5) * h
    xx, yy, zz = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
    w = np.full(pts.shape[0], h**3)
    return Grid(mode, pts, w, w.copy(), float(extent), h)


@dataclass(frozen=True)
class GridFunction:
    """Complex-valued function sampled on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.size,):
            raise GridMismatchError(
                f"value count {vals.shape} != node count {self.grid.size}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __add__(self, other):
        _check_same_grid(self.grid, other.grid)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self.grid, other.grid)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__


def sample(grid, fn):
    """Sample a callable on the grid nodes (radius in radial mode, point in box)."""
    if grid.mode is Mode.RADIAL_SWAVE:
        vals = np.asarray([fn(r) for r in grid.nodes], dtype=complex)
    else:
        vals = np.asarray([fn(x) for x in grid.nodes], dtype=complex)
    return GridFunction(grid, vals)


def sample_profile(grid, psi_fn):
    """Sample a radial profile psi(|x|) in the grid's working representation.

    Radial mode stores the reduced wave u = r * psi; box mode stores psi
    directly.  psi_fn is vectorized over radii.
    """
    r = grid.radii
    psi = np.asarray(psi_fn(r), dtype=complex)
    if grid.mode is Mode.RADIAL_SWAVE:
        return GridFunction(grid, r * psi)
    return GridFunction(grid, psi)


def profile_values(f):
    """Underlying 3-D profile psi at each node (u / r in radial mode)."""
    if f.grid.mode is Mode.RADIAL_SWAVE:
        return f.values / f.grid.nodes
    return f.values


def _check_same_grid(a, b):
    if a != b:
        raise GridMismatchError("grid mismatch")


def lp_norm(f, p, weights=None):
    """Discrete L^p norm (sum w_i |f_i|^p)^(1/p); max |f_i| for p = inf.

    Uses the working weights unless an explicit weight array is given
    (e.g. grid.volume_weights for 3-D norms of radial profiles).
    """
    if p != np.inf and p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    absf = np.abs(f.values)
    if p == np.inf:
        return float(absf.max())
    w = f.grid.weights if weights is None else weights
    return float(np.sum(w * absf**p) ** (1.0 / p))


def profile_lp_norm(f, p):
    """3-D L^p norm of the profile psi = u/r (radial) or psi (box)."""
    psi = profile_values(f)
    if p == np.inf:
        return float(np.abs(psi).max())
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    w = f.grid.volume_weights
    return float(np.sum(w * np.abs(psi) ** p) ** (1.0 / p))


def bilinear_pair(f, g, weights=None):
    """Symmetric bilinear pairing sum w_i f_i g_i (no conjugation)."""
    _check_same_grid(f.grid, g.grid)
    w = f.grid.weights if weights is None else weights
    return complex(np.sum(w * f.values * g.values))


def inner_product(f, g, weights=None):
    """Sesquilinear inner product sum w_i f_i conj(g_i)."""
    _check_same_grid(f.grid, g.grid)
    w = f.grid.weights if weights is None else weights
    return complex(np.sum(w * f.values * np.conj(g.values)))


@dataclass(frozen=True)
class DenseOperator:
    """Quadrature-weighted dense operator on grid functions."""

    grid: Grid
    matrix: np.ndarray
    kind: Kind = Kind.KERNEL

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.grid.size
        if m.shape != (n, n):
            raise GridMismatchError(f"matrix shape {m.shape} != ({n}, {n})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def effective(self):
        """Matrix representing plain application f -> M f."""
        if self.kind is Kind.KERNEL:
            return self.matrix * self.grid.weights[np.newaxis, :]
        return self.matrix


def identity_operator(grid):
    return DenseOperator(grid, np.eye(grid.size), Kind.MATRIX)


def zero_operator(grid):
    return DenseOperator(grid, np.zeros((grid.size, grid.size)), Kind.MATRIX)


def diag_operator(v):
    """Multiplication operator by a grid function."""
    return DenseOperator(v.grid, np.diag(v.values), Kind.MATRIX)


def from_effective(grid, matrix):
    """Wrap a plain application matrix as a MATRIX-kind operator."""
    return DenseOperator(grid, matrix, Kind.MATRIX)


def apply(A, f):
    _check_same_grid(A.grid, f.grid)
    return GridFunction(A.grid, A.effective @ f.values)


def compose(A, B):
    _check_same_grid(A.grid, B.grid)
    return DenseOperator(A.grid, A.effective @ B.effective, Kind.MATRIX)


def add(A, B):
    _check_same_grid(A.grid, B.grid)
    return DenseOperator(A.grid, A.effective + B.effective, Kind.MATRIX)


def scale(A, alpha):
    return DenseOperator(A.grid, alpha * A.effective, Kind.MATRIX)


def transpose_bilinear(A):
    """Adjoint with respect to the bilinear pairing: pair(Af, g) = pair(f, A^t g).

    For KERNEL operators this is the plain transpose of the kernel samples
    (a bitwise involution).  For MATRIX operators it is W^-1 M^T W.
    """
    if A.kind is Kind.KERNEL:
        return DenseOperator(A.grid, A.matrix.T, Kind.KERNEL)
    w = A.grid.weights
    ratio = w[np.newaxis, :] / w[:, np.newaxis]
    return DenseOperator(A.grid, A.matrix.T * ratio, Kind.MATRIX)


def operator_l1_norm(A):
    """Induced norm of A on the weighted discrete L^1 space.

    KERNEL kind: max_j sum_i w_i |K_ij|.  MATRIX kind: the weighted
    analogue max_j sum_i w_i |M_ij| / w_j.
    """
    w = A.grid.weights
    if A.kind is Kind.KERNEL:
        cols = w @ np.abs(A.matrix)
    else:
        cols = (w @ np.abs(A.matrix)) / w
    return float(cols.max())

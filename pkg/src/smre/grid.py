"""Discrete signals on regular grids over the unit cube.

A grid with ``dims = (n1, ..., nd)`` partitions ``[0, 1]^d`` into
``prod(dims)`` cells of measure ``h = 1 / prod(dims)``.  All inner products
and norms carry the cell measure, so indicator functions of cell sets have
the same norms as their continuum counterparts.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "Signal",
    "NoiseModel",
    "inner",
    "norm",
    "draw_white_noise",
    "signal_to_csv",
    "signal_from_csv",
    "signal_to_binary",
    "signal_from_binary",
]


class GridMismatchError(ValueError):
    """Raised when an operation mixes signals on different grids."""


@dataclass(frozen=True)
class Grid:
    """Regular grid on the unit cube, dimension 1 or 2."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) not in (1, 2):
            raise ValueError("only 1-D and 2-D grids are supported")
        if any(d < 1 for d in dims):
            raise ValueError("grid dims must be positive")
        object.__setattr__(self, "dims", dims)

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def ncells(self):
        n = 1
        for d in self.dims:
            n *= d
        return n

    @property
    def h(self):
        """Measure of a single cell (1 / number of cells)."""
        return 1.0 / self.ncells

    @property
    def spacings(self):
        """Per-axis cell side lengths."""
        return tuple(1.0 / d for d in self.dims)

    def cell_centers(self):
        """Coordinates of cell centers, one array per axis (1-D arrays)."""
        return tuple((np.arange(d) + 0.5) / d for d in self.dims)

    def coordinate_grid(self):
        """Full meshgrid of cell-center coordinates, shaped like the grid."""
        axes = self.cell_centers()
        if self.ndim == 1:
            return (axes[0],)
        return np.meshgrid(axes[0], axes[1], indexing="ij")


@dataclass(frozen=True, eq=False)
class Signal:
    """Grid function stored as a flat float array (row-major for 2-D)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != self.grid.ncells:
            raise ValueError(
                f"signal length {v.size} does not match grid with "
                f"{self.grid.ncells} cells"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        object.__setattr__(self, "values", v)

    def as_grid(self):
        """Values reshaped to the grid's shape (view where possible)."""
        return self.values.reshape(self.grid.dims)

    def copy(self):
        return Signal(self.grid, self.values.copy())


@dataclass(frozen=True)
class NoiseModel:
    """White-noise level and RNG seed."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError("signals live on different grids")


def inner(a, b):
    """Grid inner product ``h * sum_i a_i b_i``."""
    _check_same_grid(a, b)
    return a.grid.h * float(np.dot(a.values, b.values))


def norm(a):
    """Grid norm ``sqrt(inner(a, a))``."""
    return np.sqrt(a.grid.h) * float(np.linalg.norm(a.values))


def _replicate_rng(seed, replicate):
    # Counter-based stream keyed by (seed, replicate): independent replicate
    # streams that are reproducible regardless of evaluation order.
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replicate),))
    return np.random.Generator(np.random.Philox(ss))


def draw_white_noise(grid, model, replicate=0):
    """Draw one realisation of discrete white noise on `grid`.

    Per-cell i.i.d. normals scaled by ``h**-0.5`` so that for any unit-norm
    signal ``phi`` (w.r.t. :func:`inner`) the projection ``inner(eps, phi)``
    is standard normal, and projections onto orthonormal signals are
    independent.  Deterministic given ``(model.seed, replicate)``.
    """
    rng = _replicate_rng(model.seed, replicate)
    z = rng.standard_normal(grid.ncells)
    return Signal(grid, model.sigma * z / np.sqrt(grid.h))


# ---------------------------------------------------------------------------
# serialization: CSV (one value per line) and raw binary with dims header

def signal_to_csv(sig, path):
    with open(path, "w") as fh:
        fh.write("value\n")
        for v in sig.values:
            fh.write(f"{float(v)!r}\n")


def signal_from_csv(path, grid=None):
    """Read a signal written by :func:`signal_to_csv`.

    If `grid` is omitted, a 1-D grid matching the value count is used.
    """
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "value":
            raise ValueError(f"unexpected CSV header {header!r}")
        values = np.array([float(line) for line in fh if line.strip()])
    if grid is None:
        grid = Grid((values.size,))
    return Signal(grid, values)


def signal_to_binary(sig, path):
    """Write little-endian float64 values after an 8-byte dims header.

    The header is two little-endian uint32 values ``(n1, n2)``; ``n2 = 0``
    marks a 1-D grid.
    """
    dims = sig.grid.dims
    n1 = dims[0]
    n2 = dims[1] if len(dims) == 2 else 0
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", n1, n2))
        fh.write(sig.values.astype("<f8").tobytes())


def signal_from_binary(path):
    with open(path, "rb") as fh:
        n1, n2 = struct.unpack("<II", fh.read(8))
        raw = fh.read()
    grid = Grid((n1,)) if n2 == 0 else Grid((n1, n2))
    values = np.frombuffer(raw, dtype="<f8")
    return Signal(grid, values.copy())

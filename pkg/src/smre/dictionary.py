"""Atom systems used by multiresolution statistics.

Three builders are provided: all short intervals on a 1-D grid, dyadic
cubes on a 1-D/2-D grid, and a trigonometric orthonormal system.  Every
atom ``phi`` has grid norm in ``(0, 1]`` and a unit-norm dual
``phi* = phi / ||phi||``; statistics and constraints only ever consume the
duals and the norms.

Indicator atoms (intervals, dyadic cubes) are stored as cell blocks, so
projections reduce to windowed/blocked sums and the projection kernel can
update them in place.
"""

from dataclasses import dataclass, field

import numpy as np

from smre.grid import Grid, GridMismatchError, Signal

__all__ = [
    "Dictionary",
    "build_intervals",
    "build_dyadic",
    "build_trigonometric",
    "project_coeff",
    "project_all",
]


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Ordered atom system over a fixed grid.

    For indicator dictionaries the atoms are the blocks
    ``rows r0[a]:r0[a]+nr[a], cols c0[a]:c0[a]+nc[a]`` of the grid (1-D
    grids use a single row).  Dense dictionaries store the dual atoms as
    rows of ``dense_duals``.  ``group_of`` maps each atom to a group of
    equal-norm atoms (interval length / dyadic level / single atoms), which
    batched statistic evaluation exploits.
    """

    kind: str
    grid: Grid
    norms: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)
    blocks: tuple = None  # (r0, c0, nr, nc) int64 arrays for indicator atoms
    dense_duals: np.ndarray = field(default=None, repr=False)
    group_of: np.ndarray = field(default=None, repr=False)
    group_norms: np.ndarray = field(default=None, repr=False)
    orthonormal: bool = False

    def __post_init__(self):
        if len(self) == 0:
            raise ValueError("dictionary must not be empty")
        n = self.norms
        if np.any(n <= 0) or np.any(n > 1 + 1e-12):
            raise ValueError("atom norms must lie in (0, 1]")

    def __len__(self):
        return self.norms.size

    @property
    def is_indicator(self):
        return self.blocks is not None

    def _block_cells(self):
        r0, c0, nr, nc = self.blocks
        return (nr * nc).astype(float)

    def dual_scales(self):
        """Per-atom constant dual value factor sqrt(h / #cells)."""
        return np.sqrt(self.grid.h / self._block_cells())

    def dual(self, n):
        """Materialise the unit-norm dual atom as a :class:`Signal`."""
        if not 0 <= n < len(self):
            raise IndexError("atom index out of range")
        if self.is_indicator:
            r0, c0, nr, nc = self.blocks
            shape = self.grid.dims if self.grid.ndim == 2 else (1, self.grid.ncells)
            vals = np.zeros(shape)
            vals[r0[n]:r0[n] + nr[n], c0[n]:c0[n] + nc[n]] = self.dual_scales()[n] / self.grid.h
            return Signal(self.grid, vals.ravel())
        return Signal(self.grid, self.dense_duals[n].copy())

    # -- projections --------------------------------------------------------

    def project_all(self, v):
        """All dual coefficients ``inner(v, phi_n*)`` in atom order."""
        if v.grid != self.grid:
            raise GridMismatchError("signal grid does not match dictionary")
        return self._project_matrix(v.values[None, :])[0]

    def _project_matrix(self, values):
        """Dual coefficients for a batch of flat value rows, shape (B, N)."""
        if self.is_indicator:
            sums = self._block_sums(values)
            return sums * (self.dual_scales()[None, :])
        return self.grid.h * values @ self.dense_duals.T

    def _block_sums(self, values):
        """Raw block sums for a batch of flat value rows, shape (B, N)."""
        B = values.shape[0]
        if self.kind == "intervals":
            n = self.grid.ncells
            c = np.zeros((B, n + 1))
            np.cumsum(values, axis=1, out=c[:, 1:])
            parts = [c[:, L:] - c[:, :-L] for L in self.meta["lengths"]]
            return np.concatenate(parts, axis=1)
        if self.kind == "dyadic":
            n1, n2 = self.grid.dims if self.grid.ndim == 2 else (1, self.grid.ncells)
            parts = []
            for level in range(self.meta["max_level"] + 1):
                k = 2 ** level
                k1 = min(k, n1)
                b1, b2 = n1 // k1, n2 // k
                blk = values.reshape(B, k1, b1, k, b2).sum(axis=(2, 4))
                parts.append(blk.reshape(B, -1))
            return np.concatenate(parts, axis=1)
        # generic indicator fallback
        r0, c0, nr, nc = self.blocks
        out = np.empty((B, len(self)))
        v2 = values.reshape(B, -1, self._row_stride())
        for a in range(len(self)):
            out[:, a] = v2[:, r0[a]:r0[a] + nr[a], c0[a]:c0[a] + nc[a]].sum(axis=(1, 2))
        return out

    def _row_stride(self):
        return self.grid.dims[1] if self.grid.ndim == 2 else self.grid.ncells

    def coeff_group_max(self, values, one_sided=False):
        """Per-group extreme dual coefficients for a batch of value rows.

        Returns an array of shape ``(B, n_groups)`` holding, per row and
        per equal-norm atom group, the maximum of ``|coef|`` (or of the
        signed ``coef`` if `one_sided`).  Together with ``group_norms``
        this is exactly what additive-statistic maxima need, without
        materialising every coefficient of every replicate.
        """
        B = values.shape[0]
        if self.kind == "intervals":
            n = self.grid.ncells
            c = np.zeros((B, n + 1))
            np.cumsum(values, axis=1, out=c[:, 1:])
            scale = np.sqrt(self.grid.h / np.asarray(self.meta["lengths"], float))
            out = np.empty((B, len(self.meta["lengths"])))
            for g, L in enumerate(self.meta["lengths"]):
                w = c[:, L:] - c[:, :-L]
                m = w.max(axis=1) if one_sided else np.abs(w).max(axis=1)
                out[:, g] = m * scale[g]
            return out
        if self.kind == "dyadic":
            n1, n2 = self.grid.dims if self.grid.ndim == 2 else (1, self.grid.ncells)
            levels = range(self.meta["max_level"] + 1)
            out = np.empty((B, len(list(levels))))
            for level in range(self.meta["max_level"] + 1):
                k = 2 ** level
                k1 = min(k, n1)
                b1, b2 = n1 // k1, n2 // k
                blk = values.reshape(B, k1, b1, k, b2).sum(axis=(2, 4)).reshape(B, -1)
                scale = np.sqrt(self.grid.h / (b1 * b2))
                m = blk.max(axis=1) if one_sided else np.abs(blk).max(axis=1)
                out[:, level] = m * scale
            return out
        coeffs = self._project_matrix(values)
        return coeffs if one_sided else np.abs(coeffs)


def project_all(dico, v):
    return dico.project_all(v)


def project_coeff(dico, n, v):
    """Single dual coefficient ``inner(v, phi_n*)``; O(#cells of the atom)."""
    if not 0 <= n < len(dico):
        raise IndexError("atom index out of range")
    if v.grid != dico.grid:
        raise GridMismatchError("signal grid does not match dictionary")
    if dico.is_indicator:
        r0, c0, nr, nc = dico.blocks
        v2 = v.values.reshape(-1, dico._row_stride())
        s = v2[r0[n]:r0[n] + nr[n], c0[n]:c0[n] + nc[n]].sum()
        return float(s * dico.dual_scales()[n])
    return dico.grid.h * float(np.dot(dico.dense_duals[n], v.values))


# ---------------------------------------------------------------------------
# builders

def build_intervals(grid, max_len):
    """All discrete intervals of lengths ``1..max_len`` on a 1-D grid.

    Atoms are interval indicators ordered by (length, start); the count is
    ``sum_{L=1..max_len} (n - L + 1)`` (20290 for n = 1024, max_len = 20).
    """
    if grid.ndim != 1:
        raise ValueError("interval dictionaries need a 1-D grid")
    n = grid.ncells
    if not 1 <= max_len <= n:
        raise ValueError("max_len must lie in [1, n]")
    lengths = list(range(1, max_len + 1))
    starts = np.concatenate([np.arange(n - L + 1) for L in lengths])
    lens = np.concatenate([np.full(n - L + 1, L, dtype=np.int64) for L in lengths])
    blocks = (
        np.zeros(starts.size, dtype=np.int64),
        starts.astype(np.int64),
        np.ones(starts.size, dtype=np.int64),
        lens,
    )
    norms = np.sqrt(grid.h * lens)
    group_of = np.concatenate(
        [np.full(n - L + 1, g, dtype=np.int64) for g, L in enumerate(lengths)]
    )
    return Dictionary(
        kind="intervals",
        grid=grid,
        norms=norms,
        meta={"max_len": int(max_len), "lengths": lengths},
        blocks=blocks,
        group_of=group_of,
        group_norms=np.sqrt(grid.h * np.asarray(lengths, float)),
    )


def build_dyadic(grid, max_level):
    """All dyadic cubes of levels ``0..max_level``.

    Level ``l`` tiles the unit cube with ``2**(l*d)`` congruent cubes of
    side ``2**-l``; grid dims must be divisible by ``2**max_level``.  The
    cumulative atom count through level ``l`` is
    ``(2**(d*(l+1)) - 1) / (2**d - 1)`` and the level-``l`` atom norm is
    ``2**(-l*d/2)``.  ``meta`` carries the per-level scales ``eps`` and
    diameters ``delta``.
    """
    if max_level < 0:
        raise ValueError("max_level must be >= 0")
    d = grid.ndim
    for dim in grid.dims:
        if dim % (2 ** max_level) != 0:
            raise ValueError(
                f"grid dims {grid.dims} not divisible by 2**{max_level}"
            )
    n1, n2 = grid.dims if d == 2 else (1, grid.ncells)
    r0s, c0s, nrs, ncs, norms, group = [], [], [], [], [], []
    for level in range(max_level + 1):
        k = 2 ** level
        k1 = min(k, n1)  # 1-D grids keep a single row
        b1, b2 = n1 // k1, n2 // k
        for i in range(k1):
            for j in range(k):
                r0s.append(i * b1)
                c0s.append(j * b2)
                nrs.append(b1)
                ncs.append(b2)
                group.append(level)
        norms.extend([2.0 ** (-level * d / 2.0)] * (k1 * k))
    blocks = tuple(np.asarray(a, dtype=np.int64) for a in (r0s, c0s, nrs, ncs))
    levels = np.arange(max_level + 1)
    meta = {
        "max_level": int(max_level),
        "eps": 2.0 ** (-levels * d / 2.0),
        "delta": 2.0 ** (-levels.astype(float)) * np.sqrt(d),
        "cumulative_counts": (2 ** (d * (levels + 1)) - 1) // (2 ** d - 1),
    }
    return Dictionary(
        kind="dyadic",
        grid=grid,
        norms=np.asarray(norms),
        meta=meta,
        blocks=blocks,
        group_of=np.asarray(group, dtype=np.int64),
        group_norms=2.0 ** (-levels * d / 2.0),
    )


def build_trigonometric(grid, count):
    """First `count` atoms of the trigonometric orthonormal system.

    Atoms sampled at cell centers, ordered constant, cos, sin with
    increasing frequency: ``1, sqrt(2) cos(2 pi x), sqrt(2) sin(2 pi x),
    sqrt(2) cos(4 pi x), ...``; each is re-normalised to unit grid norm.
    On a cell-centered grid the sampled system is exactly orthogonal as
    long as frequencies stay below Nyquist (``count <= n``).
    """
    if grid.ndim != 1:
        raise ValueError("trigonometric dictionaries need a 1-D grid")
    n = grid.ncells
    if not 1 <= count <= n:
        raise ValueError("count must lie in [1, n]")
    (x,) = grid.cell_centers()
    rows = np.empty((count, n))
    rows[0] = 1.0
    for idx in range(1, count):
        freq = (idx + 1) // 2
        phase = 2.0 * np.pi * freq * x
        rows[idx] = np.sqrt(2.0) * (np.cos(phase) if idx % 2 == 1 else np.sin(phase))
    nrm = np.sqrt(grid.h * (rows ** 2).sum(axis=1))
    if np.any(nrm < 1e-12):
        raise ValueError("degenerate trigonometric atom (frequency at Nyquist)")
    rows /= nrm[:, None]
    return Dictionary(
        kind="trigonometric",
        grid=grid,
        norms=np.ones(count),
        meta={"count": int(count)},
        dense_duals=rows,
        group_of=np.arange(count, dtype=np.int64),
        group_norms=np.ones(count),
        orthonormal=True,
    )

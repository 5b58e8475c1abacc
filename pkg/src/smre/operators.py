"""Forward operators: identity, diagonal (spectral), periodic convolution.

Every operator provides ``apply``, ``adjoint`` and a fast solver for the
regularised normal equation ``(I + rho K* K) u = b``, the quadratic
sub-step of the splitting solver.
"""

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from smre.grid import GridMismatchError, Signal

__all__ = [
    "IdentityOperator",
    "DiagonalOperator",
    "ConvolutionOperator",
    "make_kernel",
    "solve_regularized_normal",
]


class ForwardOperator:
    kind = "abstract"

    def __init__(self, grid):
        self.grid = grid

    def _check(self, u):
        if u.grid != self.grid:
            raise GridMismatchError("signal grid does not match operator")

    def apply(self, u):
        raise NotImplementedError

    def adjoint(self, v):
        raise NotImplementedError

    def solve_regularized_normal(self, rho, b):
        """Solve ``u + rho K* K u = b`` to high accuracy."""
        raise NotImplementedError

    def norm_bound(self):
        """Upper bound on the operator norm (exact where cheap)."""
        raise NotImplementedError


class IdentityOperator(ForwardOperator):
    kind = "identity"

    def apply(self, u):
        self._check(u)
        return u

    def adjoint(self, v):
        self._check(v)
        return v

    def solve_regularized_normal(self, rho, b):
        self._check(b)
        return Signal(b.grid, b.values / (1.0 + rho))

    def norm_bound(self):
        return 1.0


class DiagonalOperator(ForwardOperator):
    """Finite-rank operator acting diagonally on an orthonormal system.

    ``K psi_n = s_n psi_n`` on the span of the system and ``K = 0`` on its
    orthogonal complement (self-adjoint spectral realisation).  `basis` is
    an orthonormal dense dictionary; `svals` are the positive singular
    values, one per atom.
    """

    kind = "diagonal_svd"

    def __init__(self, basis, svals):
        if not basis.orthonormal:
            raise ValueError("diagonal operators need an orthonormal basis")
        svals = np.asarray(svals, dtype=float)
        if svals.shape != (len(basis),):
            raise ValueError("need one singular value per basis atom")
        if np.any(svals <= 0):
            raise ValueError("singular values must be positive")
        super().__init__(basis.grid)
        self.basis = basis
        self.svals = svals

    def coefficients(self, u):
        self._check(u)
        return self.grid.h * (self.basis.dense_duals @ u.values)

    def from_coefficients(self, c):
        return Signal(self.grid, c @ self.basis.dense_duals)

    def apply(self, u):
        c = self.coefficients(u)
        return self.from_coefficients(self.svals * c)

    adjoint = apply  # self-adjoint by construction

    def solve_regularized_normal(self, rho, b):
        self._check(b)
        c = self.coefficients(b)
        shrink = rho * self.svals ** 2 / (1.0 + rho * self.svals ** 2)
        return Signal(b.grid, b.values - (shrink * c) @ self.basis.dense_duals)

    def norm_bound(self):
        return float(self.svals.max())


class ConvolutionOperator(ForwardOperator):
    """Convolution with a fixed kernel, periodic or zero-padded.

    The kernel is a grid signal of offset samples: entry ``o`` holds
    ``k(o * spacing)`` with negative offsets wrapped to the end of the
    array, and ``(K u)_i = h * sum_j kern[i - j] u_j`` (the cell measure
    makes this a quadrature of the continuum convolution).  Periodic mode
    wraps the offsets ``i - j`` around the domain and diagonalises in
    Fourier space, so the normal-equation solve is exact.  Padded mode
    realises the zero-padding extension instead: the grid is embedded
    into a doubled domain, which turns the circular convolution into the
    exact linear one at roughly 4x cost; its normal equation is solved by
    conjugate gradients.
    """

    kind = "convolution"

    def __init__(self, kernel, padded=False):
        super().__init__(kernel.grid)
        self.kernel = kernel
        self.padded = bool(padded)
        shape = self.grid.dims
        self._shape = shape
        if not padded:
            self._symbol = self.grid.h * np.fft.rfftn(kernel.values.reshape(shape))
        else:
            big = tuple(2 * d for d in shape)
            self._big_shape = big
            kb = _embed_offsets(kernel.values.reshape(shape), big)
            self._big_symbol = self.grid.h * np.fft.rfftn(kb)

    def _conv(self, values, symbol, shape):
        spec = np.fft.rfftn(values.reshape(shape))
        return np.fft.irfftn(spec * symbol, s=shape).ravel()

    def _padded_conv(self, values, symbol):
        big = np.zeros(self._big_shape)
        _corner(big, self._shape)[...] = values.reshape(self._shape)
        out = self._conv(big.ravel(), symbol, self._big_shape)
        return _corner(out.reshape(self._big_shape), self._shape).ravel().copy()

    def apply(self, u):
        self._check(u)
        if not self.padded:
            return Signal(u.grid, self._conv(u.values, self._symbol, self._shape))
        return Signal(u.grid, self._padded_conv(u.values, self._big_symbol))

    def adjoint(self, v):
        self._check(v)
        if not self.padded:
            return Signal(v.grid, self._conv(v.values, np.conj(self._symbol), self._shape))
        return Signal(v.grid, self._padded_conv(v.values, np.conj(self._big_symbol)))

    def solve_regularized_normal(self, rho, b):
        self._check(b)
        if not self.padded:
            spec = np.fft.rfftn(b.values.reshape(self._shape))
            spec /= 1.0 + rho * np.abs(self._symbol) ** 2
            return Signal(b.grid, np.fft.irfftn(spec, s=self._shape).ravel())
        n = self.grid.ncells

        def matvec(x):
            s = Signal(self.grid, x)
            return x + rho * self.adjoint(self.apply(s)).values

        op = LinearOperator((n, n), matvec=matvec)
        x, info = cg(op, b.values, rtol=1e-13, atol=0.0, maxiter=10 * n)
        if info != 0:
            raise RuntimeError("conjugate gradient failed on the padded normal equation")
        return Signal(b.grid, x)

    def norm_bound(self):
        sym = self._big_symbol if self.padded else self._symbol
        return float(np.abs(sym).max())


def _corner(arr, shape):
    if len(shape) == 1:
        return arr[: shape[0]]
    return arr[: shape[0], : shape[1]]


def _embed_offsets(small, big_shape):
    """Re-index offset samples onto a doubled domain, zero elsewhere.

    Offset arrays keep nonnegative offsets at the front and negative ones
    at the back; placing both groups at the same offsets of the larger
    array turns circular convolution with the embedded kernel into exact
    linear convolution for signals supported on the original domain.
    """
    big = np.zeros(big_shape)
    if small.ndim == 1:
        n = small.shape[0]
        half = n // 2
        big[: half + 1] = small[: half + 1]
        if n - half - 1 > 0:
            big[-(n - half - 1):] = small[half + 1:]
        return big
    n1, n2 = small.shape
    h1, h2 = n1 // 2, n2 // 2
    big[: h1 + 1, : h2 + 1] = small[: h1 + 1, : h2 + 1]
    if n2 - h2 - 1 > 0:
        big[: h1 + 1, -(n2 - h2 - 1):] = small[: h1 + 1, h2 + 1:]
    if n1 - h1 - 1 > 0:
        big[-(n1 - h1 - 1):, : h2 + 1] = small[h1 + 1:, : h2 + 1]
    if n1 - h1 - 1 > 0 and n2 - h2 - 1 > 0:
        big[-(n1 - h1 - 1):, -(n2 - h2 - 1):] = small[h1 + 1:, h2 + 1:]
    return big


def make_kernel(grid, kind, width=0.05):
    """Convolution kernels as offset-sample signals.

    ``gaussian``: truncated Gaussian of standard deviation `width`,
    renormalised to unit integral on the grid.  ``box``: centered box of
    full width `width`, renormalised.  ``delta``: exact unit impulse
    (convolution with it is the identity).
    """
    axes = []
    for d in grid.dims:
        o = np.arange(d)
        o = np.where(o <= d // 2, o, o - d)
        axes.append(o / d)
    if grid.ndim == 1:
        r2 = axes[0] ** 2
    else:
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        r2 = X ** 2 + Y ** 2

    if kind == "delta":
        vals = np.zeros(grid.dims)
        vals[(0,) * grid.ndim] = grid.ncells  # value 1/h: unit integral
        return Signal(grid, vals.ravel())
    if kind == "gaussian":
        vals = np.exp(-0.5 * r2 / width ** 2)
    elif kind == "box":
        vals = (r2 <= (0.5 * width) ** 2).astype(float)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    total = vals.sum() * grid.h
    if total <= 0:
        raise ValueError("kernel vanishes on this grid")
    return Signal(grid, (vals / total).ravel())


def solve_regularized_normal(op, rho, b):
    """Module-level convenience wrapper."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    return op.solve_regularized_normal(rho, b)

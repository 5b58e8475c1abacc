"""Pure-numpy fallback for the compiled projection kernel.

Same contract as the Cython module ``smre._kernels``; selected at import
time by :mod:`smre.kernels` when the extension is unavailable (or when
``SMRE_PURE_PYTHON=1``).
"""

import numpy as np

IMPLEMENTATION = "python"


def dykstra_blocks(x, ncols, r0, c0, nr, nc, lo, hi, corr, coef_scale,
                   tol, max_sweeps):
    """Dykstra's cyclic projection onto an intersection of block-sum slabs.

    The point `x` is a flat row-major array with row stride `ncols`; atom
    ``a`` is the cell block ``rows r0[a]:r0[a]+nr[a], cols c0[a]:c0[a]+nc[a]``
    and its constraint is ``lo[a] <= sum(x over block) <= hi[a]``.  Because
    every slab normal is constant on its block, the Dykstra correction for
    atom ``a`` is a single per-cell scalar, kept in ``corr`` (updated in
    place, pass zeros for a fresh projection).

    ``coef_scale[a]`` converts a raw-sum violation into dual-coefficient
    units (``sqrt(h / #cells)``), in which `tol` is expressed.  Returns
    ``(sweeps_used, max_violation)`` with the violation measured on the
    returned `x`; iteration stops once both the violation and the last
    sweep's coefficient-space movement fall below `tol`.
    """
    x2 = x.reshape(-1, ncols) if ncols else x.reshape(1, -1)
    natoms = len(lo)
    cells = (nr * nc).astype(float)

    def block(a):
        return x2[r0[a]:r0[a] + nr[a], c0[a]:c0[a] + nc[a]]

    def measure():
        worst = 0.0
        for a in range(natoms):
            s = float(block(a).sum())
            viol = max(lo[a] - s, s - hi[a], 0.0) * coef_scale[a]
            if viol > worst:
                worst = viol
        return worst

    worst = measure()
    if worst <= tol:
        return 0, worst

    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        move = 0.0
        for a in range(natoms):
            blk = block(a)
            s = float(blk.sum()) + corr[a] * cells[a]
            t = min(max(s, lo[a]), hi[a])
            delta = (t - s) / cells[a]
            add = corr[a] + delta
            if add != 0.0:
                blk += add
            corr[a] = -delta
            shift = abs(add) * cells[a] * coef_scale[a]
            if shift > move:
                move = shift
        worst = measure()
        if worst <= tol and move <= tol:
            break
    return sweeps, worst

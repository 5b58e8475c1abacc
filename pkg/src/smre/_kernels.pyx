# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled projection kernel: cyclic Dykstra over block-sum slabs.

Mirrors smre._kernels_py; see there for the contract.
"""

import numpy as np
cimport numpy as cnp

IMPLEMENTATION = "cython"


cdef inline double _block_sum(double* x, Py_ssize_t ncols,
                              Py_ssize_t r0, Py_ssize_t c0,
                              Py_ssize_t nr, Py_ssize_t nc) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i, j
    cdef double* row
    for i in range(nr):
        row = x + (r0 + i) * ncols + c0
        for j in range(nc):
            s += row[j]
    return s


cdef inline void _block_add(double* x, Py_ssize_t ncols,
                            Py_ssize_t r0, Py_ssize_t c0,
                            Py_ssize_t nr, Py_ssize_t nc, double v) nogil:
    cdef Py_ssize_t i, j
    cdef double* row
    for i in range(nr):
        row = x + (r0 + i) * ncols + c0
        for j in range(nc):
            row[j] += v
    return


def dykstra_blocks(double[::1] x, Py_ssize_t ncols,
                   cnp.int64_t[::1] r0, cnp.int64_t[::1] c0,
                   cnp.int64_t[::1] nr, cnp.int64_t[::1] nc,
                   double[::1] lo, double[::1] hi,
                   double[::1] corr, double[::1] coef_scale,
                   double tol, Py_ssize_t max_sweeps):
    cdef Py_ssize_t natoms = lo.shape[0]
    cdef Py_ssize_t a, sweeps = 0
    cdef double s, t, delta, add, cells, viol, worst, move, shift
    cdef double* xp = &x[0]

    with nogil:
        worst = 0.0
        for a in range(natoms):
            s = _block_sum(xp, ncols, r0[a], c0[a], nr[a], nc[a])
            viol = lo[a] - s
            if s - hi[a] > viol:
                viol = s - hi[a]
            if viol < 0.0:
                viol = 0.0
            viol *= coef_scale[a]
            if viol > worst:
                worst = viol
        if worst <= tol:
            with gil:
                return 0, worst

        while sweeps < max_sweeps:
            sweeps += 1
            move = 0.0
            for a in range(natoms):
                cells = nr[a] * nc[a]
                s = _block_sum(xp, ncols, r0[a], c0[a], nr[a], nc[a]) \
                    + corr[a] * cells
                t = s
                if t < lo[a]:
                    t = lo[a]
                if t > hi[a]:
                    t = hi[a]
                delta = (t - s) / cells
                add = corr[a] + delta
                if add != 0.0:
                    _block_add(xp, ncols, r0[a], c0[a], nr[a], nc[a], add)
                corr[a] = -delta
                shift = add * cells * coef_scale[a]
                if shift < 0.0:
                    shift = -shift
                if shift > move:
                    move = shift
            worst = 0.0
            for a in range(natoms):
                s = _block_sum(xp, ncols, r0[a], c0[a], nr[a], nc[a])
                viol = lo[a] - s
                if s - hi[a] > viol:
                    viol = s - hi[a]
                if viol < 0.0:
                    viol = 0.0
                viol *= coef_scale[a]
                if viol > worst:
                    worst = viol
            if worst <= tol and move <= tol:
                break
    return sweeps, worst

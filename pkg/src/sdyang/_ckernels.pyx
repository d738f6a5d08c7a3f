# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled finite-difference kernels.

Arrays are 5-d: four lattice axes followed by one flattened axis of matrix
entries.  Values beyond the lattice ends are treated as zero, which makes
the same kernel serve as the derivative and (with a sign flip) its adjoint.
"""

import numpy as np

cdef void _diff3(const double[:, :, ::1] s, double[:, :, ::1] o, double c1, double c2) noexcept nogil:
    # axis 1 of a real (outer, n, inner) view; zero padding at both ends
    cdef Py_ssize_t no = s.shape[0], n = s.shape[1], ni = s.shape[2]
    cdef Py_ssize_t a, k, j
    cdef double p1, m1, p2, m2
    for a in range(no):
        for k in range(n):
            if k >= 2 and k < n - 2:
                for j in range(ni):
                    o[a, k, j] = c1 * (s[a, k + 1, j] - s[a, k - 1, j]) - c2 * (s[a, k + 2, j] - s[a, k - 2, j])
            else:
                for j in range(ni):
                    p1 = s[a, k + 1, j] if k + 1 < n else 0.0
                    m1 = s[a, k - 1, j] if k >= 1 else 0.0
                    p2 = s[a, k + 2, j] if k + 2 < n else 0.0
                    m2 = s[a, k - 2, j] if k >= 2 else 0.0
                    o[a, k, j] = c1 * (p1 - m1) - c2 * (p2 - m2)


def _view3(a, axis):
    # complex entries as interleaved doubles; the stencil has real weights
    sh = a.shape
    outer = int(np.prod(sh[:axis], dtype=np.int64))
    inner = int(np.prod(sh[axis + 1:], dtype=np.int64))
    return a.view(np.float64).reshape(outer, sh[axis], 2 * inner)


def diff_axis(src, out, int axis, double scale):
    """out = scale * D4(src) along ``axis`` with zero padding."""
    s = np.ascontiguousarray(src, dtype=complex)
    o = np.empty_like(s)
    _diff3(_view3(s, axis), _view3(o, axis), scale * 8.0 / 12.0, scale / 12.0)
    out[...] = o


def wirtinger_pair(src, out, int axis, double scale_a, double scale_b, double sign):
    """out = 0.5*(D4 along axis - i*sign*D4 along axis+1), scaled per axis.

    With sign = +1 this is the holomorphic Wirtinger derivative for the
    coordinate pair (axis, axis+1); sign = -1 gives the anti-holomorphic one.
    """
    s = np.ascontiguousarray(src, dtype=complex)
    da = np.empty_like(s)
    db = np.empty_like(s)
    cdef double sa = 0.5 * scale_a
    cdef double sb = 0.5 * scale_b
    _diff3(_view3(s, axis), _view3(da, axis), sa * 8.0 / 12.0, sa / 12.0)
    _diff3(_view3(s, axis + 1), _view3(db, axis + 1), sb * 8.0 / 12.0, sb / 12.0)
    # da - i*sign*db on interleaved (re, im) pairs
    cdef double[::1] fa = da.view(np.float64).reshape(-1)
    cdef const double[::1] fb = db.view(np.float64).reshape(-1)
    cdef Py_ssize_t i, n = fa.shape[0] // 2
    with nogil:
        for i in range(n):
            fa[2 * i] = fa[2 * i] + sign * fb[2 * i + 1]
            fa[2 * i + 1] = fa[2 * i + 1] - sign * fb[2 * i]
    out[...] = da

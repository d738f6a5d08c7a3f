"""Pure numpy versions of the finite-difference kernels in _ckernels."""

import numpy as np


def diff_axis(src, out, axis, scale):
    src = np.asarray(src)
    n = src.shape[axis]
    pad = [(0, 0)] * src.ndim
    pad[axis] = (2, 2)
    p = np.pad(src, pad)

    def sl(k):
        idx = [slice(None)] * src.ndim
        idx[axis] = slice(k, k + n)
        return p[tuple(idx)]

    out[...] = (scale * 8.0 / 12.0) * (sl(3) - sl(1)) - (scale / 12.0) * (sl(4) - sl(0))


def wirtinger_pair(src, out, axis, scale_a, scale_b, sign):
    da = np.empty_like(out)
    db = np.empty_like(out)
    diff_axis(src, da, axis, 0.5 * scale_a)
    diff_axis(src, db, axis + 1, 0.5 * scale_b)
    out[...] = da - 1j * sign * db

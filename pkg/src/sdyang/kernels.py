"""Kernel selection: compiled extension when importable, numpy otherwise.

Set SDYANG_PURE_PYTHON=1 to force the numpy fallback.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "python"
if os.environ.get("SDYANG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels

_threads = 1


def set_threads(n):
    """Worker threads for lattice kernels.  Results do not depend on n."""
    global _threads
    _threads = max(1, int(n))


def get_threads():
    return _threads


def use_backend(name):
    """Switch between 'compiled' and 'python'; returns the previous name."""
    global _impl, BACKEND
    prev = BACKEND
    if name == "python":
        _impl, BACKEND = _pykernels, "python"
    elif name == "compiled":
        from . import _ckernels
        _impl, BACKEND = _ckernels, "compiled"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def _as5(a):
    a = np.ascontiguousarray(a, dtype=complex)
    return a.reshape(a.shape[:4] + (-1,))


def _run(fn, src, axes_used, *args):
    """Apply a pointwise-independent kernel, chunked over a free lattice axis."""
    shape = src.shape
    s5 = _as5(src)
    out = np.empty_like(s5)
    split = next(a for a in range(4) if a not in axes_used)
    n = s5.shape[split]
    nt = min(_threads, n)
    if nt <= 1:
        fn(s5, out, *args)
        return out.reshape(shape)
    bounds = np.linspace(0, n, nt + 1).astype(int)

    def work(i):
        idx = [slice(None)] * 5
        idx[split] = slice(bounds[i], bounds[i + 1])
        idx = tuple(idx)
        o = np.empty_like(out[idx])
        fn(s5[idx], o, *args)
        out[idx] = o

    with ThreadPoolExecutor(nt) as ex:
        list(ex.map(work, range(nt)))
    return out.reshape(shape)


def diff(src, axis, h):
    """4th-order central derivative along a lattice axis, zero padded."""
    return _run(_impl.diff_axis, src, (axis,), int(axis), 1.0 / h)


def wirtinger(src, pair, h, conjugate=False):
    """Wirtinger derivative on coordinate pair 0 (z) or 1 (w), zero padded."""
    axis = 2 * pair
    sign = -1.0 if conjugate else 1.0
    return _run(_impl.wirtinger_pair, src, (axis, axis + 1), axis,
                1.0 / h[axis], 1.0 / h[axis + 1], sign)

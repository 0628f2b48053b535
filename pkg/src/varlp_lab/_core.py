"""Backend selection for the hot kernels.

The compiled extension is used when importable; ``VARLP_PURE_PYTHON=1``
forces the numpy fallback.  ``BACKEND`` names the active choice.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_compiled = None
if os.environ.get("VARLP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def window_max_1d(avg, k: int, backend: str | None = None) -> np.ndarray:
    impl = _pick(backend)
    return impl.window_max_1d(np.ascontiguousarray(avg, dtype=float), int(k))


def window_max_2d(avg, k: int, backend: str | None = None) -> np.ndarray:
    impl = _pick(backend)
    return impl.window_max_2d(np.ascontiguousarray(avg, dtype=float), int(k))


def min_complement_sum(w, k_rows: int, k_cols: int, backend: str | None = None):
    """See :func:`varlp_lab._pykernels.min_complement_sum`."""
    w = np.ascontiguousarray(w, dtype=float)
    if _pick(backend) is _pykernels:
        return _pykernels.min_complement_sum(w, k_rows, k_cols)
    value, rows = _compiled.min_complement_rows(w, int(k_rows), int(k_cols))
    rows = np.asarray(rows, dtype=np.int64)
    colsums = w.sum(axis=0) - w[rows].sum(axis=0)
    order = np.argsort(colsums, kind="stable")
    return float(value), rows, np.sort(order[w.shape[1] - k_cols:])


def _pick(backend):
    if backend is None:
        return _compiled if _compiled is not None else _pykernels
    if backend == "python":
        return _pykernels
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")

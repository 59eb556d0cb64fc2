"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is fixed at import time. Set ``ICMT_PURE_NUMPY=1`` to force the
numpy path (useful on platforms where numba is unavailable or misbehaves, and
for benchmarking one path against the other). When numba itself fails to
import, the fallback is selected automatically.

Both backends implement the same three functions; the numpy versions in
``numpy_impl`` are the semantics of record.
"""

from __future__ import annotations

import os

from icmt.kernels import numpy_impl

_FORCE_NUMPY = os.environ.get("ICMT_PURE_NUMPY", "") == "1"

if not _FORCE_NUMPY:
    try:
        from icmt.kernels import numba_impl as _impl

        _BACKEND = "numba"
    except ImportError:
        _impl = numpy_impl  # type: ignore[assignment]
        _BACKEND = "numpy"
else:
    _impl = numpy_impl  # type: ignore[assignment]
    _BACKEND = "numpy"

accumulate_postings = _impl.accumulate_postings
l2_sq = _impl.l2_sq
coverage_gains = _impl.coverage_gains


def backend_name() -> str:
    """Active backend: "numba" or "numpy"."""
    return _BACKEND

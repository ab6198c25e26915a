"""Kernel backend selection.

The hot numeric paths exist twice: a numba-jitted version and a plain
vectorized numpy version.  ``DEMO_GAUGE_BACKEND`` picks one at import time:

* ``auto`` (default) - numba when importable, numpy otherwise
* ``numba`` - require numba, fail loudly if it is missing
* ``numpy`` - always use the pure numpy fallback

``BACKEND`` records which implementation is live.  Both modules stay
importable directly (``numpy_impl`` / ``numba_impl``) for benchmarks and
cross-checks.
"""

from __future__ import annotations

import os

_CHOICES = ("auto", "numba", "numpy")


def resolve_backend(requested: str):
    """Return (implementation module, backend name) for a backend request."""
    name = requested.strip().lower()
    if name not in _CHOICES:
        raise ValueError(
            f"DEMO_GAUGE_BACKEND must be one of {_CHOICES}, got {requested!r}"
        )
    if name == "numpy":
        from . import numpy_impl

        return numpy_impl, "numpy"
    if name == "numba":
        from . import numba_impl

        return numba_impl, "numba"
    try:
        from . import numba_impl

        return numba_impl, "numba"
    except ImportError:
        from . import numpy_impl

        return numpy_impl, "numpy"


_impl, BACKEND = resolve_backend(os.environ.get("DEMO_GAUGE_BACKEND", "auto"))

fk_series = _impl.fk_series
jacobian_series = _impl.jacobian_series
manipulability_series = _impl.manipulability_series
limit_clearance_series = _impl.limit_clearance_series
legibility_entropies = _impl.legibility_entropies
lloyd = _impl.lloyd

__all__ = [
    "BACKEND",
    "resolve_backend",
    "fk_series",
    "jacobian_series",
    "manipulability_series",
    "limit_clearance_series",
    "legibility_entropies",
    "lloyd",
]

"""Compute-backend selection.

The env var ``DYNCOV_BACKEND`` picks the hot-kernel implementation:

* ``numba`` - require the numba kernels (ImportError if numba is absent);
* ``numpy`` - force the pure-numpy fallback;
* unset/empty - use numba when importable, else fall back to numpy.

The choice is made once at import time. ``backend_name()`` reports it;
the benchmark under ``benchmarks/`` imports both modules directly and is
unaffected by the flag.
"""

import os

_requested = os.environ.get("DYNCOV_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"DYNCOV_BACKEND={_requested!r} not recognized; use 'numba' or 'numpy'"
    )

if _requested == "numpy":
    from . import _kernels_numpy as _impl

    _name = "numpy"
elif _requested == "numba":
    from . import _kernels_numba as _impl

    _name = "numba"
else:
    try:
        from . import _kernels_numba as _impl

        _name = "numba"
    except ImportError:
        from . import _kernels_numpy as _impl

        _name = "numpy"

local_linear_anchors = _impl.local_linear_anchors
beta_step2_system = _impl.beta_step2_system
garch_sigma2_path = _impl.garch_sigma2_path
garch_nll_terms = _impl.garch_nll_terms
nw_moments = _impl.nw_moments


def backend_name():
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return _name

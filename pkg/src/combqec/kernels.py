"""Backend selection for the trajectory-stepping kernels.

The compiled extension is used when available; set ``COMBQEC_PURE_PYTHON=1``
to force the numpy fallback. Both backends implement identical contracts and
are cross-checked in the test suite.
"""

import os

from . import _kernels_py

if os.environ.get("COMBQEC_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl

        BACKEND = "native"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

propagate_until = _impl.propagate_until
propagate_repeat_until = _impl.propagate_repeat_until
apply_sequence = _impl.apply_sequence


def backend_name() -> str:
    return BACKEND

"""Select the kernel implementation at import time.

The compiled extension is used when importable; set ``ELGHP_PURE_PYTHON=1``
to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("ELGHP_PURE_PYTHON", "") not in ("", "0"):
    _kernels = None
else:
    try:
        from . import _kernels
    except ImportError:
        _kernels = None

if _kernels is not None:
    BACKEND = "cython"
    code_histograms = _kernels.code_histograms
    l1_distances = _kernels.l1_distances
    l1_nearest = _kernels.l1_nearest
else:
    BACKEND = "python"
    code_histograms = _fallback.code_histograms
    l1_distances = _fallback.l1_distances
    l1_nearest = _fallback.l1_nearest


def available_backends():
    """Map backend name to module for every implementation importable here."""
    found = {"python": _fallback}
    try:
        from . import _kernels as compiled
    except ImportError:
        pass
    else:
        found["cython"] = compiled
    return found

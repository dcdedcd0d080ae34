"""Hot numerical kernels.

The compiled extension ``_core`` is used when it was built; otherwise the
numpy implementations in ``_fallback`` are used. Set ``SPHEREPACK_PURE=1`` to
force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
convolve_merge = _fallback.convolve_merge
tilted_moments = _fallback.tilted_moments

if os.environ.get("SPHEREPACK_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:
        _core = None
    else:
        BACKEND = "compiled"
        convolve_merge = _core.convolve_merge
        tilted_moments = _core.tilted_moments
else:
    _core = None

__all__ = ["BACKEND", "convolve_merge", "tilted_moments"]

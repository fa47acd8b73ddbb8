"""Hot inner loops, compiled when available.

The Cython extension ``_ckernels`` is used if it was built; otherwise the
numpy implementations in ``_pykernels`` are used. Setting the environment
variable ``REGCOV_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("REGCOV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

weighted_scatter = _impl.weighted_scatter
normalized_scatter = _impl.normalized_scatter
quad_forms = _impl.quad_forms
shift_mc_eigs = _impl.shift_mc_eigs
anscm_closed_eigs = _impl.anscm_closed_eigs

__all__ = [
    "BACKEND",
    "weighted_scatter",
    "normalized_scatter",
    "quad_forms",
    "shift_mc_eigs",
    "anscm_closed_eigs",
]

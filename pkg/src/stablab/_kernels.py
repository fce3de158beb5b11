"""Select the kernel implementation: compiled extension if available.

Set ``STABLAB_PURE_PYTHON=1`` to force the numpy fallback (used by the
benchmark and the backend-equivalence tests).
"""

import os

if os.environ.get("STABLAB_PURE_PYTHON"):
    from . import _pykernels as impl
else:
    try:
        from . import _speedups as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykernels as impl

BACKEND = impl.BACKEND
perm_compose = impl.perm_compose
perm_invert = impl.perm_invert
hamming_count = impl.hamming_count
eval_word_perm = impl.eval_word_perm
homdist_scan = impl.homdist_scan
jacobi_eigvalsh = impl.jacobi_eigvalsh

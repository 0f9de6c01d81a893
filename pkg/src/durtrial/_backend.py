"""Select the IRLS kernel implementation at import time.

``DURTRIAL_BACKEND`` may be ``auto`` (default), ``compiled`` or ``python``.
"""
from __future__ import annotations

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

_choice = os.environ.get("DURTRIAL_BACKEND", "auto").lower()

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _choice == "python":
    kernel = _kernels_py
elif _choice == "compiled":
    if _compiled is None:
        raise ImportError("DURTRIAL_BACKEND=compiled but the extension is not built")
    kernel = _compiled
else:
    kernel = _compiled if _compiled is not None else _kernels_py
    if _compiled is None:
        log.info("compiled kernel unavailable; using pure-Python IRLS")

BACKEND = "compiled" if kernel is _compiled else "python"
irls_subsets = kernel.irls_subsets

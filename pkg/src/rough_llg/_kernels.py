"""Kernel dispatch: compiled extension if importable, NumPy fallback otherwise.

Set ROUGH_LLG_PURE_PYTHON=1 to force the fallback (used by the benchmark and
by tests that compare the two implementations).  `backend()` reports which
one is active.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("ROUGH_LLG_PURE_PYTHON") == "1":
    _impl = _kernels_py
    HAVE_COMPILED = False
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]

        HAVE_COMPILED = True
    except ImportError:
        _impl = _kernels_py
        HAVE_COMPILED = False

pvar_powersum_additive = _impl.pvar_powersum_additive
pvar_powersum_chen_mode = _impl.pvar_powersum_chen_mode
chen_defect_scan_mode = _impl.chen_defect_scan_mode


def backend() -> str:
    return "compiled" if HAVE_COMPILED else "numpy"

"""Hot state-vector kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels`` is used. Set ``KZBENCH_BACKEND=python``
to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

_forced = os.environ.get("KZBENCH_BACKEND", "").lower()

if _forced == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

rx = _impl.rx
rx_all = _impl.rx_all
rzz = _impl.rzz
pauli = _impl.pauli
apply_phase = _impl.apply_phase
zz_expectations = _impl.zz_expectations
trajectory = _impl.trajectory

__all__ = [
    "BACKEND",
    "apply_phase",
    "pauli",
    "rx",
    "rx_all",
    "rzz",
    "trajectory",
    "zz_expectations",
]

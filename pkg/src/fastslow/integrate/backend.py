"""Backend selection: compiled kernels when available, pure Python otherwise.

Set FASTSLOW_BACKEND=pure or FASTSLOW_BACKEND=compiled to force a choice
(forcing `compiled` raises if the extension is not importable).
"""

from __future__ import annotations

import os

from . import _pure

_requested = os.environ.get("FASTSLOW_BACKEND", "auto")

if _requested not in ("auto", "pure", "compiled"):
    raise RuntimeError(
        f"FASTSLOW_BACKEND must be auto, pure or compiled, got {_requested!r}"
    )

if _requested == "pure":
    _impl = _pure
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise RuntimeError(
                "FASTSLOW_BACKEND=compiled but fastslow.integrate._kernels "
                "is not built; reinstall with Cython available"
            )
        _impl = _pure

BACKEND_NAME: str = _impl.BACKEND_NAME
dopri5_run = _impl.dopri5_run
sdirk3_run = _impl.sdirk3_run

STATUS_DONE = _pure.STATUS_DONE
STATUS_EVENT = _pure.STATUS_EVENT
STATUS_MAXSTEPS = _pure.STATUS_MAXSTEPS
STATUS_FAILED = _pure.STATUS_FAILED


def get_backend(name: str):
    """Explicit backend lookup, used by the benchmark script."""
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")

"""Numerical integration on fast and slow time scales with event detection.

Stepping loops exist twice — a compiled extension (`_kernels`) and a pure
Python reference (`_pure`) — selected at import time; see `backend`.
"""

from .api import (
    EVENT_TOL,
    EventRecord,
    EventSpec,
    IntegratorConfig,
    Trajectory,
    integrate,
    lyapunov_along,
)
from .backend import BACKEND_NAME, get_backend
from .compile import CompiledEvents, CompiledField

__all__ = [
    "BACKEND_NAME",
    "EVENT_TOL",
    "CompiledEvents",
    "CompiledField",
    "EventRecord",
    "EventSpec",
    "IntegratorConfig",
    "Trajectory",
    "get_backend",
    "integrate",
    "lyapunov_along",
]

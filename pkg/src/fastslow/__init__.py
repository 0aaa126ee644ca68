"""Fast-slow systems with unbounded critical manifolds.

Exact polynomial algebra, projective localization and weighted blow-up,
chart-local analysis, slow-manifold asymptotics, numerical integration and
the departure/scaling experiments built on top of them.
"""

__version__ = "0.1.0"

SCHEMA_VERSION = 1

"""Two-tier velocity-field surrogate.

A dense network trained by Levenberg-Marquardt with Bayesian regularization maps
``(x, y, z, Re, Pr, T, p)`` to ``(u, v, w)`` on periodic snapshots; its predictions,
with a local Reynolds-number feature, feed a Kohonen self-organizing map.
"""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("velomap")
except PackageNotFoundError:
    __version__ = "0.0.0"

__all__ = ["__version__"]

"""Denoising diffusion probabilistic modeling on the SPD-matrix manifold."""

try:
    from spdddpm._spdddpm import *  # noqa: F401,F403
    from spdddpm._spdddpm import __doc__  # noqa: F401
except ImportError:  # build-tree layout: extension module next to the package
    from _spdddpm import *  # noqa: F401,F403
    from _spdddpm import __doc__  # noqa: F401

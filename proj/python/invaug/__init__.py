"""Invariance-constrained data augmentation: python bindings for the C++ core."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401

"""Nested Mach-Zehnder weak-trace toolkit."""

from ._nmzi import *  # noqa: F401,F403
from ._nmzi import __all__ as _native_all

__all__ = list(_native_all)

"""Grid-world human-robot teaming with explicability-aware planning."""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND  # noqa: F401

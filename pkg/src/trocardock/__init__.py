"""trocardock: simulator and control stack for trocar docking with a redundant arm."""

from .kernels import active_backend

__version__ = "0.1.0"

__all__ = ["active_backend", "__version__"]

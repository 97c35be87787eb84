"""Static object detection in frame sequences by dual-foreground differencing."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]

"""camolabel-sidecar: HTTP service hosting the segmentation, detection,
and image-text scoring models behind the fixed wire protocol."""

from .config import SidecarConfig
from .server import create_server, serve

__version__ = "0.1.0"

__all__ = ["SidecarConfig", "create_server", "serve", "__version__"]

"""pllbridge: serve pretrained masked LMs behind the pllbench wire protocol."""

from .models import HfMaskedModel, MaskedModel, StartupError, ToyTableModel, load_model
from .server import BridgeServer, handle_request

__version__ = "0.1.0"

__all__ = [
    "BridgeServer",
    "HfMaskedModel",
    "MaskedModel",
    "StartupError",
    "ToyTableModel",
    "handle_request",
    "load_model",
    "__version__",
]

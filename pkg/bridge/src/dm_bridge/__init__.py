"""HTTP inference sidecar for discourse-marker augmentation and mask filling."""

from .backends import Backend, EchoBackend, Seq2SeqBackend, load_backend
from .config import BridgeConfig
from .errors import BridgeError, ConfigError, ModelLoadError
from .service import create_app

__all__ = [
    "Backend",
    "BridgeConfig",
    "BridgeError",
    "ConfigError",
    "EchoBackend",
    "ModelLoadError",
    "Seq2SeqBackend",
    "create_app",
    "load_backend",
]

__version__ = "0.1.0"

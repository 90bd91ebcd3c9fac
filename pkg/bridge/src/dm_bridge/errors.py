"""Exception hierarchy for the bridge service."""


class BridgeError(Exception):
    """Base class for everything this package raises on purpose."""


class ConfigError(BridgeError):
    """A configuration value is missing, malformed, or out of range."""


class ModelLoadError(BridgeError):
    """The configured model identifier cannot be resolved to a usable backend."""

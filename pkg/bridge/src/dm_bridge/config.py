"""Service configuration, read from the environment at startup."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import ConfigError

__all__ = ["BridgeConfig"]


def _positive_int(raw: str, name: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class BridgeConfig:
    """Everything the service needs to know before it can answer requests.

    ``model`` names the backend: the literal ``"echo"`` (a test double that
    returns its input unchanged) or any checkpoint path / hub identifier a
    sequence-to-sequence model can be loaded from.  Anything else is rejected
    when the app is built, not on first request.
    """

    model: str = "echo"
    device: str = "cpu"
    # Inputs longer than this many characters are refused with 413 rather
    # than silently truncated.
    max_input_chars: int = 4000
    num_beams: int = 1
    max_new_tokens: int = 64
    mask_token: str = "<mask>"
    # How many ranked fills /v1/fill-mask returns at most.
    candidate_count: int = 5
    # Pass fraction required by the insertion-only smoke check (recorded
    # here so the measured statistic is always comparable to something).
    smoke_threshold: float = field(default=0.9)

    def __post_init__(self):
        if not self.model.strip():
            raise ConfigError("model identifier must be non-empty")
        if self.max_input_chars <= 0:
            raise ConfigError(f"max_input_chars must be positive, got {self.max_input_chars}")
        if self.num_beams < 1:
            raise ConfigError(f"num_beams must be >= 1, got {self.num_beams}")
        if self.max_new_tokens < 1:
            raise ConfigError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")
        if self.candidate_count < 1:
            raise ConfigError(f"candidate_count must be >= 1, got {self.candidate_count}")
        if not self.mask_token:
            raise ConfigError("mask_token must be non-empty")
        if not 0.0 < self.smoke_threshold <= 1.0:
            raise ConfigError(f"smoke_threshold must be in (0, 1], got {self.smoke_threshold}")

    @classmethod
    def from_env(cls, env: "os._Environ[str] | dict[str, str] | None" = None) -> "BridgeConfig":
        """Build a config from BRIDGE_* variables, defaulting sensibly."""
        if env is None:
            env = os.environ
        kwargs: dict = {}
        if env.get("BRIDGE_MODEL"):
            kwargs["model"] = env["BRIDGE_MODEL"]
        if env.get("BRIDGE_DEVICE"):
            kwargs["device"] = env["BRIDGE_DEVICE"]
        if env.get("BRIDGE_MAXLEN"):
            kwargs["max_input_chars"] = _positive_int(env["BRIDGE_MAXLEN"], "BRIDGE_MAXLEN")
        if env.get("BRIDGE_BEAMS"):
            kwargs["num_beams"] = _positive_int(env["BRIDGE_BEAMS"], "BRIDGE_BEAMS")
        if env.get("BRIDGE_MAX_NEW_TOKENS"):
            kwargs["max_new_tokens"] = _positive_int(
                env["BRIDGE_MAX_NEW_TOKENS"], "BRIDGE_MAX_NEW_TOKENS"
            )
        return cls(**kwargs)

"""Server configuration."""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class ServerConfig:
    """Everything the server needs to come up.

    `scorer_model` is either the built-in "tiny-char" (a small byte-level
    model with seeded random weights, deterministic and offline) or any
    identifier `transformers` can load. `fusion_checkpoint` must point at a
    checkpoint produced by training; a missing or unreadable file fails at
    startup rather than per request.
    """

    host: str = "127.0.0.1"
    port: int = 8000
    scorer_model: str = "tiny-char"
    fusion_checkpoint: Optional[str] = None
    beam_cap: int = 10
    max_length: int = 512

    def __post_init__(self):
        if self.beam_cap < 1:
            raise ValueError("beam size cap must be at least 1")
        if self.max_length < 1:
            raise ValueError("max input length must be at least 1")

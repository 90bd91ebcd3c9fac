"""The HTTP surface: three versioned endpoints over one loaded backend."""

from __future__ import annotations

import logging
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .backends import Backend, load_backend
from .config import BridgeConfig

__all__ = ["create_app"]

log = logging.getLogger("dm_bridge")


class AugmentIn(BaseModel):
    text: str


class AugmentOut(BaseModel):
    augmented_text: str


class FillMaskIn(BaseModel):
    text: str


class FillMaskOut(BaseModel):
    candidates: list[str]


def create_app(config: Optional[BridgeConfig] = None, backend: Optional[Backend] = None) -> FastAPI:
    """Build the service, loading the configured model up front.

    An unresolvable model identifier raises here — the process refuses to
    start rather than failing on the first request.  ``backend`` can be
    injected directly for tests.
    """
    if config is None:
        config = BridgeConfig.from_env()
    if backend is None:
        backend = load_backend(config)

    app = FastAPI(title="dm-bridge", version="0.1.0")

    def _check_length(text: str) -> None:
        if len(text) > config.max_input_chars:
            raise HTTPException(
                status_code=413,
                detail=f"input is {len(text)} characters, limit is {config.max_input_chars}",
            )

    @app.post("/v1/augment", response_model=AugmentOut)
    def augment(body: AugmentIn) -> AugmentOut:
        _check_length(body.text)
        if not body.text.strip():
            raise HTTPException(status_code=400, detail="text must be non-empty")
        try:
            rewritten = backend.augment(body.text)
        except Exception:
            log.exception("backend failed to augment")
            raise HTTPException(status_code=500, detail="augmentation failed") from None
        return AugmentOut(augmented_text=rewritten)

    @app.post("/v1/fill-mask", response_model=FillMaskOut)
    def fill_mask(body: FillMaskIn) -> FillMaskOut:
        _check_length(body.text)
        masks = body.text.count(config.mask_token)
        if masks != 1:
            raise HTTPException(
                status_code=400,
                detail=f"need exactly one {config.mask_token} placeholder, found {masks}",
            )
        try:
            candidates = backend.fill_mask(body.text)
        except Exception:
            log.exception("backend failed to fill mask")
            raise HTTPException(status_code=500, detail="fill-mask failed") from None
        return FillMaskOut(candidates=candidates)

    @app.get("/v1/health")
    def health() -> dict:
        return {"model": config.model, "device": config.device, "ready": True}

    return app

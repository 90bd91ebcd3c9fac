"""Model backends: the echo double and a transformers seq2seq wrapper.

Each backend answers two calls: ``augment(text)`` rewrites a paragraph, and
``fill_mask(text)`` proposes ranked fills for the single mask placeholder the
service has already validated.  Backends hold no per-request state; the
transformers wrapper serializes model access behind a lock so the service can
accept concurrent requests safely.
"""

from __future__ import annotations

import threading
from typing import Protocol, runtime_checkable

from .config import BridgeConfig
from .errors import ModelLoadError

__all__ = ["Backend", "EchoBackend", "Seq2SeqBackend", "load_backend"]


@runtime_checkable
class Backend(Protocol):
    def augment(self, text: str) -> str: ...

    def fill_mask(self, text: str) -> list[str]: ...


class EchoBackend:
    """Test double: augmentation is the identity, mask filling knows nothing.

    Exists so the service contract (routing, validation, error mapping) can be
    exercised without model weights.
    """

    def augment(self, text: str) -> str:
        return text

    def fill_mask(self, text: str) -> list[str]:
        return []


class Seq2SeqBackend:
    """Greedy/beam generation over a local or hub seq2seq checkpoint.

    Deterministic by construction: sampling is off, the seed is pinned at
    load, and generation settings come from the config.  All calls into the
    model run under one lock.
    """

    def __init__(self, config: BridgeConfig):
        try:
            import torch
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(
                "transformers/torch are not installed; install dm-bridge[models]"
            ) from exc
        self._config = config
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(config.model)
            self._model = AutoModelForSeq2SeqLM.from_pretrained(config.model)
        except (OSError, ValueError, EnvironmentError) as exc:
            raise ModelLoadError(
                f"{config.model!r} is neither a built-in backend name nor a loadable checkpoint"
            ) from exc
        self._model.to(config.device)
        self._model.eval()
        torch.manual_seed(0)
        self._torch = torch
        self._lock = threading.Lock()

    def _generate(self, text: str, num_return_sequences: int = 1) -> list[str]:
        cfg = self._config
        with self._lock:
            inputs = self._tokenizer(text, return_tensors="pt", truncation=True)
            inputs = {k: v.to(cfg.device) for k, v in inputs.items()}
            with self._torch.no_grad():
                out = self._model.generate(
                    **inputs,
                    do_sample=False,
                    num_beams=max(cfg.num_beams, num_return_sequences),
                    num_return_sequences=num_return_sequences,
                    max_new_tokens=cfg.max_new_tokens,
                )
            return [
                self._tokenizer.decode(seq, skip_special_tokens=True).strip() for seq in out
            ]

    def augment(self, text: str) -> str:
        return self._generate(text, num_return_sequences=1)[0]

    def fill_mask(self, text: str) -> list[str]:
        cfg = self._config
        before, after = text.split(cfg.mask_token, 1)
        model_mask = self._tokenizer.mask_token or "<extra_id_0>"
        candidates = []
        for raw in self._generate(
            before + model_mask + after, num_return_sequences=cfg.candidate_count
        ):
            candidates.append(self._extract_fill(raw, before.strip(), after.strip()))
        # rank order comes from beam score order; keep first occurrence only
        seen: set[str] = set()
        unique = []
        for cand in candidates:
            if cand not in seen:
                seen.add(cand)
                unique.append(cand)
        return unique

    @staticmethod
    def _extract_fill(output: str, before: str, after: str) -> str:
        # sentinel-style models answer "<extra_id_0> fill <extra_id_1> ..."
        for opener, closer in (("<extra_id_0>", "<extra_id_1>"),):
            if opener in output:
                segment = output.split(opener, 1)[1]
                return segment.split(closer, 1)[0].strip()
        # full-sentence models echo the context around the fill
        fill = output
        if before and fill.startswith(before):
            fill = fill[len(before):]
        if after and fill.endswith(after):
            fill = fill[: len(fill) - len(after)]
        return fill.strip()


def load_backend(config: BridgeConfig) -> Backend:
    """Resolve the configured model identifier, failing fast on junk."""
    if config.model == "echo":
        return EchoBackend()
    return Seq2SeqBackend(config)

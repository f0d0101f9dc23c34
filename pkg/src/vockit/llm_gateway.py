"""Prompt rendering and batch extraction against an HTTP LLM backend.

Two prompt renderers exist: the engineered base prompt and the tagged
fine-tuning prompt. Batch extraction posts one chat-completion request per
verbatim with bounded concurrency, per-item retries, and input-order
reassembly; failed items carry an error marker instead of being dropped.
"""

from __future__ import annotations

import asyncio
import logging
import os
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import httpx

from .corpus import Verbatim
from .jsonlio import read_records, write_records

log = logging.getLogger(__name__)

STYLE_BASE = "base"
STYLE_SFT = "sft"
PROMPT_STYLES = (STYLE_BASE, STYLE_SFT)

EMPTY_MARKER = "[]"
SFT_TAG = "<GPT-VOC>"

_BASE_TEMPLATE = (
    "For a {category}, identify a customer need from the user review. "
    "If no need is found, return []. Review: {review}"
)
_QUOTES = "\"'“”‘’"


@dataclass
class BackendConfig:
    endpoint_url: str
    model_name: str
    max_in_flight: int = 4
    timeout_s: float = 60.0
    max_retries: int = 3
    decoding: dict = field(default_factory=lambda: {"temperature": 0})
    backoff_base_s: float = 0.5
    backoff_cap_s: float = 8.0
    auth_env: str = "VOC_API_TOKEN"

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


@dataclass(frozen=True)
class Extraction:
    verbatim_id: str
    raw_response: str
    statement: str | None
    prompt_style: str
    model_name: str
    latency_s: float
    attempts: int = 1
    error: str | None = None


def render_prompt_base(category: str, review_text: str) -> str:
    """Render the engineered prompt for the off-the-shelf model, byte-exactly."""
    if not category:
        raise ValueError("category must be non-empty")
    if not review_text:
        raise ValueError("review_text must be non-empty")
    return _BASE_TEMPLATE.format(category=category, review=review_text)


def render_prompt_sft(category: str, verbatim_text: str) -> str:
    """Render the tagged fine-tuning prompt: task tag, category attribute, newline, verbatim."""
    if not category:
        raise ValueError("category must be non-empty")
    if not verbatim_text:
        raise ValueError("verbatim_text must be non-empty")
    if '"' in category:
        raise ValueError("category may not contain a double quote")
    return f'{SFT_TAG} <PRODUCT_CATEGORY="{category}">\n{verbatim_text}'


def parse_prompt_sft(prompt: str) -> tuple[str, str]:
    """Inverse of render_prompt_sft; raises ValueError if the grammar does not match."""
    prefix = f'{SFT_TAG} <PRODUCT_CATEGORY="'
    if not prompt.startswith(prefix):
        raise ValueError("prompt does not start with the tagged header")
    rest = prompt[len(prefix):]
    end = rest.find('">\n')
    if end < 0:
        raise ValueError("prompt header is not terminated")
    category, text = rest[:end], rest[end + len('">\n'):]
    if not category or '"' in category:
        raise ValueError("bad category in prompt header")
    if not text:
        raise ValueError("prompt has no verbatim text")
    return category, text


def parse_output(raw: str) -> str | None:
    """Turn a raw model response into a statement, or None for the empty marker.

    Whitespace is trimmed; one layer of surrounding quotes is stripped when
    the whole response is quoted. An empty response parses as None and is
    logged as anomalous.
    """
    s = raw.strip()
    if not s:
        log.warning("empty model response treated as no-need")
        return None
    if s == EMPTY_MARKER:
        return None
    if len(s) >= 2 and s[0] in _QUOTES and s[-1] in _QUOTES:
        inner = s[1:-1].strip()
        if inner:
            s = inner
    return None if s == EMPTY_MARKER else s


def extract_batch(
    verbatims: Sequence[Verbatim],
    style: str,
    category: str,
    config: BackendConfig,
    transport: httpx.AsyncBaseTransport | None = None,
) -> list[Extraction]:
    """Extract one statement per verbatim; output order equals input order.

    `transport` is a test seam for injecting a scripted httpx transport.
    """
    return asyncio.run(extract_batch_async(verbatims, style, category, config, transport))


async def extract_batch_async(
    verbatims: Sequence[Verbatim],
    style: str,
    category: str,
    config: BackendConfig,
    transport: httpx.AsyncBaseTransport | None = None,
) -> list[Extraction]:
    if style not in PROMPT_STYLES:
        raise ValueError(f"unknown prompt style: {style!r}")
    render = render_prompt_base if style == STYLE_BASE else render_prompt_sft
    # render everything up front so bad inputs abort before any request
    prompts = [render(category, v.text) for v in verbatims]
    semaphore = asyncio.Semaphore(config.max_in_flight)
    headers = {}
    token = os.environ.get(config.auth_env)
    if token:
        headers["Authorization"] = f"Bearer {token}"

    async with httpx.AsyncClient(
        transport=transport, timeout=config.timeout_s, headers=headers
    ) as client:

        async def one(verbatim: Verbatim, prompt: str) -> Extraction:
            body = {
                "model": config.model_name,
                "messages": [{"role": "user", "content": prompt}],
                **config.decoding,
            }
            started = time.perf_counter()
            last_error = "no attempts made"
            for attempt in range(1, config.max_retries + 2):
                if attempt > 1:
                    await asyncio.sleep(_backoff_delay(config, attempt - 1))
                try:
                    async with semaphore:
                        response = await client.post(config.endpoint_url, json=body)
                    response.raise_for_status()
                    content = response.json()["choices"][0]["message"]["content"]
                    if not isinstance(content, str):
                        raise ValueError("message content is not a string")
                except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
                    last_error = f"{type(exc).__name__}: {exc}"
                    continue
                return Extraction(
                    verbatim_id=verbatim.verbatim_id,
                    raw_response=content,
                    statement=parse_output(content),
                    prompt_style=style,
                    model_name=config.model_name,
                    latency_s=time.perf_counter() - started,
                    attempts=attempt,
                )
            return Extraction(
                verbatim_id=verbatim.verbatim_id,
                raw_response="",
                statement=None,
                prompt_style=style,
                model_name=config.model_name,
                latency_s=time.perf_counter() - started,
                attempts=config.max_retries + 1,
                error=last_error,
            )

        return list(await asyncio.gather(*(one(v, p) for v, p in zip(verbatims, prompts))))


def _backoff_delay(config: BackendConfig, failures: int) -> float:
    base = config.backoff_base_s * (2 ** (failures - 1))
    return min(base + random.uniform(0, config.backoff_base_s), config.backoff_cap_s)


def write_extractions(path: str | Path, extractions: Sequence[Extraction]) -> None:
    write_records(path, (
        {
            "verbatim_id": e.verbatim_id,
            "prompt_style": e.prompt_style,
            "model_name": e.model_name,
            "statement": e.statement,
            "raw_response": e.raw_response,
            "latency_ms": round(e.latency_s * 1000.0, 3),
            "error": e.error,
        }
        for e in extractions
    ))


def read_extractions(path: str | Path) -> list[Extraction]:
    extractions = []
    for lineno, record in read_records(path):
        try:
            extractions.append(Extraction(
                verbatim_id=record["verbatim_id"],
                raw_response=record.get("raw_response", ""),
                statement=record.get("statement"),
                prompt_style=record.get("prompt_style", STYLE_SFT),
                model_name=record.get("model_name", ""),
                latency_s=float(record.get("latency_ms", 0.0)) / 1000.0,
                error=record.get("error"),
            ))
        except KeyError as exc:
            raise ValueError(f"{Path(path).name}:{lineno}: bad extraction record ({exc})") from exc
    return extractions

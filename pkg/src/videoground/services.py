"""HTTP clients for the external model services, plus the reply cache.

Chat endpoints speak the ubiquitous chat-completions wire shape; the
segmentation endpoint speaks the small ``POST /v1/segment`` contract.
Both clients take an injectable ``transport`` callable so tests and the
annotation pipeline can run fully offline. Credentials never appear in
cache keys, cache files, or recorded provenance.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import ChatFailure, SegFailure, UnparseableReply
from .masks import BoundingBox, RleMask, rle_from_string

__all__ = [
    "RetryPolicy",
    "ChatClient",
    "SegClient",
    "PromptCache",
    "CachedChat",
    "ChatStep",
    "image_digest",
]


def image_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _requests_transport(url, headers, payload, timeout):
    resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
    return resp.status_code, resp.json() if resp.content else {}


def _requests_get(url, timeout):
    resp = requests.get(url, timeout=timeout)
    return resp.status_code, resp.json() if resp.content else {}


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff: float = 0.5  # seconds, multiplied by the attempt number


class _RateLimiter:
    """Global minimum spacing between requests of one client."""

    def __init__(self, min_interval: float):
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._last = 0.0

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._last + self.min_interval - now
            if delay > 0:
                time.sleep(delay)
                now = time.monotonic()
            self._last = now


class ChatClient:
    """Minimal chat-completions client with retries and rate limiting."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 120.0,
        retry: RetryPolicy = RetryPolicy(),
        min_interval: float = 0.0,
        transport=None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self._api_key = api_key
        self.timeout = timeout
        self.retry = retry
        self._limiter = _RateLimiter(min_interval)
        self._transport = transport or _requests_transport

    @classmethod
    def from_env(cls, prefix: str = "CHAT", **kwargs) -> "ChatClient":
        """Build from ``{prefix}_API_BASE`` / ``{prefix}_API_KEY`` / ``{prefix}_MODEL``."""
        base = os.environ.get(f"{prefix}_API_BASE")
        model = os.environ.get(f"{prefix}_MODEL")
        if not base or not model:
            raise ChatFailure(
                f"{prefix}_API_BASE and {prefix}_MODEL must be set to use this client"
            )
        return cls(base, model, api_key=os.environ.get(f"{prefix}_API_KEY"), **kwargs)

    def chat(self, prompt: str, images: tuple[bytes, ...] = (), temperature: float = 0.0) -> str:
        """Send one user message (optionally with PNG attachments), return the reply text."""
        if images:
            content = [{"type": "text", "text": prompt}]
            for img in images:
                b64 = base64.b64encode(img).decode("ascii")
                content.append(
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:image/png;base64,{b64}"},
                    }
                )
        else:
            content = prompt
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        url = f"{self.base_url}/chat/completions"

        last_error = None
        for attempt in range(1, self.retry.max_attempts + 1):
            self._limiter.wait()
            try:
                status, body = self._transport(url, headers, payload, self.timeout)
            except Exception as exc:  # transport-level failure
                last_error = exc
            else:
                if status == 200:
                    try:
                        return body["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, TypeError) as exc:
                        raise ChatFailure(f"malformed chat response: {body!r}") from exc
                if status < 500:
                    raise ChatFailure(f"chat endpoint returned HTTP {status}: {body!r}")
                last_error = ChatFailure(f"HTTP {status}")
            if attempt < self.retry.max_attempts and self.retry.backoff > 0:
                time.sleep(self.retry.backoff * attempt)
        raise ChatFailure(
            f"chat request failed after {self.retry.max_attempts} attempts: {last_error}"
        )


class SegClient:
    """Client for the box-prompted segmentation service."""

    def __init__(self, base_url: str, timeout: float = 300.0, transport=None, get=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._transport = transport or _requests_transport
        self._get = get or _requests_get

    def healthz(self) -> bool:
        try:
            status, _ = self._get(f"{self.base_url}/healthz", self.timeout)
        except Exception:
            return False
        return status == 200

    def segment(
        self,
        frames: list[str],
        boxes: dict[int, dict[int, BoundingBox]],
        height: int,
        width: int,
    ) -> dict[int, dict[int, RleMask]]:
        """Request per-frame masks for box-prompted objects.

        ``frames`` entries are file paths or base64 image payloads; the
        response maps object id -> frame index -> RLE mask at the video
        geometry.
        """
        payload = {
            "frames": list(frames),
            "boxes": {
                str(oid): {str(f): [b.x, b.y, b.w, b.h] for f, b in per_frame.items()}
                for oid, per_frame in boxes.items()
            },
        }
        try:
            status, body = self._transport(
                f"{self.base_url}/v1/segment", {"Content-Type": "application/json"},
                payload, self.timeout,
            )
        except Exception as exc:
            raise SegFailure(f"segmentation request failed: {exc}") from exc
        if status != 200:
            raise SegFailure(f"segmentation endpoint returned HTTP {status}: {body!r}")
        try:
            return {
                int(oid): {
                    int(f): rle_from_string(rle, height, width)
                    for f, rle in per_frame.items()
                }
                for oid, per_frame in body.items()
            }
        except Exception as exc:
            raise SegFailure(f"malformed segmentation response: {exc}") from exc


# ----------------------------------------------------------------- reply cache

class PromptCache:
    """Content-addressed store of validated service replies.

    Keys hash (template id, substituted prompt, model name, attachment
    digests); values are written atomically so concurrent readers never
    see partial files.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(template_id: str, prompt: str, model: str, image_digests=()) -> str:
        material = "\x1f".join([template_id, prompt, model, *image_digests])
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as f:
            return json.load(f)["reply"]

    def put(self, key: str, reply: str) -> None:
        path = self._path(key)
        tmp = path.with_suffix(f".tmp.{os.getpid()}.{threading.get_ident()}")
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump({"reply": reply}, f, ensure_ascii=False)
        os.replace(tmp, path)


@dataclass
class ChatStep:
    """Provenance record of one chat call routed through the cache."""

    template_id: str
    prompt: str
    model: str
    image_digests: tuple[str, ...]
    reply: str
    cache_hit: bool

    def to_record(self) -> dict:
        return {
            "template_id": self.template_id,
            "prompt": self.prompt,
            "model": self.model,
            "image_digests": list(self.image_digests),
            "reply_sha256": hashlib.sha256(self.reply.encode("utf-8")).hexdigest(),
            "cache_hit": self.cache_hit,
        }


@dataclass
class CachedChat:
    """Chat client wrapper that caches validated replies and logs steps.

    ``validate`` (when given) must raise :class:`UnparseableReply` on a
    structurally bad reply; only replies that validate are cached, and a
    bad reply is retried against the live endpoint up to
    ``max_parse_retries`` extra times.
    """

    client: ChatClient
    cache: PromptCache | None = None
    log: list[ChatStep] = field(default_factory=list)
    max_parse_retries: int = 2

    def call(self, template_id: str, prompt: str, images: tuple[bytes, ...] = (),
             validate=None) -> str:
        digests = tuple(image_digest(img) for img in images)
        key = None
        if self.cache is not None:
            key = self.cache.key(template_id, prompt, self.client.model, digests)
            cached = self.cache.get(key)
            if cached is not None:
                self.log.append(
                    ChatStep(template_id, prompt, self.client.model, digests, cached, True)
                )
                return cached

        last_exc: Exception | None = None
        for _ in range(self.max_parse_retries + 1):
            reply = self.client.chat(prompt, images=images)
            if validate is None:
                break
            try:
                validate(reply)
                break
            except UnparseableReply as exc:
                last_exc = exc
        else:
            raise UnparseableReply(
                f"reply for template {template_id!r} never validated: {last_exc}"
            )

        if self.cache is not None and key is not None:
            self.cache.put(key, reply)
        self.log.append(
            ChatStep(template_id, prompt, self.client.model, digests, reply, False)
        )
        return reply

"""HTTP client for the oracle wire protocol.

Transport failures (connection errors, timeouts, 5xx replies) are retried
with exponential backoff up to a configured count. Malformed response
bodies and unparseable score text are never retried: the bytes already
arrived, asking again will not fix them.
"""
from __future__ import annotations

import logging
import os
import time

import numpy as np
import requests

from ..errors import OracleUnavailableError, ProtocolError
from .wire import (
    CaptionRequest,
    CaptionResponse,
    EmbedRequest,
    EmbedResponse,
    RealismRequest,
    RealismResponse,
    encode_png_b64,
)

logger = logging.getLogger(__name__)

TOKEN_ENV_VAR = "FREQADV_ORACLE_TOKEN"


class OracleClient:
    """Client for one oracle endpoint (plus an optional embed endpoint).

    Args:
        base_url: Root URL of the oracle server, e.g. "http://host:8008".
        embed_url: Root URL for /v1/embed if served elsewhere; defaults
            to base_url.
        token: Static bearer token. Falls back to the FREQADV_ORACLE_TOKEN
            environment variable; unset means no Authorization header.
        retries: Transport retry count on top of the first attempt.
        backoff: Base delay in seconds; attempt n sleeps backoff * 2**n.
        timeout: Per-request timeout in seconds.
    """

    def __init__(
        self,
        base_url: str,
        *,
        embed_url: str | None = None,
        token: str | None = None,
        retries: int = 3,
        backoff: float = 0.25,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.embed_base_url = (embed_url or base_url).rstrip("/")
        self.token = token if token is not None else os.environ.get(TOKEN_ENV_VAR)
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.session = session or requests.Session()
        self._embed_dim: int | None = None

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _post(self, base: str, path: str, body: str) -> str:
        url = f"{base}{path}"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                delay = self.backoff * (2 ** (attempt - 1))
                logger.debug("retrying %s after %.2fs (attempt %d)", url, delay, attempt)
                time.sleep(delay)
            try:
                resp = self.session.post(
                    url,
                    data=body.encode("utf-8"),
                    headers=self._headers(),
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code >= 500:
                last_error = OracleUnavailableError(
                    f"{url} answered {resp.status_code}: {resp.text[:200]}"
                )
                continue
            if resp.status_code != 200:
                # 4xx means our request was rejected; retrying cannot help.
                raise OracleUnavailableError(
                    f"{url} answered {resp.status_code}: {resp.text[:200]}"
                )
            return resp.text
        raise OracleUnavailableError(
            f"transport to {url} failed after {self.retries + 1} attempts: {last_error}"
        )

    def query_realism(self, image_png: bytes, query: str) -> RealismResponse:
        req = RealismRequest(image_png_b64=encode_png_b64(image_png), query=query)
        return RealismResponse.from_json(self._post(self.base_url, "/v1/realism", req.to_json()))

    def query_caption(self, image_png: bytes, query: str) -> CaptionResponse:
        req = CaptionRequest(image_png_b64=encode_png_b64(image_png), query=query)
        return CaptionResponse.from_json(self._post(self.base_url, "/v1/caption", req.to_json()))

    def embed_text(self, text: str) -> EmbedResponse:
        req = EmbedRequest(text=text)
        resp = EmbedResponse.from_json(
            self._post(self.embed_base_url, "/v1/embed", req.to_json())
        )
        if self._embed_dim is None:
            self._embed_dim = resp.dim
        elif resp.dim != self._embed_dim:
            raise ProtocolError(
                f"embedding dimension changed mid-run: {self._embed_dim} -> {resp.dim}"
            )
        return resp

    # Uniform oracle interface shared with the in-process mocks.

    def realism_raw(self, image_png: bytes, query: str) -> str:
        return self.query_realism(image_png, query).score_text

    def caption(self, image_png: bytes, query: str) -> str:
        return self.query_caption(image_png, query).caption

    def embed(self, text: str) -> np.ndarray:
        return np.asarray(self.embed_text(text).vector, dtype=np.float64)

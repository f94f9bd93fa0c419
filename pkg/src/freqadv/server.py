"""HTTP host for the in-process mock oracles.

This lets the full wire path (encode, POST, decode, parse) be exercised
without any model behind it. Responses are canonical JSON (sorted keys,
compact separators), so identical requests always produce identical
bytes.
"""
from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import EmptyInputError, FreqAdvError, InvalidImageError, ProtocolError
from .image import Image
from .oracle.mocks import (
    BandEnergyRealismMock,
    BucketCaptionMock,
    HashProjectionEmbedder,
)
from .oracle.wire import CaptionRequest, EmbedRequest, RealismRequest

logger = logging.getLogger(__name__)

DEFAULT_MAX_IMAGE_SIDE = 4096


@dataclass
class MockServerConfig:
    """Parameters of the mock oracle server.

    The realism and caption mocks need explicit scale parameters (gain,
    offset, bucket range); a server cannot calibrate per image because it
    has no notion of which image starts a run.
    """

    realism: BandEnergyRealismMock | None = None
    captioner: BucketCaptionMock | None = None
    embedder: HashProjectionEmbedder | None = None
    token: str | None = None
    max_image_side: int = DEFAULT_MAX_IMAGE_SIDE


def _canonical_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


class _MockHandler(BaseHTTPRequestHandler):
    server_version = "freqadv-mock"
    config: MockServerConfig  # injected by make_server

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("mock server: " + fmt, *args)

    def _reply(self, status: int, payload: dict) -> None:
        body = _canonical_bytes(payload)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _fail(self, status: int, message: str) -> None:
        self._reply(status, {"error": message})

    def _read_body(self) -> str:
        length = int(self.headers.get("Content-Length", "0"))
        return self.rfile.read(length).decode("utf-8", errors="replace")

    def _authorized(self) -> bool:
        if not self.config.token:
            return True
        return self.headers.get("Authorization") == f"Bearer {self.config.token}"

    def _decode_image(self, request) -> Image:
        png = request.image_bytes()
        img = Image.from_bytes(png)
        side = max(img.height, img.width)
        if side > self.config.max_image_side:
            raise ProtocolError(
                f"image side {side} exceeds max_image_side="
                f"{self.config.max_image_side}"
            )
        return img

    def do_POST(self) -> None:  # noqa: N802 (stdlib handler naming)
        if not self._authorized():
            self._fail(401, "missing or invalid bearer token")
            return
        try:
            body = self._read_body()
            if self.path == "/v1/realism":
                self._handle_realism(body)
            elif self.path == "/v1/caption":
                self._handle_caption(body)
            elif self.path == "/v1/embed":
                self._handle_embed(body)
            else:
                self._fail(404, f"unknown endpoint {self.path}")
        except (ProtocolError, InvalidImageError, EmptyInputError) as exc:
            self._fail(400, str(exc))
        except FreqAdvError as exc:
            self._fail(500, str(exc))
        except Exception as exc:  # keep the server alive on surprises
            logger.exception("mock server internal error")
            self._fail(500, f"internal error: {exc}")

    def _handle_realism(self, body: str) -> None:
        mock = self.config.realism
        if mock is None:
            self._fail(404, "realism mock not configured")
            return
        request = RealismRequest.from_json(body)
        img = self._decode_image(request)
        score = mock.score_image(img)
        self._reply(200, {"model_id": mock.model_id, "score_text": str(score)})

    def _handle_caption(self, body: str) -> None:
        mock = self.config.captioner
        if mock is None:
            self._fail(404, "caption mock not configured")
            return
        request = CaptionRequest.from_json(body)
        img = self._decode_image(request)
        caption = mock.caption_image(img)
        self._reply(200, {"caption": caption, "model_id": mock.model_id})

    def _handle_embed(self, body: str) -> None:
        embedder = self.config.embedder
        if embedder is None:
            self._fail(404, "embedder mock not configured")
            return
        request = EmbedRequest.from_json(body)
        if not request.text.strip():
            raise ProtocolError("text must not be empty")
        vector = embedder.embed(request.text)
        self._reply(
            200,
            {"dim": int(vector.size), "vector": [int(x) for x in vector.tolist()]},
        )


def make_server(config: MockServerConfig, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Build (but do not start) the mock oracle HTTP server."""
    handler = type("BoundMockHandler", (_MockHandler,), {"config": config})
    return ThreadingHTTPServer((host, port), handler)


class MockServerThread:
    """Context manager running a mock server on a background thread."""

    def __init__(self, config: MockServerConfig, host: str = "127.0.0.1", port: int = 0):
        self.server = make_server(config, host, port)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "MockServerThread":
        self.thread.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5.0)


def serve_forever(config: MockServerConfig, host: str, port: int) -> None:
    """Run the mock server until interrupted (CLI entry)."""
    server = make_server(config, host, port)
    bound_host, bound_port = server.server_address[:2]
    logger.info("mock oracle listening on http://%s:%d", bound_host, bound_port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

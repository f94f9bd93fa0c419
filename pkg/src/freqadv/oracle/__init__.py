"""Oracle access: wire protocol, HTTP client, and in-process mocks."""
from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np

from .client import TOKEN_ENV_VAR, OracleClient
from .mocks import (
    BandEnergyRealismMock,
    BucketCaptionMock,
    CompositeMockOracle,
    HashProjectionEmbedder,
    band_energy,
    bucket_caption,
    calibrated_caption_mock,
    calibrated_realism_mock,
    mock_band_energy_oracle,
    mock_caption_oracle,
    token_sign_vector,
)
from .wire import (
    CaptionRequest,
    CaptionResponse,
    EmbedRequest,
    EmbedResponse,
    RealismRequest,
    RealismResponse,
    cosine_similarity,
    decode_png_b64,
    encode_png_b64,
    load_schema,
    parse_score,
)


@runtime_checkable
class Oracle(Protocol):
    """The minimal interface the attack engine drives.

    realism_raw returns the oracle's untouched reply text; parsing it
    into a score happens caller-side with parse_score.
    """

    def realism_raw(self, image_png: bytes, query: str) -> str: ...

    def caption(self, image_png: bytes, query: str) -> str: ...

    def embed(self, text: str) -> np.ndarray: ...


__all__ = [
    "Oracle",
    "OracleClient",
    "TOKEN_ENV_VAR",
    "BandEnergyRealismMock",
    "BucketCaptionMock",
    "CompositeMockOracle",
    "HashProjectionEmbedder",
    "band_energy",
    "bucket_caption",
    "calibrated_caption_mock",
    "calibrated_realism_mock",
    "mock_band_energy_oracle",
    "mock_caption_oracle",
    "token_sign_vector",
    "RealismRequest",
    "RealismResponse",
    "CaptionRequest",
    "CaptionResponse",
    "EmbedRequest",
    "EmbedResponse",
    "cosine_similarity",
    "parse_score",
    "decode_png_b64",
    "encode_png_b64",
    "load_schema",
]

"""Wire protocol codecs, score parsing, mock oracles, and the HTTP client."""
from __future__ import annotations

import json

import jsonschema
import numpy as np
import pytest
import requests

from freqadv.errors import (
    EmptyInputError,
    OracleParseError,
    OracleUnavailableError,
    ProtocolError,
    UndefinedSimilarityError,
)
from freqadv.image import Image
from freqadv.oracle.client import OracleClient, TOKEN_ENV_VAR
from freqadv.oracle.mocks import (
    BandEnergyRealismMock,
    BucketCaptionMock,
    CompositeMockOracle,
    HashProjectionEmbedder,
    band_energy,
    bucket_caption,
    calibrated_caption_mock,
    calibrated_realism_mock,
    candidate_energy_std,
    expected_step_energy_shift,
    mock_band_energy_oracle,
    mock_caption_oracle,
    token_sign_vector,
)
from freqadv.oracle.wire import (
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
from freqadv.spectral import band_mask, forward_raw

from helpers import random_image, reference_token_signs


class TestParseScore:
    def test_corpus(self, parse_corpus):
        for case in parse_corpus:
            if case.get("error"):
                with pytest.raises(OracleParseError):
                    parse_score(case["text"])
            else:
                assert parse_score(case["text"]) == case["expect"], case["text"]

    def test_no_default_score_exists(self):
        with pytest.raises(OracleParseError):
            parse_score("the image is certainly fake")


class TestCosine:
    def test_identical_and_opposite(self):
        v = np.array([1.0, 2.0, -3.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0)
        assert cosine_similarity(v, -v) == pytest.approx(-1.0)

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 5.0])) == 0.0

    def test_zero_vector_is_undefined(self):
        with pytest.raises(UndefinedSimilarityError):
            cosine_similarity(np.zeros(4), np.ones(4))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cosine_similarity(np.ones(3), np.ones(4))


CANONICAL_MESSAGES = [
    (RealismRequest(image_png_b64="aGVsbG8=", query="how real?"),
     '{"image_png_b64":"aGVsbG8=","query":"how real?"}'),
    (RealismResponse(score_text="7/10", model_id="m1"),
     '{"model_id":"m1","score_text":"7/10"}'),
    (CaptionRequest(image_png_b64="aGVsbG8=", query="describe"),
     '{"image_png_b64":"aGVsbG8=","query":"describe"}'),
    (CaptionResponse(caption="a cat", model_id="m1"),
     '{"caption":"a cat","model_id":"m1"}'),
    (EmbedRequest(text="a cat"), '{"text":"a cat"}'),
    (EmbedResponse(vector=(1.0, -1.0, 2.0), dim=3),
     '{"dim":3,"vector":[1.0,-1.0,2.0]}'),
]


class TestWireMessages:
    @pytest.mark.parametrize(("message", "golden"), CANONICAL_MESSAGES)
    def test_canonical_serialization(self, message, golden):
        assert message.to_json() == golden

    @pytest.mark.parametrize(("message", "golden"), CANONICAL_MESSAGES)
    def test_round_trip(self, message, golden):
        assert type(message).from_json(golden) == message

    @pytest.mark.parametrize(("message", "golden"), CANONICAL_MESSAGES)
    def test_schema_accepts_canonical_form(self, message, golden):
        name = {
            RealismRequest: "realism_request", RealismResponse: "realism_response",
            CaptionRequest: "caption_request", CaptionResponse: "caption_response",
            EmbedRequest: "embed_request", EmbedResponse: "embed_response",
        }[type(message)]
        jsonschema.validate(json.loads(golden), load_schema(name))

    def test_schema_rejects_extra_fields(self):
        schema = load_schema("embed_request")
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({"text": "x", "extra": 1}, schema)

    @pytest.mark.parametrize(
        ("cls", "text"),
        [
            (RealismRequest, "not json"),
            (RealismRequest, '["array"]'),
            (RealismRequest, '{"query":"q"}'),
            (RealismResponse, '{"score_text":7,"model_id":"m"}'),
            (CaptionResponse, '{"caption":null,"model_id":"m"}'),
            (EmbedResponse, '{"dim":2,"vector":[1.0]}'),
            (EmbedResponse, '{"dim":true,"vector":[1.0]}'),
            (EmbedResponse, '{"dim":1,"vector":["x"]}'),
        ],
    )
    def test_malformed_messages_raise_protocol_error(self, cls, text):
        with pytest.raises(ProtocolError):
            cls.from_json(text)

    def test_png_b64_round_trip(self):
        payload = b"\x89PNG fake body"
        assert decode_png_b64(encode_png_b64(payload)) == payload

    def test_invalid_base64_raises(self):
        with pytest.raises(ProtocolError):
            decode_png_b64("!!! not base64 !!!")


class TestBandEnergy:
    def test_matches_manual_mean(self):
        img = random_image(0, size=16)
        mask = band_mask(16, 16, 0.85, 1.0)
        coeffs = forward_raw(img.pixels)
        manual = float(np.mean(np.abs(coeffs[mask.inside, :]) ** 2))
        assert band_energy(img, mask) == pytest.approx(manual, rel=1e-12)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            band_energy(random_image(0, size=16), band_mask(32, 32, 0.85, 1.0))


class TestRealismMock:
    def test_zero_gain_scores_everything_five(self):
        mock = mock_band_energy_oracle((0.85, 1.0), gain=0.0, offset=0.0)
        for seed in range(3):
            png = random_image(seed, size=16).to_png_bytes()
            assert mock.realism_raw(png, "q") == "5"

    def test_score_is_monotone_in_energy(self):
        mock = mock_band_energy_oracle((0.85, 1.0), gain=0.001, offset=5000.0)
        scores = [mock.score_for_energy(e) for e in np.linspace(0.0, 20000.0, 200)]
        assert scores == sorted(scores)
        assert scores[0] == 0 and scores[-1] == 10

    def test_offset_centers_the_scale(self):
        mock = mock_band_energy_oracle((0.85, 1.0), gain=1.0, offset=123.0)
        assert mock.probability_for_energy(123.0) == pytest.approx(0.5)
        assert mock.score_for_energy(123.0) == 5

    def test_identical_bytes_identical_reply(self):
        mock = mock_band_energy_oracle((0.85, 1.0), gain=1e-4, offset=0.0)
        png = random_image(1, size=16).to_png_bytes()
        assert mock.realism_raw(png, "q") == mock.realism_raw(png, "q")

    def test_unsupported_methods_raise(self):
        mock = mock_band_energy_oracle((0.85, 1.0), gain=0.0, offset=0.0)
        with pytest.raises(ProtocolError):
            mock.caption(b"png", "q")
        with pytest.raises(ProtocolError):
            mock.embed("text")

    def test_calibrated_mock_pins_the_baseline_at_five(self):
        for seed in range(5):
            img = random_image(seed, size=64)
            mock = calibrated_realism_mock(img, (0.85, 1.0), sigma=0.025 * 64 * 64)
            assert mock.realism_raw(img.to_png_bytes(), "q") == "5"


class TestCaptionMock:
    def test_bucket_floor_and_clamping(self):
        mock = mock_caption_oracle((0.49, 0.51), nbuckets=10, e_min=0.0, e_max=100.0)
        assert mock.bucket_for_energy(-5.0) == 0
        assert mock.bucket_for_energy(0.0) == 0
        assert mock.bucket_for_energy(9.99) == 0
        assert mock.bucket_for_energy(10.0) == 1
        assert mock.bucket_for_energy(99.99) == 9
        assert mock.bucket_for_energy(1e9) == 9

    def test_caption_format(self):
        assert bucket_caption(31) == "scene-031 texture-031"

    def test_bucket_captions_are_token_disjoint(self):
        tokens_a = set(bucket_caption(3).split())
        tokens_b = set(bucket_caption(4).split())
        assert not tokens_a & tokens_b

    @pytest.mark.parametrize(
        ("nbuckets", "e_min", "e_max"), [(1, 0.0, 1.0), (10, 5.0, 5.0), (10, 9.0, 3.0)]
    )
    def test_invalid_parameters(self, nbuckets, e_min, e_max):
        with pytest.raises(ValueError):
            mock_caption_oracle((0.49, 0.51), nbuckets, e_min, e_max)

    def test_calibrated_mock_starts_in_the_middle_bucket(self):
        img = random_image(0, size=64)
        mock = calibrated_caption_mock(img, (0.49, 0.51), sigma=0.025 * 64 * 64)
        assert mock.caption(img.to_png_bytes(), "q") == bucket_caption(31)

    def test_calibrated_mock_requires_odd_buckets(self):
        with pytest.raises(ValueError):
            calibrated_caption_mock(
                random_image(0, size=64), (0.49, 0.51), sigma=100.0, nbuckets=10
            )

    def test_unsupported_methods_raise(self):
        mock = mock_caption_oracle((0.49, 0.51), 10, 0.0, 1.0)
        with pytest.raises(ProtocolError):
            mock.realism_raw(b"png", "q")
        with pytest.raises(ProtocolError):
            mock.embed("text")


class TestEmbedder:
    def test_token_signs_match_independent_reference(self):
        for token in ["scene-000", "texture-042", "a", "fence"]:
            vec = token_sign_vector(token, 32)
            assert vec.tolist() == [float(s) for s in reference_token_signs(token, 32)]

    def test_frozen_scene_000_prefix(self):
        vec = token_sign_vector("scene-000", 16)
        assert vec.tolist() == [
            1, 1, -1, 1, -1, 1, -1, -1, -1, -1, 1, 1, 1, 1, 1, -1,
        ]

    def test_embedding_is_the_sum_of_token_vectors(self):
        embedder = HashProjectionEmbedder(dim=64)
        total = embedder.embed("scene-007 texture-007")
        manual = token_sign_vector("scene-007", 64) + token_sign_vector("texture-007", 64)
        assert np.array_equal(total, manual)

    def test_components_are_integers(self):
        embedder = HashProjectionEmbedder(dim=128)
        vec = embedder.embed("one two three")
        assert np.array_equal(vec, np.rint(vec))

    def test_empty_text_rejected(self):
        embedder = HashProjectionEmbedder()
        with pytest.raises(EmptyInputError):
            embedder.embed("   ")

    def test_repeated_calls_are_stable(self):
        embedder = HashProjectionEmbedder(dim=64)
        first = embedder.embed("scene-001 texture-001")
        second = embedder.embed("scene-001 texture-001")
        assert np.array_equal(first, second)

    def test_distinct_bucket_captions_have_low_cosine(self):
        embedder = HashProjectionEmbedder()
        vectors = [embedder.embed(bucket_caption(b)) for b in range(0, 60, 7)]
        for i in range(len(vectors)):
            for j in range(i + 1, len(vectors)):
                assert abs(cosine_similarity(vectors[i], vectors[j])) < 0.5

    def test_unsupported_methods_raise(self):
        embedder = HashProjectionEmbedder()
        with pytest.raises(ProtocolError):
            embedder.realism_raw(b"png", "q")
        with pytest.raises(ProtocolError):
            embedder.caption(b"png", "q")


class TestCalibrationScales:
    def test_step_energy_shift_at_64(self):
        mask = band_mask(64, 64, 0.85, 1.0)
        # rho saturates the 97 available pairs; one of them is self-paired.
        shift = expected_step_energy_shift(mask, sigma=100.0, rho=0.1)
        assert shift == pytest.approx((2 * 96 * 2 + 1) * 100.0**2 / 193)

    def test_candidate_energy_std_formula(self):
        mask = band_mask(64, 64, 0.85, 1.0)
        assert candidate_energy_std(1e6, mask, 50.0) == pytest.approx(
            2 * 50.0 * np.sqrt(1e6 / 193)
        )


class TestCompositeMock:
    def test_routes_to_components(self):
        img = random_image(0, size=64)
        sigma = 0.025 * 64 * 64
        oracle = CompositeMockOracle(
            realism=calibrated_realism_mock(img, (0.85, 1.0), sigma),
            captioner=calibrated_caption_mock(img, (0.49, 0.51), sigma),
            embedder=HashProjectionEmbedder(),
        )
        png = img.to_png_bytes()
        assert oracle.realism_raw(png, "q") == "5"
        assert oracle.caption(png, "q") == bucket_caption(31)
        assert oracle.embed("scene-031 texture-031").shape == (256,)

    def test_unconfigured_components_raise(self):
        oracle = CompositeMockOracle()
        with pytest.raises(ProtocolError):
            oracle.realism_raw(b"png", "q")
        with pytest.raises(ProtocolError):
            oracle.caption(b"png", "q")
        with pytest.raises(ProtocolError):
            oracle.embed("text")


class _FakeResponse:
    def __init__(self, status_code: int, text: str):
        self.status_code = status_code
        self.text = text


class _FakeSession:
    """Scripted transport: pops one outcome per post call."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = []

    def post(self, url, data=None, headers=None, timeout=None):
        self.calls.append({"url": url, "data": data, "headers": headers})
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


def _client(session, **kwargs):
    kwargs.setdefault("backoff", 0.0)
    return OracleClient("http://oracle.test", session=session, **kwargs)


class TestClient:
    def test_success_parses_response(self):
        session = _FakeSession([_FakeResponse(200, '{"model_id":"m","score_text":"7"}')])
        resp = _client(session).query_realism(b"png", "q")
        assert resp.score_text == "7"
        sent = json.loads(session.calls[0]["data"].decode("utf-8"))
        assert sent == {"image_png_b64": encode_png_b64(b"png"), "query": "q"}

    def test_transport_errors_are_retried(self):
        session = _FakeSession([
            requests.ConnectionError("down"),
            requests.Timeout("slow"),
            _FakeResponse(200, '{"model_id":"m","score_text":"6"}'),
        ])
        resp = _client(session, retries=3).query_realism(b"png", "q")
        assert resp.score_text == "6"
        assert len(session.calls) == 3

    def test_5xx_is_retried_then_fails(self):
        session = _FakeSession([_FakeResponse(503, "busy")] * 3)
        with pytest.raises(OracleUnavailableError):
            _client(session, retries=2).query_realism(b"png", "q")
        assert len(session.calls) == 3

    def test_4xx_fails_without_retry(self):
        session = _FakeSession([_FakeResponse(401, "denied")])
        with pytest.raises(OracleUnavailableError):
            _client(session, retries=5).query_realism(b"png", "q")
        assert len(session.calls) == 1

    def test_malformed_body_is_not_retried(self):
        session = _FakeSession([_FakeResponse(200, "not json at all")])
        with pytest.raises(ProtocolError):
            _client(session, retries=5).query_realism(b"png", "q")
        assert len(session.calls) == 1

    def test_embed_dimension_change_is_rejected(self):
        session = _FakeSession([
            _FakeResponse(200, '{"dim":2,"vector":[1.0,2.0]}'),
            _FakeResponse(200, '{"dim":3,"vector":[1.0,2.0,3.0]}'),
        ])
        client = _client(session)
        assert client.embed("a").shape == (2,)
        with pytest.raises(ProtocolError):
            client.embed("b")

    def test_bearer_token_header(self):
        session = _FakeSession([_FakeResponse(200, '{"model_id":"m","score_text":"5"}')])
        _client(session, token="sekrit").query_realism(b"png", "q")
        assert session.calls[0]["headers"]["Authorization"] == "Bearer sekrit"

    def test_token_env_fallback(self, monkeypatch):
        monkeypatch.setenv(TOKEN_ENV_VAR, "envtoken")
        session = _FakeSession([_FakeResponse(200, '{"model_id":"m","score_text":"5"}')])
        OracleClient("http://oracle.test", session=session, backoff=0.0).query_realism(
            b"png", "q"
        )
        assert session.calls[0]["headers"]["Authorization"] == "Bearer envtoken"

    def test_no_token_no_header(self, monkeypatch):
        monkeypatch.delenv(TOKEN_ENV_VAR, raising=False)
        session = _FakeSession([_FakeResponse(200, '{"model_id":"m","score_text":"5"}')])
        OracleClient("http://oracle.test", session=session, backoff=0.0).query_realism(
            b"png", "q"
        )
        assert "Authorization" not in session.calls[0]["headers"]

    def test_separate_embed_url(self):
        session = _FakeSession([
            _FakeResponse(200, '{"dim":1,"vector":[3.0]}'),
            _FakeResponse(200, '{"model_id":"m","score_text":"5"}'),
        ])
        client = OracleClient(
            "http://oracle.test", embed_url="http://embed.test/", session=session,
            backoff=0.0,
        )
        client.embed("word")
        client.query_realism(b"png", "q")
        assert session.calls[0]["url"] == "http://embed.test/v1/embed"
        assert session.calls[1]["url"] == "http://oracle.test/v1/realism"

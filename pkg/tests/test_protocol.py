"""Wire-protocol conformance suite.

Runs against an in-process mock server by default. Point
FREQADV_PROTOCOL_URL at any other server implementation to check it
against the same golden request/reply pairs; the server must be started
with the canonical mock parameters recorded in
tests/data/protocol_golden.json (including the bearer token).
"""
from __future__ import annotations

import base64
import json
import os

import jsonschema
import numpy as np
import pytest
import requests

from freqadv.engine import AttackConfig, result_to_summary, run_attack
from freqadv.image import Image
from freqadv.oracle import OracleClient
from freqadv.oracle.mocks import (
    CompositeMockOracle,
    HashProjectionEmbedder,
    mock_band_energy_oracle,
    mock_caption_oracle,
)
from freqadv.oracle.wire import load_schema
from freqadv.server import MockServerConfig, MockServerThread


@pytest.fixture(scope="module")
def golden(data_dir):
    with (data_dir / "protocol_golden.json").open(encoding="utf-8") as fh:
        return json.load(fh)


def _reference_mocks(params):
    realism = mock_band_energy_oracle(
        tuple(params["realism_band"]), gain=params["gain"], offset=params["offset"]
    )
    captioner = mock_caption_oracle(
        tuple(params["caption_band"]), params["nbuckets"],
        params["e_min"], params["e_max"],
    )
    embedder = HashProjectionEmbedder(dim=params["embed_dim"])
    return realism, captioner, embedder


@pytest.fixture(scope="module")
def server_url(golden):
    external = os.environ.get("FREQADV_PROTOCOL_URL")
    if external:
        yield external.rstrip("/")
        return
    realism, captioner, embedder = _reference_mocks(golden["params"])
    config = MockServerConfig(
        realism=realism, captioner=captioner, embedder=embedder,
        token=golden["params"]["token"],
        max_image_side=golden["params"]["max_image_side"],
    )
    with MockServerThread(config) as server:
        yield server.url


@pytest.fixture(scope="module")
def auth(golden):
    token = os.environ.get("FREQADV_PROTOCOL_TOKEN", golden["params"]["token"])
    return {"Authorization": f"Bearer {token}"}


def _post(server_url, auth, path, payload, raw=None):
    body = raw if raw is not None else json.dumps(payload)
    return requests.post(
        f"{server_url}{path}", data=body, timeout=30,
        headers={"Content-Type": "application/json", **auth},
    )


class TestRealismEndpoint:
    def test_golden_replies(self, server_url, auth, golden):
        schema = load_schema("realism_response")
        for case in golden["images"]:
            reply = _post(server_url, auth, "/v1/realism", {
                "image_png_b64": case["png_b64"],
                "query": golden["realism_query"],
            })
            assert reply.status_code == 200, reply.text
            payload = reply.json()
            jsonschema.validate(payload, schema)
            assert payload["score_text"] == case["realism_score_text"]
            assert isinstance(payload["model_id"], str) and payload["model_id"]

    def test_byte_determinism(self, server_url, auth, golden):
        request = {
            "image_png_b64": golden["images"][0]["png_b64"],
            "query": golden["realism_query"],
        }
        first = _post(server_url, auth, "/v1/realism", request)
        second = _post(server_url, auth, "/v1/realism", request)
        assert first.content == second.content


class TestCaptionEndpoint:
    def test_golden_replies(self, server_url, auth, golden):
        schema = load_schema("caption_response")
        for case in golden["images"]:
            reply = _post(server_url, auth, "/v1/caption", {
                "image_png_b64": case["png_b64"],
                "query": golden["caption_query"],
            })
            assert reply.status_code == 200, reply.text
            payload = reply.json()
            jsonschema.validate(payload, schema)
            assert payload["caption"] == case["caption"]

    def test_byte_determinism(self, server_url, auth, golden):
        request = {
            "image_png_b64": golden["images"][1]["png_b64"],
            "query": golden["caption_query"],
        }
        first = _post(server_url, auth, "/v1/caption", request)
        second = _post(server_url, auth, "/v1/caption", request)
        assert first.content == second.content


class TestEmbedEndpoint:
    def test_golden_vectors(self, server_url, auth, golden):
        schema = load_schema("embed_response")
        for case in golden["embeds"]:
            reply = _post(server_url, auth, "/v1/embed", {"text": case["text"]})
            assert reply.status_code == 200, reply.text
            payload = reply.json()
            jsonschema.validate(payload, schema)
            assert payload["dim"] == case["dim"]
            assert payload["vector"] == case["vector"]
            assert all(isinstance(v, int) for v in payload["vector"])

    def test_empty_text_rejected(self, server_url, auth):
        reply = _post(server_url, auth, "/v1/embed", {"text": ""})
        assert reply.status_code == 400


class TestErrorHandling:
    def test_bad_base64(self, server_url, auth, golden):
        reply = _post(server_url, auth, "/v1/realism", {
            "image_png_b64": "!!!not-base64!!!", "query": golden["realism_query"],
        })
        assert reply.status_code == 400
        assert "error" in reply.json()

    def test_undecodable_image(self, server_url, auth, golden):
        garbage = base64.b64encode(b"not a png at all").decode("ascii")
        reply = _post(server_url, auth, "/v1/realism", {
            "image_png_b64": garbage, "query": golden["realism_query"],
        })
        assert reply.status_code == 400

    def test_malformed_json_body(self, server_url, auth):
        reply = _post(server_url, auth, "/v1/realism", None, raw="{broken")
        assert reply.status_code == 400

    def test_missing_field(self, server_url, auth, golden):
        reply = _post(server_url, auth, "/v1/realism", {
            "image_png_b64": golden["images"][0]["png_b64"],
        })
        assert reply.status_code == 400

    def test_wrong_field_type(self, server_url, auth, golden):
        reply = _post(server_url, auth, "/v1/realism", {
            "image_png_b64": 17, "query": golden["realism_query"],
        })
        assert reply.status_code == 400

    def test_oversized_image(self, server_url, auth, golden):
        reply = _post(server_url, auth, "/v1/realism", {
            "image_png_b64": golden["oversized_png_b64"],
            "query": golden["realism_query"],
        })
        assert reply.status_code == 400
        assert "max_image_side" in reply.json()["error"]

    def test_unknown_path(self, server_url, auth):
        reply = _post(server_url, auth, "/v1/unknown", {"text": "x"})
        assert reply.status_code == 404

    def test_bad_token(self, server_url, golden):
        reply = _post(server_url, {"Authorization": "Bearer wrong"}, "/v1/embed",
                      {"text": "hello world"})
        assert reply.status_code == 401

    def test_missing_token(self, server_url, golden):
        reply = _post(server_url, {}, "/v1/embed", {"text": "hello world"})
        assert reply.status_code == 401


class TestClientAgainstServer:
    @pytest.fixture()
    def client(self, server_url, golden):
        token = os.environ.get("FREQADV_PROTOCOL_TOKEN", golden["params"]["token"])
        return OracleClient(server_url, token=token)

    def test_realism_scores(self, client, golden):
        for case in golden["images"]:
            png = base64.b64decode(case["png_b64"])
            reply = client.query_realism(png, golden["realism_query"])
            assert reply.score_text == case["realism_score_text"]
            assert client.realism_raw(png, golden["realism_query"]) == case["realism_score_text"]

    def test_caption(self, client, golden):
        png = base64.b64decode(golden["images"][0]["png_b64"])
        assert client.caption(png, golden["caption_query"]) == golden["images"][0]["caption"]

    def test_embed(self, client, golden):
        case = golden["embeds"][0]
        vector = client.embed(case["text"])
        assert vector.shape == (case["dim"],)
        assert np.array_equal(vector, np.array(case["vector"]))


class TestTransportEquivalence:
    """An attack through HTTP must reproduce the in-process result exactly."""

    @pytest.fixture()
    def client(self, server_url, golden):
        token = os.environ.get("FREQADV_PROTOCOL_TOKEN", golden["params"]["token"])
        return OracleClient(server_url, token=token)

    def _summary_pair(self, golden, client, cfg, *, y_gt):
        realism, captioner, embedder = _reference_mocks(golden["params"])
        local = CompositeMockOracle(
            realism=realism, captioner=captioner, embedder=embedder
        )
        img = Image.from_bytes(base64.b64decode(golden["images"][0]["png_b64"]))
        local_result = run_attack(img, cfg, local, y_gt=y_gt)
        remote_result = run_attack(img, cfg, client, y_gt=y_gt)
        to_bytes = lambda res: json.dumps(
            result_to_summary(res, cfg), sort_keys=True, separators=(",", ":")
        ).encode()
        return to_bytes(local_result), to_bytes(remote_result)

    def test_realism_attack_matches_in_process(self, golden, client):
        cfg = AttackConfig.for_realism(
            seed=11, n_candidates=4, max_steps=2,
            realism_query=golden["realism_query"],
        )
        local, remote = self._summary_pair(golden, client, cfg, y_gt=0)
        assert local == remote

    def test_caption_attack_matches_in_process(self, golden, client):
        cfg = AttackConfig.for_caption(
            seed=12, n_candidates=4, max_steps=2,
            caption_query=golden["caption_query"],
        )
        local, remote = self._summary_pair(golden, client, cfg, y_gt=None)
        assert local == remote

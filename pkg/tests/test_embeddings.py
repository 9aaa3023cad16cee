import json
import math
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trendwatch.embeddings import (
    EmbeddingProviderConfig,
    HttpEmbeddingClient,
    PrecomputedStore,
    cosine,
)
from trendwatch.errors import ConfigError, DataError, UpstreamError


def _store_file(tmp_path, records, dim=3, normalize=False):
    path = tmp_path / "vecs.jsonl"
    with path.open("w") as fh:
        for key, vec in records:
            fh.write(json.dumps({"id": key, "vector": vec}) + "\n")
    cfg = EmbeddingProviderConfig(
        kind="precomputed-file", location=str(path), expected_dim=dim, normalize=normalize
    )
    return cfg


class TestCosine:
    def test_identity(self):
        v = np.array([0.3, -1.2, 4.0])
        assert cosine(v, v) == 1.0

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_known_value(self):
        # 32 / (sqrt(14) * sqrt(77)) evaluated at high precision
        got = cosine(np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0]))
        assert got == pytest.approx(0.9746318, abs=1e-6)

    def test_zero_vector_rejected(self):
        with pytest.raises(DataError):
            cosine(np.zeros(3), np.ones(3))

    def test_dim_mismatch(self):
        with pytest.raises(DataError):
            cosine(np.ones(3), np.ones(4))

    @given(
        st.lists(st.floats(-10, 10), min_size=4, max_size=4),
        st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    )
    def test_symmetry(self, a, b):
        va, vb = np.array(a), np.array(b)
        if np.linalg.norm(va) == 0 or np.linalg.norm(vb) == 0:
            return
        assert cosine(va, vb) == cosine(vb, va)

    @given(
        st.lists(st.floats(-10, 10), min_size=4, max_size=4),
        st.floats(0.01, 100.0),
    )
    def test_scale_invariance(self, a, alpha):
        va = np.array(a)
        vb = np.array([1.0, -2.0, 0.5, 3.0])
        if np.linalg.norm(va) == 0:
            return
        assert cosine(alpha * va, vb) == pytest.approx(cosine(va, vb), abs=1e-12)


class TestPrecomputedStore:
    def test_lookup(self, tmp_path):
        cfg = _store_file(tmp_path, [("u1", [1, 0, 0]), ("u2", [0, 1, 0])])
        store = PrecomputedStore(cfg)
        vecs = store.embed_batch(["whatever", "text"], ids=["u1", "u2"])
        assert len(vecs) == 2
        assert vecs[0].tolist() == [1.0, 0.0, 0.0]

    def test_order_preserved(self, tmp_path):
        cfg = _store_file(tmp_path, [("a", [1, 0, 0]), ("b", [0, 1, 0])])
        store = PrecomputedStore(cfg)
        vecs = store.embed_batch(["", ""], ids=["b", "a"])
        assert vecs[0].tolist() == [0.0, 1.0, 0.0]

    def test_normalization_contract(self, tmp_path):
        cfg = _store_file(tmp_path, [("a", [3, 4, 0])], normalize=True)
        store = PrecomputedStore(cfg)
        (vec,) = store.embed_batch([""], ids=["a"])
        assert abs(np.linalg.norm(vec) - 1.0) <= 1e-9

    def test_missing_id_names_it(self, tmp_path):
        cfg = _store_file(tmp_path, [("a", [1, 0, 0])])
        store = PrecomputedStore(cfg)
        with pytest.raises(DataError, match="ghost"):
            store.embed_batch(["", ""], ids=["a", "ghost"])

    def test_dim_mismatch_is_config_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"id": "a", "vector": [1.0, 2.0]}) + "\n")
        cfg = EmbeddingProviderConfig(kind="precomputed-file", location=str(path), expected_dim=3)
        with pytest.raises(ConfigError):
            PrecomputedStore(cfg)


class _EmbedHandler(BaseHTTPRequestHandler):
    fail_first = 0
    dim = 3

    def do_POST(self):
        cls = type(self)
        if cls.fail_first > 0:
            cls.fail_first -= 1
            self.send_response(503)
            self.end_headers()
            return
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        vectors = [[float(len(t))] + [0.0] * (cls.dim - 1) for t in payload["texts"]]
        body = json.dumps({"vectors": vectors}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def embed_server():
    server = HTTPServer(("127.0.0.1", 0), _EmbedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestHttpClient:
    def test_round_trip(self, embed_server):
        _EmbedHandler.fail_first = 0
        cfg = EmbeddingProviderConfig(
            kind="http-service", location=embed_server, expected_dim=3, normalize=False
        )
        vecs = HttpEmbeddingClient(cfg).embed_batch(["ab", "abcd"])
        assert vecs[0][0] == 2.0 and vecs[1][0] == 4.0

    def test_retries_then_succeeds(self, embed_server):
        _EmbedHandler.fail_first = 2
        cfg = EmbeddingProviderConfig(
            kind="http-service",
            location=embed_server,
            expected_dim=3,
            normalize=False,
            backoff_seconds=0.01,
        )
        vecs = HttpEmbeddingClient(cfg).embed_batch(["abc"])
        assert vecs[0][0] == 3.0

    def test_gives_up_after_retries(self, embed_server):
        _EmbedHandler.fail_first = 99
        cfg = EmbeddingProviderConfig(
            kind="http-service",
            location=embed_server,
            expected_dim=3,
            normalize=False,
            max_retries=1,
            backoff_seconds=0.01,
        )
        with pytest.raises(UpstreamError):
            HttpEmbeddingClient(cfg).embed_batch(["abc"])
        _EmbedHandler.fail_first = 0

    def test_dim_mismatch_not_retried(self, embed_server):
        _EmbedHandler.fail_first = 0
        cfg = EmbeddingProviderConfig(
            kind="http-service", location=embed_server, expected_dim=8, normalize=False
        )
        with pytest.raises(ConfigError):
            HttpEmbeddingClient(cfg).embed_batch(["abc"])


def test_provider_config_validation():
    with pytest.raises(ConfigError):
        EmbeddingProviderConfig(kind="precomputed-file", location="x", expected_dim=0)
    with pytest.raises(ConfigError):
        EmbeddingProviderConfig(kind="magic", location="x", expected_dim=3)

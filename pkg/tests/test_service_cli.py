import json

import pytest
from fastapi.testclient import TestClient

from fitpro.cli import main
from fitpro.encoders import MockEncoder
from fitpro.evaluation import make_synthetic_manifest
from fitpro.index import build_index
from fitpro.ingest import DatasetManifest, ManifestEntry, save_manifest
from fitpro.qhr import FusionWeights
from fitpro.service import create_app
from fitpro.session import Engine


def small_manifest():
    entries = []
    for i, (upper, lower) in enumerate(
        [("red jacket", "blue jeans"), ("green coat", "grey skirt"),
         ("navy hoodie", "khaki shorts")]
    ):
        attrs = {
            "upper": tuple(upper.split()),
            "lower": tuple(lower.split()),
        }
        entries.append(
            ManifestEntry(
                image_path=f"gallery/p{i}.jpg",
                identity_label=f"p{i}",
                descriptions=(f"Upper: {upper} | Lower: {lower}",),
                attributes=attrs,
            )
        )
    return DatasetManifest(mode="cropped", entries=tuple(entries))


@pytest.fixture()
def client():
    enc = MockEncoder(seed=3, dim=64)
    engine = Engine(build_index(small_manifest(), enc), enc, FusionWeights())
    return TestClient(create_app(engine))


class TestService:
    def test_healthz(self, client):
        r = client.get("/healthz")
        assert r.status_code == 200
        assert r.json() == {"status": "ok"}

    def test_session_flow(self, client):
        r = client.post("/sessions", json={"q0": "Upper: red jacket"})
        assert r.status_code == 200
        sid = r.json()["session_id"]
        assert r.json()["ranking"][0]["rank"] == 1

        r = client.post(
            f"/sessions/{sid}/feedback", json={"text": "Lower: blue jeans"}
        )
        assert r.status_code == 200
        assert r.json()["round"] == 1
        top = r.json()["ranking"][0]
        assert top["image_key"] == "gallery/p0.jpg"

        r = client.post(
            f"/sessions/{sid}/reveal", json={"image_key": "gallery/p0.jpg"}
        )
        assert r.status_code == 200
        assert r.json()["revealed_count"] == 1

        r = client.get(f"/sessions/{sid}")
        assert r.status_code == 200
        assert [rd["r"] for rd in r.json()["rounds"]] == [0, 1]

        r = client.delete(f"/sessions/{sid}")
        assert r.status_code == 200
        assert r.json()["closed"] is True

    def test_unknown_session_404(self, client):
        for call in (
            lambda: client.get("/sessions/nope"),
            lambda: client.post(
                "/sessions/nope/feedback", json={"text": "Upper: x"}
            ),
            lambda: client.delete("/sessions/nope"),
        ):
            r = call()
            assert r.status_code == 404
            assert r.json()["error"] == "not_found"

    def test_closed_session_409(self, client):
        sid = client.post("/sessions", json={"q0": "Upper: red jacket"}).json()[
            "session_id"
        ]
        client.delete(f"/sessions/{sid}")
        r = client.post(
            f"/sessions/{sid}/feedback", json={"text": "Lower: blue jeans"}
        )
        assert r.status_code == 409
        assert r.json()["error"] == "session_closed"

    def test_unparseable_query_422(self, client):
        r = client.post("/sessions", json={"q0": "no slots at all"})
        assert r.status_code == 422
        assert "error" in r.json()

    def test_reveal_unknown_key_404(self, client):
        sid = client.post("/sessions", json={"q0": "Upper: red jacket"}).json()[
            "session_id"
        ]
        r = client.post(
            f"/sessions/{sid}/reveal", json={"image_key": "gallery/ghost.jpg"}
        )
        assert r.status_code == 404

    def test_gallery_metadata(self, client):
        r = client.get("/gallery/gallery/p0.jpg")
        assert r.status_code == 200
        body = r.json()
        assert body["image_key"] == "gallery/p0.jpg"
        assert body["metadata"]["attributes"]["upper"] == ["red", "jacket"]
        assert body["image_base64"] is None  # no pixels on disk

    def test_gallery_unknown_404(self, client):
        assert client.get("/gallery/ghost.jpg").status_code == 404

    def test_delete_restores_pseudo_state(self, client):
        app_engine = client.app.state.engine
        assert not app_engine.graph.pseudo_sessions
        sid = client.post("/sessions", json={"q0": "Upper: red jacket"}).json()[
            "session_id"
        ]
        assert sid in app_engine.graph.pseudo_sessions
        client.delete(f"/sessions/{sid}")
        assert not app_engine.graph.pseudo_sessions

    def test_ingest_endpoint(self, client, tmp_path):
        path = tmp_path / "m.jsonl"
        save_manifest(make_synthetic_manifest(n_identities=2, views=2), path)
        r = client.post("/ingest", json={"manifest_path": str(path)})
        assert r.status_code == 200
        assert r.json()["indexed_count"] == 4
        assert client.app.state.engine.index.keys() == [
            "synthetic/0000_0.jpg", "synthetic/0000_1.jpg",
            "synthetic/0001_0.jpg", "synthetic/0001_1.jpg",
        ]


class TestCli:
    def manifest_path(self, tmp_path):
        path = tmp_path / "m.jsonl"
        save_manifest(small_manifest(), path)
        return path

    def test_ingest_then_search(self, tmp_path, capsys):
        mpath = self.manifest_path(tmp_path)
        idx = tmp_path / "idx"
        assert main(["ingest", "--manifest", str(mpath), "--out", str(idx)]) == 0
        capsys.readouterr()
        assert main(
            ["search", "--index", str(idx),
             "--query", "Upper: red jacket | Lower: blue jeans",
             "--top-k", "2"]
        ) == 0
        hits = json.loads(capsys.readouterr().out)
        assert len(hits) == 2
        assert hits[0]["rank"] == 1
        assert hits[0]["image_key"] == "gallery/p0.jpg"

    def test_search_empty_index(self, tmp_path, capsys):
        mpath = tmp_path / "empty.jsonl"
        save_manifest(DatasetManifest(mode="cropped", entries=()), mpath)
        idx = tmp_path / "idx"
        main(["ingest", "--manifest", str(mpath), "--out", str(idx)])
        capsys.readouterr()
        assert main(
            ["search", "--index", str(idx), "--query", "Upper: red jacket"]
        ) == 0
        assert json.loads(capsys.readouterr().out) == []

    def test_missing_index_is_error(self, tmp_path, capsys):
        code = main(
            ["search", "--index", str(tmp_path / "nope"), "--query", "Upper: x"]
        )
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_bench_zero_rounds(self, tmp_path, capsys):
        mpath = self.manifest_path(tmp_path)
        report = tmp_path / "report.json"
        assert main(
            ["bench", "--manifest", str(mpath), "--rounds", "0",
             "--seed", "0", "--report", str(report)]
        ) == 0
        data = json.loads(report.read_text())
        assert len(data["rounds"]) == 1

    def test_bench_same_seed_byte_identical(self, tmp_path):
        mpath = self.manifest_path(tmp_path)
        r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
        for out in (r1, r2):
            assert main(
                ["bench", "--manifest", str(mpath), "--rounds", "2",
                 "--seed", "7", "--report", str(out)]
            ) == 0
        assert r1.read_bytes() == r2.read_bytes()

    def test_bench_curve_csv(self, tmp_path):
        mpath = self.manifest_path(tmp_path)
        report, curve = tmp_path / "r.json", tmp_path / "c.csv"
        main(
            ["bench", "--manifest", str(mpath), "--rounds", "1",
             "--report", str(report), "--curve-csv", str(curve)]
        )
        assert curve.read_text().splitlines()[0] == "round,rank1,rank5,rank10,map"

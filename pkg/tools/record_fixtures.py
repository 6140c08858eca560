"""Re-record the frontend's API fixtures from the live service code.

Run from the repository root:  python3 tools/record_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from fitpro.encoders import MockEncoder
from fitpro.index import build_index
from fitpro.ingest import DatasetManifest, ManifestEntry
from fitpro.qhr import FusionWeights
from fitpro.service import create_app
from fitpro.session import Engine

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


def gallery_manifest() -> DatasetManifest:
    entries = []
    for i, (upper, lower) in enumerate(
        [("red jacket", "blue jeans"), ("green coat", "grey skirt"),
         ("navy hoodie", "khaki shorts")]
    ):
        attrs = {"upper": tuple(upper.split()), "lower": tuple(lower.split())}
        entries.append(
            ManifestEntry(
                image_path=f"gallery/p{i}.jpg",
                identity_label=f"p{i}",
                descriptions=(f"Upper: {upper} | Lower: {lower}",),
                attributes=attrs,
            )
        )
    return DatasetManifest(mode="cropped", entries=tuple(entries))


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    encoder = MockEncoder(seed=3, dim=64)
    engine = Engine(build_index(gallery_manifest(), encoder), encoder,
                    FusionWeights())
    client = TestClient(create_app(engine))

    def rec(name, resp):
        (OUT / f"{name}.json").write_text(
            json.dumps({"status": resp.status_code, "body": resp.json()},
                       indent=1, sort_keys=True)
        )

    r = client.post("/sessions", json={"q0": "Upper: red jacket"})
    rec("start", r)
    sid = r.json()["session_id"]
    rec("feedback", client.post(f"/sessions/{sid}/feedback",
                                json={"text": "Lower: blue jeans"}))
    rec("reveal", client.post(f"/sessions/{sid}/reveal",
                              json={"image_key": "gallery/p0.jpg"}))
    rec("reveal_again", client.post(f"/sessions/{sid}/reveal",
                                    json={"image_key": "gallery/p0.jpg"}))
    rec("report", client.get(f"/sessions/{sid}"))
    rec("close", client.delete(f"/sessions/{sid}"))
    rec("feedback_closed_409",
        client.post(f"/sessions/{sid}/feedback", json={"text": "Head: hat"}))
    rec("start_unparseable_422",
        client.post("/sessions", json={"q0": "no slots here"}))
    sid2 = client.post(
        "/sessions", json={"q0": "Upper: green coat"}
    ).json()["session_id"]
    rec("reveal_unknown_404",
        client.post(f"/sessions/{sid2}/reveal",
                    json={"image_key": "gallery/ghost.jpg"}))
    print(f"recorded fixtures in {OUT}")


if __name__ == "__main__":
    main()

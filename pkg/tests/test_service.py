from __future__ import annotations

import base64
import json
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from pointsal.config import DatasetManifest, PipelineConfig
from pointsal.floodfill import load_annotations
from pointsal.imaging import GrayMap, RasterImage, save_gray, save_rgb
from pointsal.service import create_app


@pytest.fixture()
def fresh_manifest(mini_copy, tmp_path) -> DatasetManifest:
    """Mini dataset images/edges with an empty annotation store."""
    return DatasetManifest(
        images_dir=mini_copy.images_dir,
        edges_dir=mini_copy.edges_dir,
        annotations_file=tmp_path / "fresh.json",
        gt_dir=mini_copy.gt_dir,
    )


def client_for(manifest: DatasetManifest, config: PipelineConfig | None = None) -> TestClient:
    return TestClient(create_app(manifest, config or PipelineConfig()))


class TestListing:
    def test_fresh_store_lists_unlabeled(self, fresh_manifest):
        client = client_for(fresh_manifest)
        records = client.get("/api/images").json()
        assert [r["id"] for r in records] == [f"img{i:02d}" for i in range(1, 6)]
        assert all(r["status"] == "unlabeled" for r in records)
        assert all(r["width"] == 64 and r["height"] == 64 for r in records)

    def test_bundled_annotations_show_done(self, mini_copy):
        client = client_for(mini_copy)
        records = client.get("/api/images").json()
        assert all(r["status"] == "done" for r in records)

    def test_image_and_edge_bytes(self, mini_copy):
        client = client_for(mini_copy)
        expected = mini_copy.image_path("img01").read_bytes()
        got = client.get("/api/images/img01/file")
        assert got.status_code == 200 and got.content == expected
        edges = client.get("/api/images/img01/edges")
        assert edges.status_code == 200
        assert edges.content == mini_copy.edge_path("img01").read_bytes()

    def test_unknown_id_404(self, mini_copy):
        client = client_for(mini_copy)
        assert client.get("/api/images/ghost/file").status_code == 404

    def test_missing_edges_hint(self, mini_copy):
        mini_copy.edge_path("img02").unlink()
        client = client_for(mini_copy)
        resp = client.get("/api/images/img02/edges")
        assert resp.status_code == 404
        assert "demo-edges" in resp.json()["detail"]


class TestPreview:
    def test_stateless_identical_bytes(self, mini_copy):
        client = client_for(mini_copy)
        body = {
            "foreground_points": [{"x": 22, "y": 24}],
            "background_point": {"x": 54, "y": 10},
        }
        a = client.post("/api/images/img01/preview", json=body)
        b = client.post("/api/images/img01/preview", json=body)
        assert a.status_code == 200
        assert a.json()["trimap"] == b.json()["trimap"]
        assert a.json()["radius"] == pytest.approx(64 / 5)

    def test_matches_batch_pipeline_bytes(self, mini_copy, tmp_path):
        from pointsal.cli import main

        out = tmp_path / "trimaps"
        rc = main(
            [
                "pseudo-label",
                "--manifest",
                str(mini_copy.images_dir.parent / "manifest.json"),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        client = client_for(mini_copy)
        for rec in load_annotations(mini_copy.annotations_file):
            body = {
                "foreground_points": [{"x": p.x, "y": p.y} for p in rec.foreground_points],
                "background_point": {
                    "x": rec.background_point.x,
                    "y": rec.background_point.y,
                },
            }
            resp = client.post(f"/api/images/{rec.image_id}/preview", json=body)
            assert resp.status_code == 200
            served = base64.b64decode(resp.json()["trimap"])
            assert served == (out / f"{rec.image_id}.png").read_bytes()

    def test_out_of_bounds_point_names_it(self, mini_copy):
        client = client_for(mini_copy)
        resp = client.post(
            "/api/images/img01/preview",
            json={"foreground_points": [{"x": 99, "y": 3}]},
        )
        assert resp.status_code == 422
        assert "(99,3)" in resp.json()["detail"]

    def test_unknown_id(self, mini_copy):
        client = client_for(mini_copy)
        resp = client.post(
            "/api/images/ghost/preview", json={"foreground_points": [{"x": 1, "y": 1}]}
        )
        assert resp.status_code == 404

    def test_missing_edge_map_409(self, mini_copy):
        mini_copy.edge_path("img03").unlink()
        client = client_for(mini_copy)
        resp = client.post(
            "/api/images/img03/preview", json={"foreground_points": [{"x": 32, "y": 32}]}
        )
        assert resp.status_code == 409

    def test_blocked_seed_no_nudge_is_422_empty_fill(self, mini_copy):
        # Edge map that blocks everything: every pixel above threshold.
        save_gray(GrayMap(np.ones((64, 64))), mini_copy.edge_path("img05"))
        client = client_for(mini_copy)
        resp = client.post(
            "/api/images/img05/preview", json={"foreground_points": [{"x": 30, "y": 30}]}
        )
        assert resp.status_code == 422
        assert "empty-fill" in resp.json()["detail"]

    def test_oversized_image_rejected_413(self, mini_copy):
        big = np.zeros((4, 2100, 3), dtype=np.uint8)
        save_rgb(RasterImage(big), mini_copy.images_dir / "zbig.png")
        client = client_for(mini_copy)
        resp = client.post(
            "/api/images/zbig/preview", json={"foreground_points": [{"x": 1, "y": 1}]}
        )
        assert resp.status_code == 413

    def test_gamma_override_changes_radius(self, mini_copy):
        client = client_for(mini_copy)
        body = {"foreground_points": [{"x": 22, "y": 24}], "gamma": 4.0}
        resp = client.post("/api/images/img01/preview", json=body)
        assert resp.json()["radius"] == pytest.approx(16.0)


class TestSaveAnnotation:
    def test_first_save_and_round_trip(self, fresh_manifest):
        client = client_for(fresh_manifest)
        body = {
            "foreground_points": [{"x": 5, "y": 6}],
            "background_point": {"x": 60, "y": 60},
            "expected_version": 0,
        }
        resp = client.put("/api/images/img01/annotation", json=body)
        assert resp.status_code == 200
        assert resp.json() == {"version": 1}
        got = client.get("/api/images/img01/annotation").json()
        assert got["foreground_points"] == [{"x": 5, "y": 6}]
        assert got["background_point"] == {"x": 60, "y": 60}
        assert got["version"] == 1 and got["status"] == "done"
        listed = {r["id"]: r["status"] for r in client.get("/api/images").json()}
        assert listed["img01"] == "done"

    def test_partial_save_is_in_progress(self, fresh_manifest):
        client = client_for(fresh_manifest)
        body = {"foreground_points": [{"x": 5, "y": 6}], "expected_version": 0}
        assert client.put("/api/images/img02/annotation", json=body).status_code == 200
        assert client.get("/api/images/img02/annotation").json()["status"] == "in_progress"

    def test_stale_save_conflicts(self, fresh_manifest):
        client = client_for(fresh_manifest)
        body = {
            "foreground_points": [{"x": 5, "y": 6}],
            "background_point": {"x": 60, "y": 60},
            "expected_version": 0,
        }
        assert client.put("/api/images/img01/annotation", json=body).status_code == 200
        stale = client.put("/api/images/img01/annotation", json=body)
        assert stale.status_code == 409
        assert stale.json()["detail"]["version"] == 1

    def test_persisted_file_always_parseable(self, fresh_manifest):
        client = client_for(fresh_manifest)
        body = {
            "foreground_points": [{"x": 1, "y": 1}],
            "background_point": {"x": 50, "y": 50},
            "expected_version": 0,
        }
        client.put("/api/images/img03/annotation", json=body)
        records = load_annotations(fresh_manifest.annotations_file)
        assert [r.image_id for r in records] == ["img03"]
        assert records[0].version == 1
        assert not (fresh_manifest.annotations_file.parent / "fresh.json.tmp").exists()

    def test_out_of_bounds_point_rejected(self, fresh_manifest):
        client = client_for(fresh_manifest)
        body = {"foreground_points": [{"x": 200, "y": 1}], "expected_version": 0}
        assert client.put("/api/images/img01/annotation", json=body).status_code == 422

    def test_concurrent_saves_single_winner(self, fresh_manifest):
        client = client_for(fresh_manifest)
        body = {
            "foreground_points": [{"x": 9, "y": 9}],
            "background_point": {"x": 55, "y": 55},
            "expected_version": 0,
        }
        codes = []
        lock = threading.Lock()

        def put():
            resp = client.put("/api/images/img04/annotation", json=body)
            with lock:
                codes.append(resp.status_code)

        threads = [threading.Thread(target=put) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert codes.count(200) == 1
        assert codes.count(409) == 7
        records = load_annotations(fresh_manifest.annotations_file)
        assert records[0].version == 1

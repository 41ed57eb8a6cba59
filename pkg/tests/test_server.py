"""Annotation HTTP service: task flow, validation paths, export."""

import json
import threading
import urllib.error
import urllib.request

import pytest
from PIL import Image

from semcrop.annotation_server import (
    AnnotationService,
    load_task_manifest,
    make_server,
)
from semcrop.datasets import AnnotationStore, load_manifest


@pytest.fixture
def service_env(tmp_path):
    image_dir = tmp_path / "images"
    image_dir.mkdir()
    Image.new("RGB", (1600, 1200), (10, 20, 30)).save(image_dir / "big.png")
    Image.new("RGB", (400, 300), (40, 50, 60)).save(image_dir / "small.png")

    tasks_doc = {
        "version": 1,
        "images": [
            {"id": "big", "path": "big.png", "width": 1600, "height": 1200,
             "entities": ["dog", "person"]},
            {"id": "small", "path": "small.png", "width": 400, "height": 300,
             "entities": [{"name": "cat"}]},
        ],
    }
    tasks_path = tmp_path / "tasks.json"
    tasks_path.write_text(json.dumps(tasks_doc))
    tasks = load_task_manifest(tasks_path)
    images = {t.image.id: t.image for t in tasks}
    store = AnnotationStore(tmp_path / "store.jsonl", images=images)
    service = AnnotationService(image_dir, tasks, store, annotations_per_task=2)
    return service, store


@pytest.fixture
def server(service_env):
    service, store = service_env
    httpd = make_server(("127.0.0.1", 0), service)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    yield base, service, store
    httpd.shutdown()
    httpd.server_close()


def get(url):
    with urllib.request.urlopen(url, timeout=5) as resp:
        body = resp.read()
        return resp.status, json.loads(body) if body else None


def post(url, payload):
    req = urllib.request.Request(
        url, data=json.dumps(payload).encode(), method="POST",
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(req, timeout=5) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


class TestTaskManifest:
    def test_load(self, service_env):
        service, _ = service_env
        ids = [t.task_id for t in service.tasks]
        assert ids == ["big__dog", "big__person", "small__cat"]

    def test_display_scale(self, service_env):
        service, _ = service_env
        big = service.tasks_by_id["big__dog"].image
        small = service.tasks_by_id["small__cat"].image
        assert service.display_scale(big) == pytest.approx(0.5)  # 1600 -> 800
        assert service.display_scale(small) == 1.0  # never upscale


class TestTaskEndpoint:
    def test_next_task_payload(self, server):
        base, service, _ = server
        status, doc = get(f"{base}/api/tasks/next?worker=alice")
        assert status == 200
        assert doc["task_id"] == "big__dog"
        assert doc["image_url"] == "/images/big"
        assert (doc["image_w"], doc["image_h"]) == (1600, 1200)
        assert doc["display_scale"] == pytest.approx(0.5)
        assert doc["entity"] == "dog"
        assert doc["aspect"] == "1:1"

    def test_least_annotated_task_first(self, server):
        base, *_ = server
        post(f"{base}/api/annotations",
             {"task_id": "big__dog", "worker": "alice",
              "crop": {"x": 0, "y": 0, "w": 600, "h": 600}})
        status, doc = get(f"{base}/api/tasks/next?worker=bob")
        assert doc["task_id"] == "big__person"  # big__dog now has one annotation

    def test_worker_never_gets_a_task_twice(self, server):
        base, *_ = server
        post(f"{base}/api/annotations",
             {"task_id": "big__dog", "worker": "alice",
              "crop": {"x": 0, "y": 0, "w": 600, "h": 600}})
        status, doc = get(f"{base}/api/tasks/next?worker=alice")
        assert doc["task_id"] != "big__dog"

    def test_exhausted_worker_gets_no_content(self, server):
        base, *_ = server
        for task, side in (("big__dog", 600), ("big__person", 500), ("small__cat", 200)):
            code, _ = post(f"{base}/api/annotations",
                           {"task_id": task, "worker": "alice",
                            "crop": {"x": 0, "y": 0, "w": side, "h": side}})
            assert code == 201
        status, doc = get(f"{base}/api/tasks/next?worker=alice")
        assert status == 204

    def test_missing_worker_param(self, server):
        base, *_ = server
        try:
            get(f"{base}/api/tasks/next")
            assert False, "expected HTTP 422"
        except urllib.error.HTTPError as err:
            assert err.code == 422


class TestAnnotationEndpoint:
    def test_valid_annotation_round_trip(self, server):
        base, _, store = server
        code, doc = post(f"{base}/api/annotations",
                         {"task_id": "small__cat", "worker": "w9",
                          "crop": {"x": 50, "y": 10, "w": 250, "h": 250}})
        assert code == 201
        assert doc == {"seq": 1}
        status, export = get(f"{base}/api/export")
        assert status == 200
        crops = export["images"][0]["entities"][0]["croppings"]
        assert crops == [{"x": 50, "y": 10, "w": 250, "h": 250}]

    def test_non_square_crop_422(self, server):
        base, *_ = server
        code, doc = post(f"{base}/api/annotations",
                         {"task_id": "small__cat", "worker": "w9",
                          "crop": {"x": 0, "y": 0, "w": 250, "h": 200}})
        assert code == 422
        assert "aspect" in doc["error"]

    def test_out_of_bounds_crop_422(self, server):
        base, *_ = server
        code, doc = post(f"{base}/api/annotations",
                         {"task_id": "small__cat", "worker": "w9",
                          "crop": {"x": 200, "y": 100, "w": 250, "h": 250}})
        assert code == 422
        assert "extends past" in doc["error"]

    def test_duplicate_worker_422(self, server):
        base, *_ = server
        payload = {"task_id": "small__cat", "worker": "w9",
                   "crop": {"x": 0, "y": 0, "w": 250, "h": 250}}
        assert post(f"{base}/api/annotations", payload)[0] == 201
        code, doc = post(f"{base}/api/annotations",
                         {**payload, "crop": {"x": 5, "y": 5, "w": 250, "h": 250}})
        assert code == 422
        assert "already annotated" in doc["error"]

    def test_unknown_task_422(self, server):
        base, *_ = server
        code, doc = post(f"{base}/api/annotations",
                         {"task_id": "ghost", "worker": "w9",
                          "crop": {"x": 0, "y": 0, "w": 50, "h": 50}})
        assert code == 422

    def test_full_task_stops_accepting(self, server):
        base, _, store = server
        for worker in ("w1", "w2"):
            code, _ = post(f"{base}/api/annotations",
                           {"task_id": "small__cat", "worker": worker,
                            "crop": {"x": 0, "y": 0, "w": 250, "h": 250}})
            assert code == 201
        code, doc = post(f"{base}/api/annotations",
                         {"task_id": "small__cat", "worker": "w3",
                          "crop": {"x": 0, "y": 0, "w": 250, "h": 250}})
        assert code == 422
        assert "already has 2" in doc["error"]

    def test_malformed_body_422(self, server):
        base, *_ = server
        code, _ = post(f"{base}/api/annotations", {"task_id": "small__cat"})
        assert code == 422


class TestImageAndExportEndpoints:
    def test_image_bytes_served(self, server):
        base, *_ = server
        with urllib.request.urlopen(f"{base}/images/small", timeout=5) as resp:
            assert resp.status == 200
            assert resp.headers["Content-Type"] == "image/png"
            assert resp.read()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_unknown_image_404(self, server):
        base, *_ = server
        try:
            urllib.request.urlopen(f"{base}/images/ghost", timeout=5)
            assert False, "expected HTTP 404"
        except urllib.error.HTTPError as err:
            assert err.code == 404

    def test_export_loads_as_semantic_manifest(self, server, tmp_path):
        base, *_ = server
        post(f"{base}/api/annotations",
             {"task_id": "big__dog", "worker": "w1",
              "crop": {"x": 10, "y": 20, "w": 700, "h": 700}})
        with urllib.request.urlopen(f"{base}/api/export", timeout=5) as resp:
            text = resp.read().decode()
        path = tmp_path / "export.json"
        path.write_text(text)
        manifest = load_manifest(path, "semantic")
        records = manifest.semantic_records()
        assert len(records) == 1
        assert records[0].entity == "dog"

"""HTTP service backing the crop-annotation tool.

Serves tasks (image plus entity, square aspect) to workers, accepts their
croppings in original-image coordinates, persists them through the annotation
store, and exports the collected ground truth as a semantic manifest.

Endpoints (JSON bodies):

- ``GET /api/tasks/next?worker=ID`` -> ``{task_id, image_url, image_w,
  image_h, display_scale, entity, aspect}`` or 204 when the worker has no
  task left.
- ``GET /images/{id}`` -> image bytes.
- ``POST /api/annotations`` with ``{task_id, worker, crop{x,y,w,h}}`` ->
  201 ``{seq}``, or 422 with a reason.
- ``GET /api/export`` -> semantic manifest document.

The service owns display scaling: it reports a ``display_scale`` chosen so the
displayed image is at most :data:`MAX_DISPLAY_PX` on its longer side, and
clients divide display coordinates by that scale before submitting. Images are
never upscaled.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .datasets import (
    AnnotationRecord,
    AnnotationStore,
    ImageInfo,
    dump_manifest,
    export_semantic_manifest,
)
from .errors import AnnotationError, InvalidInputError, ManifestError
from .geometry import Rect

logger = logging.getLogger(__name__)

MAX_DISPLAY_PX = 800
ANNOTATIONS_PER_TASK = 4

_CONTENT_TYPES = {
    ".png": "image/png",
    ".ppm": "image/x-portable-pixmap",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
}


@dataclass(frozen=True)
class AnnotationTask:
    """One unit of work: crop this image for this entity."""

    task_id: str
    image: ImageInfo
    entity: str


def load_task_manifest(path: str | Path) -> list[AnnotationTask]:
    """Read a task manifest: the semantic manifest image schema, croppings not required.

    Entities may be plain strings or ``{"name": ...}`` objects. Task ids are
    ``<image_id>__<entity>`` with the entity lowercased and underscored.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: cannot read task manifest: {exc}") from exc
    if not isinstance(doc, dict) or "images" not in doc:
        raise ManifestError(f"{path}: task manifest needs an 'images' list")
    tasks: list[AnnotationTask] = []
    for entry in doc["images"]:
        try:
            image = ImageInfo(
                id=str(entry["id"]),
                path=str(entry.get("path", "")),
                width=int(entry["width"]),
                height=int(entry["height"]),
            )
            entities = entry["entities"]
        except (KeyError, TypeError, ValueError, InvalidInputError) as exc:
            raise ManifestError(f"{path}: malformed task entry {entry!r}: {exc}") from exc
        for ent in entities:
            name = ent["name"] if isinstance(ent, dict) else str(ent)
            slug = "_".join(name.lower().split())
            tasks.append(AnnotationTask(f"{image.id}__{slug}", image, name))
    if not tasks:
        raise ManifestError(f"{path}: task manifest defines no tasks")
    return tasks


class AnnotationService:
    """Task assignment and annotation intake on top of an :class:`AnnotationStore`."""

    def __init__(
        self,
        image_dir: str | Path,
        tasks: list[AnnotationTask],
        store: AnnotationStore,
        annotations_per_task: int = ANNOTATIONS_PER_TASK,
        max_display_px: int = MAX_DISPLAY_PX,
    ):
        self.image_dir = Path(image_dir)
        self.tasks = list(tasks)
        self.tasks_by_id = {t.task_id: t for t in self.tasks}
        if len(self.tasks_by_id) != len(self.tasks):
            raise InvalidInputError("task ids are not unique")
        self.store = store
        self.annotations_per_task = annotations_per_task
        self.max_display_px = max_display_px
        self._assign_lock = threading.Lock()

    def display_scale(self, image: ImageInfo) -> float:
        longest = max(image.width, image.height)
        if longest <= self.max_display_px:
            return 1.0
        return self.max_display_px / longest

    def next_task_for(self, worker: str) -> AnnotationTask | None:
        """Least-annotated open task this worker has not done yet; manifest order breaks ties."""
        with self._assign_lock:
            best: tuple[int, int] | None = None
            chosen: AnnotationTask | None = None
            for index, task in enumerate(self.tasks):
                count = self.store.count_for_task(task.task_id)
                if count >= self.annotations_per_task:
                    continue
                if self.store.has(task.task_id, worker):
                    continue
                key = (count, index)
                if best is None or key < best:
                    best = key
                    chosen = task
            return chosen

    def task_payload(self, task: AnnotationTask) -> dict:
        return {
            "task_id": task.task_id,
            "image_url": f"/images/{task.image.id}",
            "image_w": task.image.width,
            "image_h": task.image.height,
            "display_scale": self.display_scale(task.image),
            "entity": task.entity,
            "aspect": "1:1",
        }

    def submit(self, task_id: str, worker: str, crop: Rect) -> int:
        task = self.tasks_by_id.get(task_id)
        if task is None:
            raise AnnotationError(f"unknown task {task_id!r}")
        if self.store.count_for_task(task_id) >= self.annotations_per_task:
            raise AnnotationError(
                f"task {task_id!r} already has {self.annotations_per_task} annotations"
            )
        rec = AnnotationRecord(
            task_id=task_id,
            image_id=task.image.id,
            entity=task.entity,
            worker_id=worker,
            crop=crop,
        )
        return self.store.append(rec)

    def image_bytes(self, image_id: str) -> tuple[bytes, str]:
        task = next((t for t in self.tasks if t.image.id == image_id), None)
        if task is None:
            raise FileNotFoundError(image_id)
        path = (self.image_dir / task.image.path).resolve()
        if not str(path).startswith(str(self.image_dir.resolve())):
            raise FileNotFoundError(image_id)
        content_type = _CONTENT_TYPES.get(path.suffix.lower(), "application/octet-stream")
        return path.read_bytes(), content_type

    def export_manifest(self) -> str:
        images = {t.image.id: t.image for t in self.tasks}
        return dump_manifest(export_semantic_manifest(self.store, images))


def _make_handler(service: AnnotationService, ui_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # route through logging, not stderr
            logger.debug("%s - %s", self.address_string(), fmt % args)

        def _send(self, status: int, body: bytes, content_type: str) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, status: int, payload: dict) -> None:
            self._send(status, json.dumps(payload).encode("utf-8"), "application/json")

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            url = urlparse(self.path)
            if url.path == "/api/tasks/next":
                worker = parse_qs(url.query).get("worker", [""])[0]
                if not worker:
                    self._send_json(422, {"error": "worker query parameter is required"})
                    return
                task = service.next_task_for(worker)
                if task is None:
                    self._send(204, b"", "application/json")
                    return
                self._send_json(200, service.task_payload(task))
            elif url.path.startswith("/images/"):
                image_id = url.path[len("/images/") :]
                try:
                    body, content_type = service.image_bytes(image_id)
                except FileNotFoundError:
                    self._send_json(404, {"error": f"unknown image {image_id!r}"})
                    return
                self._send(200, body, content_type)
            elif url.path == "/api/export":
                self._send(200, service.export_manifest().encode("utf-8"), "application/json")
            elif ui_dir is not None:
                self._serve_static(url.path)
            else:
                self._send_json(404, {"error": f"no such endpoint {url.path!r}"})

        def _serve_static(self, path: str) -> None:
            rel = path.lstrip("/") or "index.html"
            target = (ui_dir / rel).resolve()
            if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
                self._send_json(404, {"error": f"no such file {path!r}"})
                return
            content_type = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
            self._send(200, target.read_bytes(), content_type)

        def do_POST(self):
            url = urlparse(self.path)
            if url.path != "/api/annotations":
                self._send_json(404, {"error": f"no such endpoint {url.path!r}"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length).decode("utf-8"))
                task_id = str(payload["task_id"])
                worker = str(payload["worker"])
                crop = Rect(
                    int(payload["crop"]["x"]),
                    int(payload["crop"]["y"]),
                    int(payload["crop"]["w"]),
                    int(payload["crop"]["h"]),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError,
                    InvalidInputError) as exc:
                self._send_json(422, {"error": f"malformed annotation: {exc}"})
                return
            try:
                seq = service.submit(task_id, worker, crop)
            except AnnotationError as exc:
                self._send_json(422, {"error": str(exc)})
                return
            self._send_json(201, {"seq": seq})

    return Handler


def make_server(
    address: tuple[str, int], service: AnnotationService, ui_dir: str | Path | None = None
) -> ThreadingHTTPServer:
    """Build the HTTP server; caller runs ``serve_forever`` (or a thread does)."""
    handler = _make_handler(service, Path(ui_dir) if ui_dir else None)
    return ThreadingHTTPServer(address, handler)

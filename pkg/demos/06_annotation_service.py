"""A complete annotation session against a live service instance.

Starts the annotation HTTP service on a scratch port, then plays both sides:
fetch a task, submit croppings in original-image coordinates (the service
reports the display scale, the client divides by it), hit the validation
paths, and export the collected ground truth as a loadable manifest.
"""

import json
import tempfile
import threading
import urllib.error
import urllib.request
from pathlib import Path

from PIL import Image

from semcrop.annotation_server import AnnotationService, load_task_manifest, make_server
from semcrop.datasets import AnnotationStore

tmp = tempfile.TemporaryDirectory()
root = Path(tmp.name)

# -- 1. Stage one large task image and a two-entity task manifest ---------------

(root / "images").mkdir()
Image.new("RGB", (1600, 1000), (80, 110, 140)).save(root / "images" / "beach.png")
(root / "tasks.json").write_text(json.dumps({
    "version": 1,
    "images": [{"id": "beach", "path": "beach.png", "width": 1600, "height": 1000,
                "entities": ["dog", "person"]}],
}))

tasks = load_task_manifest(root / "tasks.json")
store = AnnotationStore(root / "store.jsonl", images={t.image.id: t.image for t in tasks})
service = AnnotationService(root / "images", tasks, store)
httpd = make_server(("127.0.0.1", 0), service)
threading.Thread(target=httpd.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{httpd.server_address[1]}"
print(f"service listening on {base}")


def get(path):
    with urllib.request.urlopen(base + path, timeout=5) as resp:
        return json.loads(resp.read() or b"null")


def post(path, payload):
    req = urllib.request.Request(base + path, data=json.dumps(payload).encode(),
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=5) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


# -- 2. A worker asks for a task -------------------------------------------------

task = get("/api/tasks/next?worker=alice")
print(f"task {task['task_id']}: crop the {task['entity']!r}, aspect {task['aspect']}")
print(f"image is {task['image_w']}x{task['image_h']}, shown at "
      f"scale {task['display_scale']} (fits under 800 px)")

# -- 3. The client drew a 300x300 square at display (55, 40) ---------------------

scale = task["display_scale"]
crop = {"x": round(55 / scale), "y": round(40 / scale),
        "w": round(300 / scale), "h": round(300 / scale)}
status, body = post("/api/annotations", {"task_id": task["task_id"],
                                         "worker": "alice", "crop": crop})
print(f"submit {crop} -> {status}, seq {body['seq']}")

# -- 4. Validation is server-side and absolute -----------------------------------

status, body = post("/api/annotations", {"task_id": task["task_id"], "worker": "bob",
                                         "crop": {"x": 0, "y": 0, "w": 500, "h": 400}})
print(f"non-square crop -> {status}: {body['error']}")

status, body = post("/api/annotations", {"task_id": task["task_id"], "worker": "alice",
                                         "crop": {"x": 0, "y": 0, "w": 400, "h": 400}})
print(f"duplicate worker -> {status}: {body['error']}")

# -- 5. More workers fill the task up to its quota --------------------------------

for worker, offset in (("bob", 200), ("carol", 400), ("dave", 600)):
    post("/api/annotations", {"task_id": task["task_id"], "worker": worker,
                              "crop": {"x": offset, "y": 100, "w": 600, "h": 600}})
print(f"open task for eve is now: {get('/api/tasks/next?worker=eve')['task_id']} "
      "(the dog task reached 4 annotations)")

# -- 6. Export the collected ground truth -----------------------------------------

manifest = get("/api/export")
pair = manifest["images"][0]["entities"][0]
print(f"export: image {manifest['images'][0]['id']!r}, entity {pair['name']!r}, "
      f"{len(pair['croppings'])} croppings, all in original coordinates")

httpd.shutdown()
httpd.server_close()
tmp.cleanup()

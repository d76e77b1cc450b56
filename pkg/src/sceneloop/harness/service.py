"""Annotation collection service.

A small threaded HTTP server exposing the blinded pair queue:

  GET  /api/pairs/next?annotator=ID  next unanswered pair for that
                                     annotator (seeded per-annotator
                                     presentation order) or a done marker
  POST /api/responses                append one validated response
  GET  /api/progress?annotator=ID    answered / total
  GET  /img/<pair_id>/<left|right>   the pair's images under neutral URLs
  GET  /...                          static files from the UI bundle dir

Payloads never contain system identities; images are served through
opaque pair ids only. Response appends are serialized through a lock;
the store is JSON Lines, append-only.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .pairs import PairManifest
from .stats import Response, append_response, load_responses

logger = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".pgm": "image/x-portable-graymap",
    ".json": "application/json",
    ".ico": "image/x-icon",
}


def annotator_order_seed(batch_seed: int, annotator_id: str) -> int:
    digest = hashlib.sha256(annotator_id.encode("utf-8")).digest()
    return batch_seed ^ int.from_bytes(digest[:8], "big")


class AnnotationService:
    def __init__(
        self,
        manifest: PairManifest,
        store_path: str | Path,
        ui_dir: str | Path | None = None,
    ):
        self.manifest = manifest
        self.store_path = Path(store_path)
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        self._lock = threading.Lock()
        self._answered: set[tuple[str, str]] = {
            (r.annotator_id, r.pair_id) for r in load_responses(self.store_path)
        }
        self._pair_ids = [p.pair_id for p in manifest.pairs]
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # --- queue logic ---------------------------------------------------

    def presentation_order(self, annotator_id: str) -> list[str]:
        order = sorted(self._pair_ids)
        random.Random(annotator_order_seed(self.manifest.seed, annotator_id)).shuffle(order)
        return order

    def next_pair(self, annotator_id: str) -> dict:
        with self._lock:
            answered = {p for (a, p) in self._answered if a == annotator_id}
        total = len(self._pair_ids)
        for pair_id in self.presentation_order(annotator_id):
            if pair_id not in answered:
                pair = self.manifest.pair(pair_id)
                return {
                    "pair_id": pair_id,
                    "left_url": f"/img/{pair_id}/left",
                    "right_url": f"/img/{pair_id}/right",
                    "goal_text": pair.goal_text,
                    "progress": {"answered": len(answered), "total": total},
                }
        return {"done": True, "progress": {"answered": len(answered), "total": total}}

    def progress(self, annotator_id: str) -> dict:
        with self._lock:
            answered = sum(1 for (a, _) in self._answered if a == annotator_id)
        return {"answered": answered, "total": len(self._pair_ids)}

    def submit(self, payload: dict) -> tuple[int, dict]:
        """Validate and append one response; returns (status, body)."""
        try:
            likert = payload.get("likert")
            response = Response(
                pair_id=str(payload.get("pair_id", "")),
                annotator_id=str(payload.get("annotator_id", "")),
                choice=payload.get("choice", ""),
                likert=tuple(likert) if likert else None,
                timestamp=datetime.now(timezone.utc).isoformat(),
            )
        except (ValueError, TypeError) as e:
            return 400, {"error": str(e)}
        if response.pair_id not in self._pair_ids:
            return 404, {"error": f"unknown pair {response.pair_id}"}
        with self._lock:
            key = (response.annotator_id, response.pair_id)
            if key in self._answered:
                return 409, {"error": "duplicate response for this pair"}
            append_response(self.store_path, response)
            self._answered.add(key)
        return 201, {"ok": True}

    def image_path(self, pair_id: str, side: str) -> Path | None:
        try:
            pair = self.manifest.pair(pair_id)
        except KeyError:
            return None
        if side == "left":
            return Path(pair.left_path)
        if side == "right":
            return Path(pair.right_path)
        return None

    # --- http ------------------------------------------------------------

    def start(self, host: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        handler = _make_handler(self)
        self._server = ThreadingHTTPServer((host, port), handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self._server.server_address[:2]

    def serve_forever(self, host: str = "127.0.0.1", port: int = 8400) -> None:
        handler = _make_handler(self)
        self._server = ThreadingHTTPServer((host, port), handler)
        logger.info("annotation service on http://%s:%d", host, port)
        self._server.serve_forever()

    def shutdown(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def _make_handler(service: AnnotationService):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # quiet by default
            logger.debug("%s " + fmt, self.client_address[0], *args)

        def _send_json(self, status: int, body: dict) -> None:
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _send_file(self, path: Path) -> None:
            if not path.is_file():
                self._send_json(404, {"error": "not found"})
                return
            data = path.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type",
                _CONTENT_TYPES.get(path.suffix.lower(), "application/octet-stream"),
            )
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            url = urlparse(self.path)
            query = parse_qs(url.query)
            if url.path == "/api/pairs/next":
                annotator = query.get("annotator", [""])[0]
                if not annotator:
                    self._send_json(400, {"error": "annotator query parameter required"})
                    return
                self._send_json(200, service.next_pair(annotator))
                return
            if url.path == "/api/progress":
                annotator = query.get("annotator", [""])[0]
                if not annotator:
                    self._send_json(400, {"error": "annotator query parameter required"})
                    return
                self._send_json(200, service.progress(annotator))
                return
            if url.path.startswith("/img/"):
                parts = url.path.split("/")
                if len(parts) == 4:
                    image = service.image_path(parts[2], parts[3])
                    if image is not None:
                        self._send_file(image)
                        return
                self._send_json(404, {"error": "not found"})
                return
            if service.ui_dir is not None:
                rel = url.path.lstrip("/") or "index.html"
                target = (service.ui_dir / rel).resolve()
                if service.ui_dir in target.parents or target == service.ui_dir:
                    self._send_file(target)
                    return
            self._send_json(404, {"error": "not found"})

        def do_POST(self):
            url = urlparse(self.path)
            if url.path != "/api/responses":
                self._send_json(404, {"error": "not found"})
                return
            length = int(self.headers.get("Content-Length") or 0)
            try:
                payload = json.loads(self.rfile.read(length).decode("utf-8"))
            except (ValueError, UnicodeDecodeError):
                self._send_json(400, {"error": "body must be JSON"})
                return
            status, body = service.submit(payload)
            self._send_json(status, body)

    return Handler


def serve_annotation(
    manifest: PairManifest,
    store_path: str | Path,
    ui_dir: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 0,
) -> tuple[AnnotationService, tuple[str, int]]:
    """Start the annotation service on a background thread; returns the
    service handle and its bound (host, port)."""
    service = AnnotationService(manifest, store_path, ui_dir)
    address = service.start(host, port)
    return service, address

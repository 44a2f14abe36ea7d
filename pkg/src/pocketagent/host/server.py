"""HTTP surface consumed by the companion UI.

Protocol:
    GET  /observation        current Observation (or {"foreground": null})
    POST /gesture            gesture dict -> applied transition
    POST /query              {"text": ..., "session": ...} text trigger
    POST /record/start       {"session": ...}
    POST /record/stop        {} -> skill + bookmark names
    POST /replay/<name>      tier ladder replay of a stored bookmark
    GET  /skills             stored skill cards
    GET  /memory/entries     gallery memory entries
    GET  /events             server-sent events: step / screen / response

Every request is serialized against the device through the host lock; the
server adds no state of its own.
"""

from __future__ import annotations

import json
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .. import errors
from ..device import gesture_from_dict
from ..events import TriggerEvent
from .session import Host


def _json_bytes(payload) -> bytes:
    return (json.dumps(payload, sort_keys=True) + "\n").encode("utf-8")


class _Handler(BaseHTTPRequestHandler):
    host: Host  # injected by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):  # quiet by default
        pass

    def _send(self, status: int, payload) -> None:
        body = _json_bytes(payload)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0") or 0)
        if length == 0:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError:
            return {}

    # -- GET ---------------------------------------------------------------

    def do_GET(self):
        try:
            if self.path == "/observation":
                with self.host.lock:
                    if self.host.device.foreground is None:
                        self._send(200, {"foreground": None})
                    else:
                        self._send(200, self.host.device.snapshot().to_dict())
            elif self.path == "/skills":
                with self.host.lock:
                    cards = [c.to_dict() for c in self.host.store.list_skills()]
                self._send(200, {"skills": cards})
            elif self.path == "/memory/entries":
                with self.host.lock:
                    mfile = self.host.store.gallery.load_file()
                entries = [{
                    "filename": e.filename,
                    "captured_at": e.captured_at,
                    "kind": e.summary_kind,
                    "objects": list(e.objects),
                    "scene": e.scene,
                    "event": e.event,
                    "text": e.free_text,
                } for e in mfile.entries]
                self._send(200, {"entries": entries, "cursor": mfile.cursor})
            elif self.path == "/events":
                self._stream_events()
            else:
                self._send(404, {"error": "not found"})
        except errors.AgentError as exc:
            self._send(409, {"error": type(exc).__name__, "detail": str(exc)})

    def _stream_events(self):
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        subscription = self.host.events.subscribe()
        try:
            while not getattr(self.server, "_shutting_down", False):
                try:
                    event = subscription.get(timeout=0.25)
                except queue.Empty:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                blob = json.dumps(event, sort_keys=True)
                self.wfile.write(f"data: {blob}\n\n".encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            self.host.events.unsubscribe(subscription)

    # -- POST -----------------------------------------------------------------

    def do_POST(self):
        try:
            body = self._body()
            if self.path == "/gesture":
                gesture = gesture_from_dict(body)
                with self.host.lock:
                    page = self.host.device.apply_gesture(gesture)
                    self.host.events.publish({
                        "type": "screen",
                        "activity": page.activity if page else None})
                self._send(200, {"ok": True,
                                 "activity": page.activity if page else None})
            elif self.path == "/query":
                text = body.get("text", "")
                session_id = body.get("session", "ui")
                with self.host.lock:
                    logs = self.host.submit(TriggerEvent(
                        source="ui", timestamp=self.host.device.clock,
                        payload=text, session_id=session_id))
                self._send(200, {"responses": [t.to_dict() for t in logs]})
            elif self.path == "/record/start":
                with self.host.lock:
                    self.host.start_recording(body.get("session", "ui"))
                self._send(200, {"recording": True})
            elif self.path == "/record/stop":
                with self.host.lock:
                    trajectory, card, bookmark = self.host.stop_recording()
                self._send(200, {
                    "recording": False,
                    "steps": len(trajectory.steps),
                    "skill": card.name if card else None,
                    "bookmark": bookmark.name if bookmark else None,
                })
            elif self.path.startswith("/replay/"):
                name = self.path[len("/replay/"):]
                with self.host.lock:
                    outcome = self.host.replay_bookmark(name)
                self._send(200, outcome.to_dict())
            else:
                self._send(404, {"error": "not found"})
        except errors.AgentError as exc:
            self._send(409, {"error": type(exc).__name__, "detail": str(exc)})


class AgentServer:
    """Owns the listening socket and its serving thread."""

    def __init__(self, host: Host, port: int, address: str = "127.0.0.1"):
        handler = type("BoundHandler", (_Handler,), {"host": host})
        try:
            self._server = ThreadingHTTPServer((address, port), handler)
        except OSError as exc:
            raise errors.PortInUse(f"port {port}: {exc}") from exc
        self._server.daemon_threads = True
        self._thread: Optional[threading.Thread] = None
        self.port = self._server.server_address[1]

    def start(self) -> "AgentServer":
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="pocketagent-server", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def shutdown(self) -> None:
        self._server._shutting_down = True
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2)


def serve(host: Host, port: int, address: str = "127.0.0.1") -> AgentServer:
    """Bind and start serving in a background thread; PortInUse if bound."""
    return AgentServer(host, port, address).start()

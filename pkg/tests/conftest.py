import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest


class ScriptedHandler(BaseHTTPRequestHandler):
    """Test double for the augmentation wire protocol.

    Behavior is switched through ``server.mode``: echo (default), boom
    (500), not-json, wrong-shape, or slow-once (first request stalls).
    """

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        mode = self.server.mode  # type: ignore[attr-defined]
        self.server.hits += 1  # type: ignore[attr-defined]
        if self.path != "/v1/augment":
            self.send_error(404)
            return
        if mode == "boom":
            self.send_error(500, "model exploded")
            return
        if mode == "slow-once" and self.server.hits == 1:  # type: ignore[attr-defined]
            time.sleep(1.2)
        if mode == "not-json":
            payload = b"<html>oops</html>"
        elif mode == "wrong-shape":
            payload = json.dumps({"text": body.get("text", "")}).encode()
        else:
            payload = json.dumps({"augmented_text": body.get("text", "")}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def scripted_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), ScriptedHandler)
    server.mode = "echo"  # type: ignore[attr-defined]
    server.hits = 0  # type: ignore[attr-defined]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server, f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        thread.join(timeout=5)

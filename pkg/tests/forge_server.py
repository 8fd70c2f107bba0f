"""A local HTTP stand-in for the forge members API, used to exercise the
client against recorded responses (pagination, auth failures, rate
limiting) without touching the network."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from urllib.parse import parse_qs, urlparse

GOOD_TOKEN = "good-token-123"
TOTAL_MEMBERS = 150
PER_PAGE = 100


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output quiet
        pass

    def _send(self, status: int, payload, headers: dict[str, str] | None = None):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        for k, v in (headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlparse(self.path)
        query = parse_qs(url.query)
        parts = url.path.strip("/").split("/")
        if len(parts) != 3 or parts[0] != "orgs" or parts[2] != "members":
            self._send(404, {"message": "Not Found"})
            return
        org = parts[1]

        if self.headers.get("Authorization") != f"Bearer {GOOD_TOKEN}":
            self._send(401, {"message": "Bad credentials"})
            return
        if org == "missing":
            self._send(404, {"message": "Not Found"})
            return
        if org == "limited":
            self._send(403, {"message": "API rate limit exceeded"},
                       {"X-RateLimit-Remaining": "0",
                        "X-RateLimit-Reset": "1700000000"})
            return
        if org == "empty":
            self._send(200, [])
            return

        page = int(query.get("page", ["1"])[0])
        start = (page - 1) * PER_PAGE
        logins = [{"login": f"Member{i:03d}"}
                  for i in range(start, min(start + PER_PAGE, TOTAL_MEMBERS))]
        headers = {}
        if start + PER_PAGE < TOTAL_MEMBERS:
            base = f"http://{self.headers['Host']}{url.path}"
            headers["Link"] = \
                f'<{base}?per_page={PER_PAGE}&page={page + 1}>; rel="next"'
        self._send(200, logins, headers)


class ForgeFixture:
    """Context manager running the fixture server on an ephemeral port."""

    def __enter__(self):
        self.server = HTTPServer(("127.0.0.1", 0), _Handler)
        self.thread = threading.Thread(target=self.server.serve_forever,
                                       daemon=True)
        self.thread.start()
        self.base_url = f"http://127.0.0.1:{self.server.server_port}"
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)
        return False

#!/usr/bin/env python3
"""Serve the eight-model fixture bundle over HTTP for the scenario explorer.

With --with-ui the demo also serves the built frontend (frontend/index.html
and frontend/dist/*) from the same origin; the JSON endpoints are unchanged.
Build the frontend first: cd frontend && npm install && npm run build.

Usage: python scripts/serve_fixture.py [--port 8080] [--host 127.0.0.1] [--with-ui]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
sys.path.insert(0, str(Path(__file__).resolve().parent))

from run_fixture_pipeline import build_bundle  # noqa: E402

from deployselect.server import _Handler, make_server, run_server  # noqa: E402

FRONTEND = Path(__file__).resolve().parents[1] / "frontend"


class _UiHandler(_Handler):
    """JSON endpoints plus static files for the explorer demo."""

    def do_GET(self):
        if self.path in ("/", "/index.html"):
            return self._send_file(FRONTEND / "index.html", "text/html")
        if self.path.startswith("/dist/") and self.path.endswith(".js"):
            return self._send_file(FRONTEND / self.path.lstrip("/"), "text/javascript")
        super().do_GET()

    def _send_file(self, path: Path, content_type: str):
        if not path.is_file():
            self._send(404, {"error": f"missing {path.name}; run npm run build first"})
            return
        body = path.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--with-ui", action="store_true",
                        help="also serve the built frontend from this origin")
    args = parser.parse_args()
    bundle = build_bundle()
    if not args.with_ui:
        run_server(bundle, host=args.host, port=args.port)
        return 0
    server = make_server(bundle, host=args.host, port=args.port)
    server.RequestHandlerClass = _UiHandler
    print(f"explorer on http://{args.host}:{args.port}/")
    try:
        server.serve_forever()
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())

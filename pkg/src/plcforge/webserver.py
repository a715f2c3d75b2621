# plcforge
# MIT License
#
# Copyright (c) 2026 The plcforge developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
"""
HTTP and HTTPS front end for the runtime
"""
import threading

from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import AQUA, PROJECT_NAME
from . import _lazy_imports as _laz
from ._logger import log
from .aquasec import load_tls_material, server_ssl_context
from .runtime import Request, Runtime


class ForgeRequestHandler(BaseHTTPRequestHandler):
    # One request per connection
    protocol_version = "HTTP/1.0"
    server_version = "OpenPLC"
    sys_version = ""

    def _dispatch(self):
        try:
            length = int(self.headers.get("Content-Length", 0) or 0)
        except ValueError:
            self.send_error(400, "Bad Content-Length")
            return
        body = self.rfile.read(length) if length > 0 else b""

        request = Request.from_http(
            method=self.command,
            target=self.path,
            headers=dict(self.headers.items()),
            body=body,
            client_ip=self.client_address[0],
        )
        response = self.server.runtime.dispatch(request)

        self.send_response(response.status, response.reason)
        for key, value in response.headers.items():
            self.send_header(key, value)
        self.send_header("Content-Length", str(len(response.body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(response.body)

    do_GET = _dispatch
    do_POST = _dispatch

    def log_message(self, format, *args):
        if self.server.runtime.config.access_log:
            log(f"{self.client_address[0]} {format % args}")


class ForgeHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, runtime: Runtime, address: tuple[str, int], ssl_context=None):
        self.runtime = runtime
        self.ssl_context = ssl_context
        super().__init__(address, ForgeRequestHandler)

    def finish_request(self, request, client_address):
        if self.ssl_context is not None:
            # Handshake in the worker thread, a bad client only costs its own connection
            try:
                request = self.ssl_context.wrap_socket(request, server_side=True)
            except (_laz.ssl.SSLError, OSError) as e:
                if self.runtime.config.access_log:
                    log(f"{client_address[0]} TLS handshake failed: {e}")
                return
        try:
            super().finish_request(request, client_address)
        except (_laz.ssl.SSLError, ConnectionError):
            pass
        finally:
            if self.ssl_context is not None:
                try:
                    request.close()
                except OSError:
                    pass


class WebServer:
    """
    A runtime served on a background thread
    """
    def __init__(self, runtime: Runtime, host: str = "127.0.0.1", port: int | None = None):
        config = runtime.config
        self.runtime = runtime
        self.tls = None
        ssl_context = None
        if runtime.profile == AQUA:
            self.tls = load_tls_material(runtime.store)
            ssl_context = server_ssl_context(self.tls)

        port = config.web_port if port is None else port
        self.httpd = ForgeHTTPServer(runtime, (host, port), ssl_context)
        self._thread: threading.Thread | None = None

    def __enter__(self):
        return self.start()

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    @property
    def scheme(self) -> str:
        return "https" if self.tls is not None else "http"

    @property
    def url(self) -> str:
        host, port = self.address
        return f"{self.scheme}://{host}:{port}"

    def start(self) -> "WebServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        log(f"{PROJECT_NAME} {self.runtime.profile} webserver listening on {self.url}")
        return self

    def serve_forever(self) -> None:
        log(f"{PROJECT_NAME} {self.runtime.profile} webserver listening on {self.url}")
        self.httpd.serve_forever()

    def stop(self) -> None:
        if self._thread is not None:
            self.httpd.shutdown()
            self._thread.join()
            self._thread = None
        self.httpd.server_close()

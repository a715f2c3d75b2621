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
An HTTP(S) client for the runtime, used by the operator and attacker roles
"""
import time

from ducktools.classbuilder.prefab import Prefab, prefab, attribute

from . import COMPILE_SENTINEL
from . import _lazy_imports as _laz
from .exceptions import LifecycleError, TransportError
from .sessions import COOKIE_NAME


COPY_NAME_FIELD = r'name="copy_name" value="([0-9]{6}\.st)"'
LOG_POLL_INTERVAL = 0.01


@prefab(frozen=True)
class ClientResponse:
    status: int
    headers: dict
    body: bytes

    @property
    def text(self) -> str:
        return self.body.decode("utf-8", errors="replace")

    def header(self, name: str, default: str | None = None) -> str | None:
        name = name.lower()
        for key, value in self.headers.items():
            if key.lower() == name:
                return value
        return default


class ForgeClient(Prefab, kw_only=True):
    host: str
    port: int
    source_ip: str | None = None
    ssl_context: object = None
    timeout: float = 5.0

    cookies: dict[str, str] = attribute(default_factory=dict, init=False)

    @property
    def token(self) -> str | None:
        return self.cookies.get(COOKIE_NAME)

    def _connection(self):
        source = (self.source_ip, 0) if self.source_ip else None
        if self.ssl_context is not None:
            return _laz.http_client.HTTPSConnection(
                self.host,
                self.port,
                timeout=self.timeout,
                source_address=source,
                context=self.ssl_context,
            )
        return _laz.http_client.HTTPConnection(
            self.host,
            self.port,
            timeout=self.timeout,
            source_address=source,
        )

    def request(
        self,
        method: str,
        path: str,
        *,
        body: bytes | None = None,
        form: dict[str, str] | None = None,
        headers: dict[str, str] | None = None,
    ) -> ClientResponse:
        """
        Send one request on a fresh connection, keeping any session cookie set

        :raises TransportError: if the connection or TLS handshake fails
        """
        headers = dict(headers or {})
        if form is not None:
            body = _laz.urlencode(form).encode("ascii")
            headers["Content-Type"] = "application/x-www-form-urlencoded"
        elif body is not None:
            headers.setdefault("Content-Type", "application/octet-stream")
        if self.cookies:
            headers["Cookie"] = "; ".join(f"{k}={v}" for k, v in self.cookies.items())

        conn = self._connection()
        try:
            conn.request(method, path, body=body, headers=headers)
            raw = conn.getresponse()
            response = ClientResponse(
                status=raw.status,
                headers=dict(raw.getheaders()),
                body=raw.read(),
            )
        except (OSError, _laz.http_client.HTTPException) as e:
            raise TransportError(f"{method} {path} to {self.host}:{self.port} failed: {e}")
        finally:
            conn.close()

        if set_cookie := response.header("Set-Cookie"):
            jar = _laz.SimpleCookie()
            jar.load(set_cookie)
            self.cookies.update({k: m.value for k, m in jar.items()})
        return response

    def get(self, path: str) -> ClientResponse:
        return self.request("GET", path)

    def post(self, path: str, **kwargs) -> ClientResponse:
        return self.request("POST", path, **kwargs)

    # Operator workflow
    @staticmethod
    def _expect(response: ClientResponse, status: int, step: str) -> ClientResponse:
        if response.status != status:
            raise LifecycleError(
                f"{step} returned {response.status}, expected {status}: {response.text[:200]}",
                status=response.status,
            )
        return response

    def login(self, username: str, password: str) -> ClientResponse:
        return self.post("/login", form={"username": username, "password": password})

    def upload(self, content: bytes) -> str:
        response = self._expect(
            self.post("/upload-program", body=content), 200, "upload-program"
        )
        match = _laz.re.search(COPY_NAME_FIELD, response.text)
        if match is None:
            raise LifecycleError("upload-program page holds no copy name", status=response.status)
        return match.group(1)

    def register(self, title: str, copy_name: str, description: str = "") -> ClientResponse:
        return self._expect(
            self.post(
                "/upload-program-action",
                form={"prog_name": title, "prog_descr": description, "copy_name": copy_name},
            ),
            200,
            "upload-program-action",
        )

    def compile(self, copy_name: str) -> ClientResponse:
        query = _laz.urlencode({"file": copy_name})
        return self._expect(self.get(f"/compile-program?{query}"), 200, "compile-program")

    def poll_logs(self, timeout: float = 10.0) -> tuple[str, int]:
        """
        Poll compilation-logs until the job ends

        :return: the final log text and the number of polls made
        """
        deadline = time.monotonic() + timeout
        polls = 0
        while True:
            response = self._expect(self.get("/compilation-logs"), 200, "compilation-logs")
            polls += 1
            text = response.text
            last_line = text.rsplit("\n", 1)[-1]
            if last_line == COMPILE_SENTINEL or last_line.startswith("Error:"):
                return text, polls
            if time.monotonic() > deadline:
                raise LifecycleError("Compilation did not finish in time", status=response.status)
            time.sleep(LOG_POLL_INTERVAL)

    def start(self) -> ClientResponse:
        return self.get("/start-plc")

    def stop(self) -> ClientResponse:
        return self.get("/stop-plc")

    def deploy(self, content: bytes, title: str, description: str = "") -> str:
        """
        Upload, register, compile and start a program

        :return: the copy name the server gave the upload
        """
        copy_name = self.upload(content)
        self.register(title, copy_name, description)
        self.compile(copy_name)
        text, _ = self.poll_logs()
        if not text.endswith(COMPILE_SENTINEL):
            raise LifecycleError(f"Compilation failed: {text}", status=200)
        self._expect(self.start(), 302, "start-plc")
        return copy_name

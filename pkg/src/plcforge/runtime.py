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
The operator facing service: login, sessions, the upload, compile and start
lifecycle, program pages, the hardware hook and the scan loop.

Handlers work on plain Request/Response objects; webserver.py puts them on the wire.
"""
import threading
import time

from collections.abc import Callable

from ducktools.classbuilder.prefab import Prefab, attribute

from . import AQUA, LEGACY, TEMPORAL_PROGRAM
from . import _lazy_imports as _laz
from ._logger import log
from .aquasec import (
    PASSWORD,
    USERNAME,
    ActivityEntry,
    ActivityLog,
    CredentialVault,
    Whitelist,
    encrypt_field,
    log_activity,
    purge_program,
    verify_upload,
)
from .config import ForgeConfig
from .exceptions import (
    ForgeError,
    HookScriptError,
    InvalidRecord,
    MissingCopy,
    PermissionDenied,
    StError,
    UnknownProgram,
)
from .fieldbus import PlantImage
from .hooks import LogCommand, WriteCommand, parse_hook_script
from .sessions import COOKIE_NAME, Session, SessionTable, new_token
from .stlang import CompiledProgram, compile_program, parse, scan_cycle
from .store import (
    ENCODING_AES,
    ENCODING_BASE64,
    ENCODING_PLAIN,
    SETTING_ENCODING,
    SETTING_START_RUN,
    Store,
    encode_base64_text,
    is_copy_name,
)


FORM_CONTENT_TYPE = "application/x-www-form-urlencoded"
HTML_CONTENT_TYPE = "text/html; charset=utf-8"
TEXT_CONTENT_TYPE = "text/plain; charset=utf-8"

COMPILE_PREAMBLE = ("Optimizing ST file...", "Generating object files...")

STATUS_TEXT = {
    200: "OK",
    302: "Found",
    400: "Bad Request",
    401: "Unauthorized",
    403: "Forbidden",
    404: "Not Found",
    405: "Method Not Allowed",
    500: "Internal Server Error",
}


class Request(Prefab, kw_only=True):
    method: str
    path: str
    query: dict[str, str] = attribute(default_factory=dict)
    form: dict[str, str] = attribute(default_factory=dict)
    body: bytes = b""
    cookies: dict[str, str] = attribute(default_factory=dict)
    client_ip: str = "127.0.0.1"

    @classmethod
    def from_http(
        cls,
        method: str,
        target: str,
        headers: dict[str, str],
        body: bytes,
        client_ip: str,
    ) -> "Request":
        """
        Build a request from the raw HTTP request line, headers and body.

        Header names are matched case-insensitively.
        """
        lowered = {k.lower(): v for k, v in headers.items()}
        split = _laz.urlsplit(target)

        query = {
            k: v[0] for k, v in _laz.parse_qs(split.query, keep_blank_values=True).items()
        }

        form = {}
        if lowered.get("content-type", "").split(";")[0].strip() == FORM_CONTENT_TYPE:
            form = {
                k: v[0]
                for k, v in _laz.parse_qs(
                    body.decode("utf-8", errors="replace"), keep_blank_values=True
                ).items()
            }

        cookies = {}
        if cookie_header := lowered.get("cookie"):
            jar = _laz.SimpleCookie()
            try:
                jar.load(cookie_header)
            except _laz.CookieError:
                pass
            cookies = {k: morsel.value for k, morsel in jar.items()}

        return cls(
            method=method.upper(),
            path=split.path or "/",
            query=query,
            form=form,
            body=body,
            cookies=cookies,
            client_ip=client_ip,
        )


class Response(Prefab, kw_only=True):
    status: int = 200
    body: bytes = b""
    headers: dict[str, str] = attribute(default_factory=dict)

    @property
    def reason(self) -> str:
        return STATUS_TEXT.get(self.status, "Unknown")

    @property
    def text(self) -> str:
        return self.body.decode("utf-8")


class Markup(str):
    """
    Page text that is already HTML and must not be escaped
    """


def render_page(heading: str, running_title: str, lines: list[str]) -> bytes:
    escape = _laz.html.escape
    body = "\n".join(
        f"<p>{line if isinstance(line, Markup) else escape(line)}</p>" for line in lines
    )
    return (
        "<html>\n"
        f"<head><title>OpenPLC - {escape(heading)}</title></head>\n"
        "<body>\n"
        f"<h2>{escape(heading)}</h2>\n"
        f"<p>Running: {escape(running_title)}</p>\n"
        f"{body}\n"
        "</body>\n"
        "</html>\n"
    ).encode("utf-8")


def page_response(heading: str, running_title: str, lines: list[str], status: int = 200) -> Response:
    return Response(
        status=status,
        body=render_page(heading, running_title, lines),
        headers={"Content-Type": HTML_CONTENT_TYPE},
    )


def text_response(text: str, status: int = 200) -> Response:
    return Response(
        status=status,
        body=text.encode("utf-8"),
        headers={"Content-Type": TEXT_CONTENT_TYPE},
    )


def error_response(status: int, message: str = "") -> Response:
    reason = STATUS_TEXT.get(status, "Error")
    return text_response(f"{status} {reason}" + (f": {message}" if message else ""), status)


def redirect(location: str, cookie: str | None = None) -> Response:
    headers = {"Location": location}
    if cookie is not None:
        headers["Set-Cookie"] = cookie
    return Response(status=302, body=b"", headers=headers)


def _int_param(params: dict[str, str], name: str) -> int | None:
    try:
        return int(params.get(name, ""))
    except ValueError:
        return None


class DashboardState(Prefab, kw_only=True):
    running_title: str = ""
    plc_running: bool = False
    runtime_log: list[str] = attribute(default_factory=list)
    alert: str | None = None

    def append_log(self, text: str) -> None:
        self.runtime_log.append(text)

    @property
    def log_text(self) -> str:
        return "\n".join(self.runtime_log)


class CompileJob(Prefab, kw_only=True):
    copy_name: str
    status: str = "running"
    lines: list[str] = attribute(default_factory=list)
    succeeded: bool | None = None
    program: CompiledProgram | None = attribute(default=None, repr=False)

    lock: threading.Lock = attribute(init=False, repr=False, compare=False)
    finished: threading.Event = attribute(init=False, repr=False, compare=False)

    def __prefab_post_init__(self):
        self.lock = threading.Lock()
        self.finished = threading.Event()

    def add_line(self, line: str) -> None:
        with self.lock:
            self.lines.append(line)

    @property
    def text(self) -> str:
        with self.lock:
            return "\n".join(self.lines)

    @property
    def done(self) -> bool:
        return self.status == "done"

    def finish(self, succeeded: bool) -> None:
        self.succeeded = succeeded
        self.status = "done"
        self.finished.set()

    def wait(self, timeout: float | None = None) -> bool:
        return self.finished.wait(timeout)


class Runtime(Prefab, kw_only=True):
    store: Store
    config: ForgeConfig = attribute(default_factory=ForgeConfig)
    clock: Callable[[], float] = time.time
    token_factory: Callable[[], str] = new_token
    plant: PlantImage = attribute(default_factory=PlantImage)

    profile: str = attribute(init=False)
    sessions: SessionTable = attribute(init=False, repr=False)
    dashboard: DashboardState = attribute(init=False)
    job: CompileJob | None = attribute(default=None, init=False, repr=False)

    vault: CredentialVault | None = attribute(default=None, init=False, repr=False)
    whitelist: Whitelist | None = attribute(default=None, init=False, repr=False)
    activity: ActivityLog | None = attribute(default=None, init=False, repr=False)

    compiled: tuple[str, CompiledProgram] | None = attribute(default=None, init=False, repr=False)
    running_program: CompiledProgram | None = attribute(default=None, init=False, repr=False)
    scan_count: int = attribute(default=0, init=False, repr=False)

    lock: threading.RLock = attribute(init=False, repr=False, compare=False)
    scan_condition: threading.Condition = attribute(init=False, repr=False, compare=False)
    _scan_stop: threading.Event | None = attribute(default=None, init=False, repr=False, compare=False)
    _scan_thread: threading.Thread | None = attribute(default=None, init=False, repr=False, compare=False)

    def __prefab_post_init__(self):
        self.profile = self.store.profile
        self.sessions = SessionTable(
            lifetime=self.config.session_lifetime,
            clock=self.clock,
            token_factory=self.token_factory,
        )
        self.dashboard = DashboardState()
        self.lock = threading.RLock()
        self.scan_condition = threading.Condition()

        if self.profile == AQUA:
            paths = self.store.paths
            self.whitelist = Whitelist.load(paths.whitelist_path)
            self.activity = ActivityLog(path=paths.activity_log, clock=self.clock)
            if self.store.setting(SETTING_ENCODING) == ENCODING_AES:
                self.vault = CredentialVault.load(paths.vault_path)

    # Helpers
    def _record_activity(self, actor: str, action: str, obj: str = "", detail: str = "") -> None:
        if self.activity is None:
            return
        log_activity(
            ActivityEntry(actor=actor, action=action, object=obj, detail=detail),
            self.activity,
        )

    def refresh_title(self) -> str:
        active = self.store.read_active_program()
        if active == TEMPORAL_PROGRAM:
            title = TEMPORAL_PROGRAM
        elif active and (record := self.store.program_by_copy(active)) is not None:
            title = record.title
        else:
            title = ""
        self.dashboard.running_title = title
        return title

    def _page(self, heading: str, lines: list[str], status: int = 200) -> Response:
        return page_response(heading, self.refresh_title(), lines, status)

    def _stored_credential(self, kind: str, text: str) -> str | None:
        encoding = self.store.setting(SETTING_ENCODING, ENCODING_PLAIN)
        if encoding == ENCODING_AES:
            if self.vault is None:
                return None
            try:
                return encrypt_field(kind, text, self.vault)
            except ValueError:
                return None
        if encoding == ENCODING_BASE64:
            return encode_base64_text(text)
        return text

    def _active_copy_bytes(self) -> bytes:
        active = self.store.read_active_program()
        paths = self.store.paths
        if active == TEMPORAL_PROGRAM:
            path = paths.temporal_program
        elif active and is_copy_name(active):
            path = paths.copy_path(active)
        else:
            return b""
        try:
            with open(path, "rb") as f:
                return f.read()
        except FileNotFoundError:
            return b""

    def _compile_copy(self, copy_name: str) -> tuple[CompiledProgram, list[str]]:
        source = self.store.read_copy(copy_name).decode("utf-8")
        return compile_program(parse(source))

    def require_session(self, request: Request) -> Session | None:
        return self.sessions.resolve(request.cookies.get(COOKIE_NAME))

    def _kill_session(self, session: Session) -> None:
        self.sessions.invalidate(session.token)

    def _session_cookie(self, session: Session) -> str:
        cookie = f"{COOKIE_NAME}={session.token}; Path=/; HttpOnly"
        if self.profile == AQUA:
            cookie += "; Secure"
        return cookie

    # Scan loop
    def _scan_loop(self, stop: threading.Event) -> None:
        while not stop.wait(self.config.scan_interval):
            program = self.running_program
            if program is None:
                continue
            try:
                self.plant.update(lambda regs: scan_cycle(program, regs))
            except (KeyError, TypeError, ValueError) as e:
                log(f"Scan cycle failed: {e}")
                self.dashboard.append_log(f"Scan error: {e}")
                stop.set()
                self.dashboard.plc_running = False
                return
            with self.scan_condition:
                self.scan_count += 1
                self.scan_condition.notify_all()

    def wait_for_scans(self, count: int = 2, timeout: float = 5.0) -> bool:
        """
        Block until at least count more scan cycles have completed
        """
        with self.scan_condition:
            target = self.scan_count + count
            return self.scan_condition.wait_for(
                lambda: self.scan_count >= target, timeout=timeout
            )

    def _run_program(self, program: CompiledProgram) -> None:
        self.running_program = program
        self.dashboard.plc_running = True
        if self._scan_thread is None:
            self._scan_stop = threading.Event()
            self._scan_thread = threading.Thread(
                target=self._scan_loop, args=(self._scan_stop,), daemon=True
            )
            self._scan_thread.start()

    def halt(self) -> None:
        if self._scan_thread is not None:
            self._scan_stop.set()
            self._scan_thread.join()
            self._scan_thread = None
            self._scan_stop = None
        self.dashboard.plc_running = False

    def start_plc(self) -> int:
        """
        Start the program named by the active program index.

        :return: 302 on success, 500 for an empty or dangling index, 403 for
                 the aqua temporal placeholder
        """
        with self.lock:
            active = self.store.read_active_program()
            if active == TEMPORAL_PROGRAM:
                return 403
            if not active or not self.store.copy_exists(active):
                return 500

            if self.compiled is not None and self.compiled[0] == active:
                program = self.compiled[1]
            else:
                try:
                    program, _ = self._compile_copy(active)
                except (StError, MissingCopy, UnicodeDecodeError) as e:
                    log(f"Could not load {active!r}: {e}")
                    return 500
                self.compiled = (active, program)

            self._run_program(program)
            self.store.set_setting(SETTING_START_RUN, "true")
            return 302

    def boot(self) -> None:
        """
        Refresh dashboard state and auto-start when the run mode was left on
        """
        with self.lock:
            self.refresh_title()
            if self.store.setting(SETTING_START_RUN) == "true":
                status = self.start_plc()
                if status != 302:
                    log(f"Start at boot refused with status {status}")

    def shutdown(self) -> None:
        with self.lock:
            self.halt()

    # Compile jobs
    def _run_job(self, job: CompileJob, start_after: bool, actor: str, client_ip: str) -> None:
        delay = self.config.compile_step_delay
        for line in COMPILE_PREAMBLE:
            job.add_line(line)
            time.sleep(delay)

        try:
            program, log_lines = self._compile_copy(job.copy_name)
        except (StError, MissingCopy, UnicodeDecodeError) as e:
            job.add_line(f"Error: {e}")
            job.finish(False)
            log(f"Compilation of {job.copy_name!r} failed: {e}")
            return

        for line in log_lines[:-1]:
            job.add_line(line)
            time.sleep(delay)

        with self.lock:
            # The index is in place before the sentinel becomes visible to pollers
            job.program = program
            self.store.write_active_program(job.copy_name)
            self.compiled = (job.copy_name, program)
            job.add_line(log_lines[-1])
            job.finish(True)

            if start_after:
                status = self.start_plc()
                if status == 302:
                    self._record_activity(actor, "start", job.copy_name, client_ip)
                else:
                    self._record_activity(actor, "start_refused", job.copy_name, client_ip)

    def start_compile(
        self,
        copy_name: str,
        *,
        start_after: bool = False,
        actor: str = "-",
        client_ip: str = "",
    ) -> CompileJob:
        """
        Compile a stored copy on a worker thread, optionally starting it once done.

        The compile, and any start that follows, is logged against the actor.
        """
        job = CompileJob(copy_name=copy_name)
        self.job = job
        self._record_activity(actor, "compile", copy_name, client_ip)
        threading.Thread(
            target=self._run_job,
            args=(job, start_after, actor, client_ip),
            daemon=True,
        ).start()
        return job

    # Dispatch
    def dispatch(self, request: Request) -> Response:
        with self.lock:
            try:
                return self._route(request)
            except PermissionDenied as e:
                return error_response(403, str(e))
            except ForgeError as e:
                log(f"{request.method} {request.path} failed: {e}")
                return error_response(500, str(e))

    def _route(self, request: Request) -> Response:
        match request.method, request.path:
            case "GET", "/":
                if self.require_session(request):
                    return redirect("/dashboard")
                return redirect("/login")
            case "GET", "/login":
                return self._page("Login", [
                    Markup('<form method="post" action="/login">'),
                    Markup('<input name="username"> <input name="password" type="password">'),
                    Markup("</form>"),
                ])
            case "POST", "/login":
                return self.handle_login(request)

        session = self.require_session(request)
        if session is None:
            return error_response(401)

        match request.method, request.path:
            case "GET", "/logout":
                self._kill_session(session)
                self._record_activity(session.username, "logout", detail=request.client_ip)
                return redirect("/login")
            case "GET", "/dashboard":
                return self.handle_dashboard(session, request)
            case "GET", "/programs":
                return self.handle_programs(session, request)
            case "POST", "/upload-program":
                return self.handle_upload_program(session, request)
            case "POST", "/upload-program-action":
                return self.handle_upload_program_action(session, request)
            case "GET", "/compile-program":
                return self.handle_compile_program(session, request)
            case "GET", "/compilation-logs":
                return self.handle_compilation_logs(session, request)
            case "GET", "/start-plc":
                return self.handle_start_plc(session, request)
            case "GET", "/stop-plc":
                return self.handle_stop_plc(session, request)
            case "GET", "/reload-program":
                return self.handle_reload_program(session, request)
            case "GET", "/update-program":
                return self.handle_update_program(session, request)
            case "POST", "/update-program-action":
                return self.handle_update_program_action(session, request)
            case "GET", "/remove-program":
                return self.handle_remove_program(session, request)
            case ("GET" | "POST"), "/hardware":
                return self.handle_hardware(session, request)
            case "GET", "/users":
                return self.handle_users(session, request)
            case "GET", "/modbus":
                return self.handle_modbus(session, request)
            case _:
                return error_response(404)

    # Handlers
    def handle_login(self, request: Request) -> Response:
        username = request.form.get("username", "")
        password = request.form.get("password", "")

        stored_username = self._stored_credential(USERNAME, username) if username else None
        stored_password = self._stored_credential(PASSWORD, password) if password else None

        user = None
        if stored_username is not None and stored_password is not None:
            user = self.store.user_by_username(stored_username)
            if user is not None and user.password != stored_password:
                user = None

        # A whitelist miss is answered exactly like bad credentials
        allowed = user is not None and (
            self.profile == LEGACY or self.whitelist.check(username, request.client_ip)
        )
        if not allowed:
            self._record_activity(username or "-", "login_failed", detail=request.client_ip)
            return error_response(401, "Bad credentials")

        session = self.sessions.create(username, request.client_ip)
        self._record_activity(username, "login", detail=request.client_ip)
        return redirect("/dashboard", cookie=self._session_cookie(session))

    def handle_dashboard(self, session: Session, request: Request) -> Response:
        title = self.refresh_title()
        record = None
        active = self.store.read_active_program()
        if active and active != TEMPORAL_PROGRAM:
            record = self.store.program_by_copy(active)

        lines = [
            f"Status: {'Running' if self.dashboard.plc_running else 'Stopped'}",
            f"Program: {title}",
            f"Description: {record.description if record else ''}",
            f"File: {active}",
            f"Date uploaded: {record.upload_date if record else ''}",
        ]
        if self.dashboard.alert:
            lines.append(f"Alert: {self.dashboard.alert}")
        lines.append("Runtime logs:")
        lines.extend(self.dashboard.runtime_log)
        return self._page("Dashboard", lines)

    def handle_programs(self, session: Session, request: Request) -> Response:
        lines = ["Program Name | Description | File | Date Uploaded"]
        for record in self.store.programs():
            lines.append(
                f"{record.prog_id}: {record.title} | {record.description} | "
                f"{record.copy_name} | {record.upload_date} | "
                f"reload-program?table_id={record.prog_id}"
            )
        return self._page("Programs", lines)

    def handle_upload_program(self, session: Session, request: Request) -> Response:
        if not request.body:
            return error_response(400, "Empty program file")

        if self.profile == AQUA:
            verdict = verify_upload(
                self._active_copy_bytes(),
                request.body,
                session.username,
                request.client_ip,
                self.whitelist,
            )
            if not verdict.allowed:
                if verdict.terminate_session:
                    self._kill_session(session)
                self._record_activity(
                    session.username, "upload_rejected", detail=request.client_ip
                )
                return error_response(403, verdict.reason)

        copy_name = self.store.save_copy(request.body)
        self._record_activity(session.username, "upload", copy_name, request.client_ip)
        return self._page("Program Info", [
            Markup('<form method="post" action="/upload-program-action">'),
            Markup('<input name="prog_name"> <input name="prog_descr">'),
            Markup(f'<input type="hidden" name="copy_name" value="{copy_name}">'),
            Markup("</form>"),
        ])

    def handle_upload_program_action(self, session: Session, request: Request) -> Response:
        title = request.form.get("prog_name", "").strip()
        copy_name = request.form.get("copy_name", "")
        description = request.form.get("prog_descr", "")
        if not title:
            return error_response(400, "Program name is required")

        try:
            prog_id = self.store.insert_program(title, copy_name, self.clock(), description)
        except (MissingCopy, InvalidRecord) as e:
            return error_response(400, str(e))

        self._record_activity(session.username, "register_program", copy_name, f"prog_id={prog_id}")
        return self._page("Program Registered", [
            f"Program: {title}",
            f"File: {copy_name}",
            f"compile-program?file={copy_name}",
        ])

    def handle_compile_program(self, session: Session, request: Request) -> Response:
        copy_name = request.query.get("file", "")
        if not self.store.copy_exists(copy_name):
            return error_response(404, f"No ST copy named {copy_name!r}")

        self.start_compile(copy_name, actor=session.username, client_ip=request.client_ip)
        return self._page("Compiling", [f"Compiling {copy_name}", "compilation-logs"])

    def handle_compilation_logs(self, session: Session, request: Request) -> Response:
        if self.job is None:
            return error_response(404, "No compilation has run")
        return text_response(self.job.text)

    def handle_start_plc(self, session: Session, request: Request) -> Response:
        status = self.start_plc()
        if status == 403:
            # Starting the placeholder means somebody is acting blind
            self._kill_session(session)
            self._record_activity(session.username, "start_refused", TEMPORAL_PROGRAM, request.client_ip)
            return error_response(403, "The running program was removed")
        if status == 500:
            self._record_activity(session.username, "start_refused", detail=request.client_ip)
            return error_response(500, "Operational error of the service")

        self._record_activity(session.username, "start", self.compiled[0], request.client_ip)
        return redirect("/dashboard")

    def handle_stop_plc(self, session: Session, request: Request) -> Response:
        was_running = self.dashboard.plc_running
        self.halt()
        if was_running:
            self.store.set_setting(SETTING_START_RUN, "false")
        self._record_activity(session.username, "stop", detail=request.client_ip)
        return redirect("/dashboard")

    def _program_from_query(self, request: Request, name: str):
        prog_id = _int_param(request.query, name)
        if prog_id is None:
            return None
        try:
            return self.store.program(prog_id)
        except UnknownProgram:
            return None

    def handle_reload_program(self, session: Session, request: Request) -> Response:
        record = self._program_from_query(request, "table_id")
        if record is None:
            return error_response(404, "Unknown program")
        return self._page("Program Info", [
            f"Program Name: {record.title}",
            f"Description: {record.description}",
            f"File: {record.copy_name}",
            f"Date Uploaded: {record.upload_date}",
            f"compile-program?file={record.copy_name}",
        ])

    def handle_update_program(self, session: Session, request: Request) -> Response:
        record = self._program_from_query(request, "id")
        if record is None:
            return error_response(404, "Unknown program")
        return self._page("Update Program", [
            f"Program Name: {record.title}",
            f"File: {record.copy_name}",
            Markup(f'<form method="post" action="/update-program-action?id={record.prog_id}">'),
            Markup("</form>"),
        ])

    def handle_update_program_action(self, session: Session, request: Request) -> Response:
        record = self._program_from_query(request, "id")
        if record is None:
            return error_response(404, "Unknown program")
        if not request.body:
            return error_response(400, "Empty program file")

        if self.profile == AQUA:
            verdict = verify_upload(
                self._active_copy_bytes(),
                request.body,
                session.username,
                request.client_ip,
                self.whitelist,
            )
            if not verdict.allowed:
                self._kill_session(session)
                self._record_activity(
                    session.username, "upload_rejected", record.copy_name, request.client_ip
                )
                return error_response(403, verdict.reason)

        self.store.overwrite_copy(record.prog_id, request.body)
        self._record_activity(session.username, "update", record.copy_name, request.client_ip)
        self.start_compile(
            record.copy_name,
            start_after=True,
            actor=session.username,
            client_ip=request.client_ip,
        )
        return self._page("Program Updated", [
            f"Program Name: {record.title}",
            f"File: {record.copy_name}",
        ])

    def handle_remove_program(self, session: Session, request: Request) -> Response:
        prog_id = _int_param(request.query, "id")
        if prog_id is None:
            return error_response(404, "Unknown program")
        try:
            if self.profile == AQUA:
                record = purge_program(prog_id, self.store, self.dashboard)
            else:
                record = self.store.delete_program(prog_id, LEGACY)
        except UnknownProgram:
            return error_response(404, "Unknown program")

        self._record_activity(session.username, "remove", record.copy_name, request.client_ip)
        return self._page("Program Removed", [f"Removed: {record.title}"])

    def handle_hardware(self, session: Session, request: Request) -> Response:
        paths = self.store.paths
        if request.method == "GET":
            try:
                with open(paths.hook_script, "r", encoding="utf-8") as f:
                    script = f.read()
            except FileNotFoundError:
                script = ""
            return self._page("Hardware", ["PSM hook:", *script.splitlines()])

        script = request.form.get("hook_script", "")
        try:
            commands = parse_hook_script(script)
        except HookScriptError as e:
            return error_response(400, str(e))

        for command in commands:
            if isinstance(command, WriteCommand):
                target = paths.resolve(command.path)
                if self.profile == AQUA and target != paths.hook_script:
                    self._record_activity(
                        session.username, "hook_refused", command.path, request.client_ip
                    )
                    return error_response(403, f"Hook may not write {command.path!r}")

        self.store.write_file(paths.hook_script, script.encode("utf-8"))
        self._record_activity(session.username, "hook_save", "hook.psm", request.client_ip)

        for command in commands:
            match command:
                case LogCommand(text=text):
                    self.dashboard.append_log(text)
                case WriteCommand(path=path, data=data):
                    self.store.write_file(path, data)

        self._silent_recompile()
        return self._page("Hardware", ["PSM hook saved"])

    def _silent_recompile(self) -> None:
        active = self.store.read_active_program()
        if not active or not self.store.copy_exists(active):
            return
        try:
            program, _ = self._compile_copy(active)
        except (StError, UnicodeDecodeError) as e:
            log(f"Recompile after hook save failed: {e}")
            return
        self.compiled = (active, program)
        if self.dashboard.plc_running:
            self.running_program = program

    def handle_users(self, session: Session, request: Request) -> Response:
        lines = ["Full Name | Email"]
        for user in self.store.users():
            lines.append(f"{user.user_id}: {user.name} | {user.email}")
        return self._page("Users", lines)

    def handle_modbus(self, session: Session, request: Request) -> Response:
        return self._page("Slave Devices", [
            f"Modbus server port: {self.config.modbus_port}",
            "Slave devices: none",
        ])


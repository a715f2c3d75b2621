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
The aqua countermeasures: credential cipher, whitelist, upload verifier,
hardening installer, program purge and the activity log.
"""
import os
import os.path
import threading
import time

from collections.abc import Callable

from ducktools.classbuilder.prefab import Prefab, prefab, attribute

from . import AQUA, TEMPORAL_PROGRAM, DEFAULT_USERNAME
from . import _lazy_imports as _laz
from ._logger import log
from .exceptions import AlreadyInitialized, BadEncoding, BadPadding, IoFailure
from .store import (
    ENCODING_AES,
    ENCODING_BASE64,
    OPEN,
    OWNER_ONLY,
    ROOT,
    SETTING_ENCODING,
    Store,
)

TYPE_CHECKING = False
if TYPE_CHECKING:
    from .runtime import DashboardState


USERNAME = "username"
PASSWORD = "password"
FIELD_KINDS = (USERNAME, PASSWORD)

BLOCK_BYTES = 16
MAX_PLAINTEXT_BYTES = 256

SEED_IP = "127.0.0.1"

TLS_COMMON_NAME = "localhost"
TLS_VALID_DAYS = 366

PURGE_ALERT = (
    "The running program was removed from the webserver. "
    "Please compile the other programs."
)

BASE64_PATTERN = r"[A-Za-z0-9+/]*={0,2}"


# Credential cipher
@prefab(frozen=True)
class CredentialVault:
    key: bytes
    iv: bytes

    def __prefab_post_init__(self, key, iv):
        if len(key) != BLOCK_BYTES or len(iv) != BLOCK_BYTES:
            raise ValueError("Vault key and iv must both be 16 bytes")

    @classmethod
    def generate(cls, random_bytes: Callable[[int], bytes] = os.urandom) -> "CredentialVault":
        while True:
            key, iv = random_bytes(BLOCK_BYTES), random_bytes(BLOCK_BYTES)
            # With key == iv swapping them would give identical ciphers
            if key != iv:
                return cls(key=key, iv=iv)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CredentialVault":
        if len(data) != 2 * BLOCK_BYTES:
            raise ValueError(f"Vault material must be {2 * BLOCK_BYTES} bytes, got {len(data)}")
        return cls(key=data[:BLOCK_BYTES], iv=data[BLOCK_BYTES:])

    @classmethod
    def load(cls, path: str) -> "CredentialVault":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())

    def to_bytes(self) -> bytes:
        return self.key + self.iv


def _cipher(kind: str, vault: CredentialVault):
    match kind:
        case "password":
            key, iv = vault.key, vault.iv
        case "username":
            # Usernames swap the roles of key and iv
            key, iv = vault.iv, vault.key
        case _:
            raise ValueError(f"Unknown credential kind {kind!r}, expected one of {FIELD_KINDS}")
    return _laz.Cipher(_laz.algorithms.AES(key), _laz.modes.CBC(iv))


def encrypt_bytes(kind: str, data: bytes, vault: CredentialVault) -> str:
    padder = _laz.padding.PKCS7(BLOCK_BYTES * 8).padder()
    padded = padder.update(data) + padder.finalize()
    encryptor = _cipher(kind, vault).encryptor()
    ciphertext = encryptor.update(padded) + encryptor.finalize()
    return _laz.base64.b64encode(ciphertext).decode("ascii")


def encrypt_field(kind: str, plaintext: str, vault: CredentialVault) -> str:
    """
    AES-128-CBC encrypt a credential and Base64 encode the result.

    Passwords use the vault key and iv as they are, usernames use them swapped.
    """
    data = plaintext.encode("utf-8")
    if not data:
        raise ValueError("Credentials can not be empty")
    if len(data) > MAX_PLAINTEXT_BYTES:
        raise ValueError(f"Credentials are limited to {MAX_PLAINTEXT_BYTES} bytes")
    return encrypt_bytes(kind, data, vault)


def decrypt_bytes(kind: str, base64_text: str, vault: CredentialVault) -> bytes:
    try:
        ciphertext = _laz.base64.b64decode(base64_text, validate=True)
    except (_laz.binascii.Error, ValueError):
        raise BadEncoding("Credential field is not valid Base64")

    if not ciphertext or len(ciphertext) % BLOCK_BYTES:
        raise BadEncoding("Credential ciphertext is not a whole number of AES blocks")

    decryptor = _cipher(kind, vault).decryptor()
    padded = decryptor.update(ciphertext) + decryptor.finalize()

    unpadder = _laz.padding.PKCS7(BLOCK_BYTES * 8).unpadder()
    try:
        return unpadder.update(padded) + unpadder.finalize()
    except ValueError:
        raise BadPadding("Credential field has invalid padding")


def decrypt_field(kind: str, base64_text: str, vault: CredentialVault) -> str:
    data = decrypt_bytes(kind, base64_text, vault)
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        raise BadEncoding("Decrypted credential is not UTF-8 text")


def is_base64_text(text: str) -> bool:
    return bool(text) and _laz.re.fullmatch(BASE64_PATTERN, text) is not None


# Whitelist
@prefab(frozen=True)
class WhitelistEntry:
    username: str
    ip: str

    def __prefab_post_init__(self, username, ip):
        if not username or any(c.isspace() for c in username):
            raise ValueError(f"Invalid whitelist username {username!r}")
        _laz.ipaddress.IPv4Address(ip)

    def to_line(self) -> str:
        return f"{self.username} {self.ip}"


SEED_ENTRY = WhitelistEntry(username=DEFAULT_USERNAME, ip=SEED_IP)


class Whitelist(Prefab, kw_only=True):
    entries: list[WhitelistEntry] = attribute(default_factory=list)
    lookups: int = attribute(default=0, compare=False)

    def __prefab_post_init__(self, entries):
        unique = []
        for entry in [SEED_ENTRY, *entries]:
            if entry not in unique:
                unique.append(entry)
        self.entries = unique

    def add(self, username: str, ip: str) -> None:
        entry = WhitelistEntry(username=username, ip=ip)
        if entry not in self.entries:
            self.entries.append(entry)

    def check(self, username: str, ip: str) -> bool:
        self.lookups += 1
        return whitelist_check(username, ip, self.entries)

    @classmethod
    def loads(cls, text: str) -> "Whitelist":
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            username, _, ip = line.partition(" ")
            entries.append(WhitelistEntry(username=username, ip=ip.strip()))
        return cls(entries=entries)

    def dumps(self) -> str:
        return "".join(f"{entry.to_line()}\n" for entry in self.entries)

    @classmethod
    def load(cls, path: str) -> "Whitelist":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.loads(f.read())
        except FileNotFoundError:
            return cls()


def whitelist_check(username: str, ip: str, entries: list[WhitelistEntry]) -> bool:
    return any(e.username == username and e.ip == ip for e in entries)


# Upload verification
@prefab(frozen=True)
class UploadVerdict:
    allowed: bool
    terminate_session: bool
    reason: str
    digests_match: bool
    identical: bool


def _compare_bytes(left: bytes, right: bytes) -> bool:
    if len(left) != len(right):
        return False
    return all(a == b for a, b in zip(left, right))


def verify_upload(
    active_copy: bytes,
    uploaded: bytes,
    username: str,
    ip: str,
    whitelist: Whitelist,
) -> UploadVerdict:
    """
    Decide whether an upload may replace or join the running program.

    Content identical to the active copy is always allowed without consulting
    the whitelist; anything else needs a whitelisted (username, ip) pair and a
    rejection terminates the uploader's session.
    """
    digests_match = (
        _laz.hashlib.md5(active_copy).hexdigest()
        == _laz.hashlib.md5(uploaded).hexdigest()
    )
    identical = _compare_bytes(active_copy, uploaded)

    if identical:
        return UploadVerdict(
            allowed=True,
            terminate_session=False,
            reason="content identical to the active program",
            digests_match=digests_match,
            identical=True,
        )
    if whitelist.check(username, ip):
        return UploadVerdict(
            allowed=True,
            terminate_session=False,
            reason=f"{username} is whitelisted for {ip}",
            digests_match=digests_match,
            identical=False,
        )
    return UploadVerdict(
        allowed=False,
        terminate_session=True,
        reason=f"{username} is not whitelisted for {ip}",
        digests_match=digests_match,
        identical=False,
    )


# TLS material
@prefab(frozen=True)
class TlsMaterial:
    cert_path: str
    key_path: str
    fingerprint: str


def certificate_fingerprint(cert_pem: bytes) -> str:
    cert = _laz.x509.load_pem_x509_certificate(cert_pem)
    return cert.fingerprint(_laz.hashes.SHA256()).hex()


def generate_tls_material(
    common_name: str = TLS_COMMON_NAME,
    days: int = TLS_VALID_DAYS,
) -> tuple[bytes, bytes]:
    """
    Create a self-signed RSA certificate for the local web server

    :return: (certificate PEM, private key PEM)
    """
    key = _laz.rsa.generate_private_key(public_exponent=65537, key_size=2048)
    name = _laz.x509.Name([_laz.x509.NameAttribute(_laz.NameOID.COMMON_NAME, common_name)])
    now = _laz.datetime.datetime.now(_laz.datetime.timezone.utc)

    cert = (
        _laz.x509.CertificateBuilder()
        .subject_name(name)
        .issuer_name(name)
        .public_key(key.public_key())
        .serial_number(_laz.x509.random_serial_number())
        .not_valid_before(now - _laz.datetime.timedelta(minutes=5))
        .not_valid_after(now + _laz.datetime.timedelta(days=days))
        .add_extension(
            _laz.x509.SubjectAlternativeName([
                _laz.x509.DNSName(common_name),
                _laz.x509.IPAddress(_laz.ipaddress.IPv4Address(SEED_IP)),
            ]),
            critical=False,
        )
        .add_extension(_laz.x509.BasicConstraints(ca=True, path_length=None), critical=True)
        .add_extension(
            _laz.x509.KeyUsage(
                digital_signature=True,
                content_commitment=False,
                key_encipherment=True,
                data_encipherment=False,
                key_agreement=False,
                key_cert_sign=True,
                crl_sign=False,
                encipher_only=False,
                decipher_only=False,
            ),
            critical=True,
        )
        .add_extension(
            _laz.x509.SubjectKeyIdentifier.from_public_key(key.public_key()),
            critical=False,
        )
        .add_extension(
            _laz.x509.AuthorityKeyIdentifier.from_issuer_public_key(key.public_key()),
            critical=False,
        )
        .sign(key, _laz.hashes.SHA256())
    )

    cert_pem = cert.public_bytes(_laz.serialization.Encoding.PEM)
    key_pem = key.private_bytes(
        encoding=_laz.serialization.Encoding.PEM,
        format=_laz.serialization.PrivateFormat.TraditionalOpenSSL,
        encryption_algorithm=_laz.serialization.NoEncryption(),
    )
    return cert_pem, key_pem


def load_tls_material(store: Store) -> TlsMaterial:
    with open(store.paths.cert_path, "rb") as f:
        fingerprint = certificate_fingerprint(f.read())
    return TlsMaterial(
        cert_path=store.paths.cert_path,
        key_path=store.paths.key_path,
        fingerprint=fingerprint,
    )


def server_ssl_context(tls: TlsMaterial):
    """
    TLS 1.2 only, so every handshake runs a fresh key exchange
    """
    ssl = _laz.ssl
    context = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
    context.minimum_version = ssl.TLSVersion.TLSv1_2
    context.maximum_version = ssl.TLSVersion.TLSv1_2
    context.options |= ssl.OP_NO_TICKET
    context.load_cert_chain(tls.cert_path, tls.key_path)
    return context


def client_ssl_context(cert_path: str):
    """
    A client context that trusts exactly the installed self-signed certificate
    """
    ssl = _laz.ssl
    context = ssl.create_default_context(cafile=cert_path)
    context.verify_flags &= ~getattr(ssl, "VERIFY_X509_STRICT", 0)
    return context


# Installation
@prefab(frozen=True)
class HardeningResult:
    vault: CredentialVault
    tls: TlsMaterial
    whitelist_path: str


def harden_install(store: Store) -> HardeningResult:
    """
    Generate keys and certificate, encrypt the stored credentials and
    restrict every sensitive project file to its owner.

    :raises AlreadyInitialized: if the store was already hardened
    :raises IoFailure: if any file could not be written
    """
    if store.profile != AQUA:
        raise ValueError("Only aqua stores can be hardened")

    encoding = store.setting(SETTING_ENCODING)
    if encoding == ENCODING_AES:
        raise AlreadyInitialized(f"Store at {store.root!r} is already hardened")

    paths = store.paths
    vault = CredentialVault.generate()
    store.write_file(paths.vault_path, vault.to_bytes(), mode=OWNER_ONLY)

    cert_pem, key_pem = generate_tls_material()
    store.write_file(paths.key_path, key_pem, mode=OWNER_ONLY)
    store.write_file(paths.cert_path, cert_pem, mode=OPEN)
    tls = TlsMaterial(
        cert_path=paths.cert_path,
        key_path=paths.key_path,
        fingerprint=certificate_fingerprint(cert_pem),
    )

    whitelist = Whitelist()
    store.write_file(paths.whitelist_path, whitelist.dumps().encode("utf-8"), mode=OWNER_ONLY)

    users = store.users()
    for user in users:
        username, password = user.username, user.password
        if encoding == ENCODING_BASE64:
            username = _laz.base64.b64decode(username).decode("utf-8")
            password = _laz.base64.b64decode(password).decode("utf-8")
        user.username = encrypt_field(USERNAME, username, vault)
        user.password = encrypt_field(PASSWORD, password, vault)
    store.replace_users(users)
    store.set_setting(SETTING_ENCODING, ENCODING_AES)

    if not os.path.exists(paths.hook_script):
        store.write_file(paths.hook_script, b"", mode=OWNER_ONLY)
    if not os.path.exists(paths.activity_log):
        store.write_file(paths.activity_log, b"", mode=OWNER_ONLY)

    with open(paths.blank_program, "rb") as f:
        store.write_file(paths.temporal_program, f.read(), mode=OWNER_ONLY)

    restricted = [paths.db_path, paths.vault_path, paths.whitelist_path, paths.key_path]
    restricted.extend(
        os.path.join(paths.webserver, name) for name in os.listdir(paths.webserver)
    )
    for path in restricted:
        if os.path.isfile(path):
            store.set_mode(path, OWNER_ONLY, owner=ROOT)

    log(f"Hardened project at {store.root!r}, certificate fingerprint {tls.fingerprint}")
    return HardeningResult(vault=vault, tls=tls, whitelist_path=paths.whitelist_path)


def purge_program(prog_id: int, store: Store, dashboard: "DashboardState"):
    """
    Delete a program record and its ST copy. If it was the active program,
    point the index at the temporal placeholder and raise the dashboard alert.

    :raises UnknownProgram: if no such record exists
    """
    active = store.read_active_program()
    record = store.delete_program(prog_id, AQUA)
    if record.copy_name == active:
        store.write_active_program(TEMPORAL_PROGRAM)
        dashboard.running_title = TEMPORAL_PROGRAM
        dashboard.alert = PURGE_ALERT
    return record


# Activity log
class ActivityEntry(Prefab, kw_only=True):
    actor: str
    action: str
    object: str = ""
    detail: str = ""
    timestamp: str = ""

    @staticmethod
    def _clean(text: str) -> str:
        return " ".join(str(text).split())

    def to_line(self) -> str:
        fields = [self.timestamp, self.actor, self.action, self.object, self.detail]
        return "\t".join(self._clean(f) for f in fields)

    @classmethod
    def from_line(cls, line: str) -> "ActivityEntry":
        timestamp, actor, action, obj, detail = line.rstrip("\n").split("\t")
        return cls(timestamp=timestamp, actor=actor, action=action, object=obj, detail=detail)


class ActivityLog(Prefab, kw_only=True):
    path: str
    clock: Callable[[], float] = time.time

    last_time: float = attribute(default=0.0, init=False, repr=False)
    lock: threading.Lock = attribute(init=False, repr=False, compare=False)

    def __prefab_post_init__(self):
        self.lock = threading.Lock()

    def append(self, entry: ActivityEntry) -> ActivityEntry:
        with self.lock:
            # Timestamps never go backwards, even if the wall clock does
            now = max(self.clock(), self.last_time)
            self.last_time = now
            stamp = _laz.datetime.datetime.fromtimestamp(now).isoformat(timespec="microseconds")
            stored = ActivityEntry(
                timestamp=stamp,
                actor=entry.actor,
                action=entry.action,
                object=entry.object,
                detail=entry.detail,
            )
            try:
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(stored.to_line() + "\n")
            except OSError as e:
                raise IoFailure(f"Could not write activity log {self.path!r}: {e}")
        return stored

    def entries(self) -> list[ActivityEntry]:
        try:
            with open(self.path, "r", encoding="utf-8") as f:
                return [ActivityEntry.from_line(line) for line in f if line.strip()]
        except FileNotFoundError:
            return []


def log_activity(entry: ActivityEntry, activity_log: ActivityLog) -> ActivityEntry:
    return activity_log.append(entry)

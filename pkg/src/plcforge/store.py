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
The project store: record file, ST copies, the active program index
and the simulated file permission model.
"""
import os
import os.path
import sys
import threading
import time

from ducktools.classbuilder.prefab import Prefab, attribute

from . import (
    AQUA,
    LEGACY,
    PROFILES,
    TEMPORAL_PROGRAM,
    DEFAULT_USER_ID,
    DEFAULT_NAME,
    DEFAULT_USERNAME,
    DEFAULT_PASSWORD,
    DEFAULT_EMAIL,
)
from . import _lazy_imports as _laz
from ._records import RecordAttribute, RecordBook, RecordClass, RecordContext
from .bundled import bundled_program, BLANK_PROGRAM
from .exceptions import (
    AlreadyInitialized,
    IoFailure,
    MissingCopy,
    PermissionDenied,
    UnknownProgram,
)
from .paths import ProjectPaths, MODES_FILENAME


ROOT = "root"
SERVICE = "service"
OTHER = "other"
IDENTITIES = (ROOT, SERVICE, OTHER)

OPEN = "open"
OWNER_ONLY = "owner_only"

NATIVE_BITS = {OPEN: 0o644, OWNER_ONLY: 0o600}

# Setting keys
SETTING_PROFILE = "Profile"
SETTING_ENCODING = "Credential_encoding"
SETTING_SEQUENCE = "Prog_ID_Sequence"
SETTING_MODBUS_PORT = "Modbus_port"
SETTING_START_RUN = "Start_run_mode"

ENCODING_PLAIN = "plain"
ENCODING_BASE64 = "base64"
ENCODING_AES = "aes-cbc"

COPY_NAME_PATTERN = r"[0-9]{6}\.st"


class UserRecord(RecordClass, section="users"):
    user_id: int = RecordAttribute(primary_key=True)
    name: str
    username: str = RecordAttribute(unique=True)
    email: str
    password: str
    picture_path: str | None = None


class ProgramRecord(RecordClass, section="programs"):
    prog_id: int = RecordAttribute(primary_key=True)
    title: str
    description: str = ""
    copy_name: str = RecordAttribute(unique=True)
    upload_date: str


class Setting(RecordClass, section="settings"):
    key: str = RecordAttribute(primary_key=True)
    value: str = ""


class FileMode(RecordClass, section="modes"):
    path: str = RecordAttribute(primary_key=True)
    owner: str
    mode: str


def is_copy_name(name: str) -> bool:
    return _laz.re.fullmatch(COPY_NAME_PATTERN, name) is not None


def format_upload_date(now: float) -> str:
    """
    asctime form in the host timezone, ex: 'Wed Feb 15 11:35:57 2023'
    """
    return time.asctime(time.localtime(now))


def encode_base64_text(text: str) -> str:
    return _laz.base64.b64encode(text.encode("utf-8")).decode("ascii")


def _set_native_bits(path: str, mode: str):
    if sys.platform == "win32":  # pragma: skip-if-os-other
        return
    try:  # pragma: skip-if-os-win32
        os.chmod(path, NATIVE_BITS[mode])
    except OSError:  # pragma: nocover
        pass


class Store(Prefab, kw_only=True):
    root: str
    rng: object = None

    paths: ProjectPaths = attribute(init=False, repr=False)
    profile: str = attribute(init=False)
    lock: threading.RLock = attribute(init=False, repr=False, compare=False)

    def __prefab_post_init__(self, rng):
        self.paths = ProjectPaths(self.root)
        self.root = self.paths.root
        self.rng = rng if rng is not None else _laz.random.SystemRandom()
        self.lock = threading.RLock()

        if not os.path.exists(self.paths.db_path):
            raise FileNotFoundError(f"No plcforge store found at {self.root!r}")

        with RecordContext(self.paths.db_path) as book:
            row = Setting.row_from_pk(book, SETTING_PROFILE)
        self.profile = LEGACY if row is None else row.value

    @classmethod
    def init(cls, root: str, profile: str, *, rng=None) -> "Store":
        """
        Create a fresh project store in root_dir.

        :param root: project root folder
        :param profile: 'legacy' or 'aqua'
        :param rng: random.Random compatible source for copy names
        :raises AlreadyInitialized: if the root already holds a store
        """
        if profile not in PROFILES:
            raise ValueError(f"Unknown profile {profile!r}")

        paths = ProjectPaths(root)
        if os.path.exists(paths.db_path):
            raise AlreadyInitialized(f"A store already exists at {paths.root!r}")

        if profile == AQUA:
            username = encode_base64_text(DEFAULT_USERNAME)
            password = encode_base64_text(DEFAULT_PASSWORD)
            encoding = ENCODING_BASE64
        else:
            username, password = DEFAULT_USERNAME, DEFAULT_PASSWORD
            encoding = ENCODING_PLAIN

        book = RecordBook()
        UserRecord(
            user_id=DEFAULT_USER_ID,
            name=DEFAULT_NAME,
            username=username,
            email=DEFAULT_EMAIL,
            password=password,
            picture_path=None,
        ).insert_row(book)
        book.set_lines(ProgramRecord.SECTION, [])
        for key, value in [
            (SETTING_PROFILE, profile),
            (SETTING_ENCODING, encoding),
            (SETTING_SEQUENCE, "0"),
            (SETTING_MODBUS_PORT, "disabled"),
            (SETTING_START_RUN, "false"),
        ]:
            Setting(key=key, value=value).insert_row(book)

        try:
            os.makedirs(paths.webserver, exist_ok=True)
            RecordBook({FileMode.SECTION: []}).save(paths.modes_path)
            book.save(paths.db_path)
        except OSError as e:
            raise IoFailure(f"Could not create store at {paths.root!r}: {e}")

        store = cls(root=root, rng=rng)
        store.set_mode(paths.db_path, store.default_mode)
        store.write_file(paths.blank_program, bundled_program(BLANK_PROGRAM).encode("utf-8"))
        store.write_file(paths.active_program, b"")
        return store

    # Settings
    def setting(self, key: str, default: str = "") -> str:
        with RecordContext(self.paths.db_path) as book:
            row = Setting.row_from_pk(book, key)
        return default if row is None else row.value

    def set_setting(self, key: str, value: str) -> None:
        with self.lock, RecordContext(self.paths.db_path) as book:
            row = Setting(key=key, value=value)
            if Setting.row_from_pk(book, key) is None:
                row.insert_row(book)
            else:
                row.update_row(book)

    @property
    def default_mode(self) -> str:
        return OWNER_ONLY if self.profile == AQUA else OPEN

    # Permission model
    def mode_of(self, path: str) -> str:
        rel = self.paths.relative(path)
        with RecordContext(self.paths.modes_path) as book:
            row = FileMode.row_from_pk(book, rel)
        return self.default_mode if row is None else row.mode

    def set_mode(self, path: str, mode: str, owner: str = SERVICE) -> None:
        if mode not in NATIVE_BITS:
            raise ValueError(f"Unknown permission mode {mode!r}")
        if owner not in IDENTITIES:
            raise ValueError(f"Unknown identity {owner!r}")

        rel = self.paths.relative(path)
        with self.lock, RecordContext(self.paths.modes_path) as book:
            row = FileMode(path=rel, owner=owner, mode=mode)
            if FileMode.row_from_pk(book, rel) is None:
                row.insert_row(book)
            else:
                row.update_row(book)

        full_path = self.paths.resolve(rel)
        if os.path.exists(full_path):
            _set_native_bits(full_path, mode)

    def _forget_mode(self, path: str) -> None:
        rel = self.paths.relative(path)
        with self.lock, RecordContext(self.paths.modes_path) as book:
            row = FileMode.row_from_pk(book, rel)
            if row is not None:
                row.delete_row(book)

    def list_files(self) -> list[tuple[str, str]]:
        """
        Every file under the project root with its permission mode
        """
        files = []
        for dirpath, _, filenames in os.walk(self.root):
            for filename in filenames:
                full_path = os.path.join(dirpath, filename)
                rel = self.paths.relative(full_path)
                if rel == MODES_FILENAME:
                    continue
                files.append((rel, self.mode_of(rel)))
        return sorted(files)

    def _allowed(self, identity: str, path: str) -> bool:
        if identity not in IDENTITIES:
            raise ValueError(f"Unknown identity {identity!r}")
        if identity in {ROOT, SERVICE}:
            return True
        return self.mode_of(path) == OPEN

    def read_as(self, identity: str, path: str) -> bytes:
        """
        Read a project file as the given filesystem identity.

        :raises PermissionDenied: if the file is owner_only and identity is 'other'
        :raises FileNotFoundError: if the file does not exist
        """
        full_path = self.paths.resolve(path)
        if not os.path.isfile(full_path):
            raise FileNotFoundError(f"{self.paths.relative(full_path)!r} does not exist")
        if not self._allowed(identity, full_path):
            raise PermissionDenied(
                f"{identity!r} may not read {self.paths.relative(full_path)!r}"
            )
        with open(full_path, "rb") as f:
            return f.read()

    def write_as(self, identity: str, path: str, data: bytes) -> None:
        """
        Write a project file as the given filesystem identity.

        New files take the profile's default mode; creating files
        as 'other' is only possible where that default is open.
        """
        full_path = self.paths.resolve(path)
        if not self._allowed(identity, full_path):
            raise PermissionDenied(
                f"{identity!r} may not write {self.paths.relative(full_path)!r}"
            )
        self.write_file(full_path, data)

    def write_file(self, path: str, data: bytes, mode: str | None = None) -> None:
        full_path = self.paths.resolve(path)
        with self.lock:
            is_new = not os.path.exists(full_path)
            temp_path = f"{full_path}.tmp"
            try:
                os.makedirs(os.path.dirname(full_path), exist_ok=True)
                with open(temp_path, "wb") as f:
                    f.write(data)
                if not is_new:
                    _laz.shutil.copymode(full_path, temp_path)
                os.replace(temp_path, full_path)
            except OSError as e:
                raise IoFailure(f"Could not write {full_path!r}: {e}")

            if mode is not None or is_new:
                self.set_mode(full_path, mode if mode else self.mode_of(full_path))

    def remove_file(self, path: str) -> None:
        full_path = self.paths.resolve(path)
        with self.lock:
            try:
                os.remove(full_path)
            except FileNotFoundError:
                pass
            except OSError as e:
                raise IoFailure(f"Could not remove {full_path!r}: {e}")
            self._forget_mode(full_path)

    # ST copies
    def copy_exists(self, copy_name: str) -> bool:
        return is_copy_name(copy_name) and os.path.isfile(self.paths.copy_path(copy_name))

    def read_copy(self, copy_name: str) -> bytes:
        if not self.copy_exists(copy_name):
            raise MissingCopy(f"ST copy {copy_name!r} does not exist")
        with open(self.paths.copy_path(copy_name), "rb") as f:
            return f.read()

    def save_copy(self, content: bytes) -> str:
        """
        Save an uploaded program under a fresh random six digit name
        """
        with self.lock:
            while True:
                copy_name = f"{self.rng.randrange(1_000_000):06d}.st"
                if not os.path.exists(self.paths.copy_path(copy_name)):
                    break
            self.write_file(self.paths.copy_path(copy_name), content)
        return copy_name

    # Program records
    def programs(self) -> list[ProgramRecord]:
        with RecordContext(self.paths.db_path) as book:
            return ProgramRecord.select_rows(book)

    def program(self, prog_id: int) -> ProgramRecord:
        with RecordContext(self.paths.db_path) as book:
            row = ProgramRecord.row_from_pk(book, prog_id)
        if row is None:
            raise UnknownProgram(f"No program with id {prog_id}")
        return row

    def program_by_copy(self, copy_name: str) -> ProgramRecord | None:
        with RecordContext(self.paths.db_path) as book:
            return ProgramRecord.select_row(book, {"copy_name": copy_name})

    def insert_program(
        self,
        title: str,
        copy_name: str,
        now: float,
        description: str = "",
    ) -> int:
        if not self.copy_exists(copy_name):
            raise MissingCopy(f"ST copy {copy_name!r} does not exist")

        with self.lock, RecordContext(self.paths.db_path) as book:
            sequence_row = Setting.row_from_pk(book, SETTING_SEQUENCE)
            sequence = int(sequence_row.value) if sequence_row else 0
            prog_id = max(ProgramRecord.max_pk(book) or 0, sequence) + 1

            ProgramRecord(
                prog_id=prog_id,
                title=title,
                description=description,
                copy_name=copy_name,
                upload_date=format_upload_date(now),
            ).insert_row(book)

            new_sequence = Setting(key=SETTING_SEQUENCE, value=str(prog_id))
            if sequence_row is None:
                new_sequence.insert_row(book)
            else:
                new_sequence.update_row(book)

        return prog_id

    def overwrite_copy(self, prog_id: int, new_content: bytes) -> None:
        """
        Replace the ST copy behind a record. The record itself is left untouched.
        """
        try:
            record = self.program(prog_id)
        except UnknownProgram:
            raise MissingCopy(f"No program with id {prog_id}")

        copy_path = self.paths.copy_path(record.copy_name)
        if os.path.isfile(copy_path):
            with open(copy_path, "rb") as f:
                if f.read() == new_content:
                    return
        self.write_file(copy_path, new_content)

    def delete_program(self, prog_id: int, profile: str | None = None) -> ProgramRecord:
        """
        Remove a program record. Only aqua also removes the ST copy from disk.
        """
        profile = self.profile if profile is None else profile
        with self.lock:
            with RecordContext(self.paths.db_path) as book:
                record = ProgramRecord.row_from_pk(book, prog_id)
                if record is None:
                    raise UnknownProgram(f"No program with id {prog_id}")
                record.delete_row(book)

            if profile == AQUA:
                self.remove_file(self.paths.copy_path(record.copy_name))

        return record

    # Users
    def users(self) -> list[UserRecord]:
        with RecordContext(self.paths.db_path) as book:
            return UserRecord.select_rows(book)

    def user_by_username(self, username: str) -> UserRecord | None:
        with RecordContext(self.paths.db_path) as book:
            return UserRecord.select_row(book, {"username": username})

    def replace_users(self, users: list[UserRecord]) -> None:
        with self.lock, RecordContext(self.paths.db_path) as book:
            book.set_lines(UserRecord.SECTION, [])
            for user in users:
                user.insert_row(book)

    # Active program index
    def read_active_program(self) -> str:
        try:
            with open(self.paths.active_program, "r", encoding="utf-8") as f:
                return f.read().strip()
        except FileNotFoundError:
            return ""

    def write_active_program(self, copy_name: str) -> None:
        valid = (
            copy_name == ""
            or is_copy_name(copy_name)
            or (copy_name == TEMPORAL_PROGRAM and self.profile == AQUA)
        )
        if not valid:
            raise ValueError(f"{copy_name!r} is not a valid active program name")
        self.write_file(self.paths.active_program, copy_name.encode("utf-8"))

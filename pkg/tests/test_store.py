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
import os
import os.path
import base64
import random

import pytest

from plcforge import LEGACY, AQUA, TEMPORAL_PROGRAM
from plcforge.exceptions import (
    AlreadyInitialized,
    MissingCopy,
    PermissionDenied,
    UnknownProgram,
)
from plcforge.store import (
    ENCODING_BASE64,
    ENCODING_PLAIN,
    OPEN,
    OTHER,
    OWNER_ONLY,
    ROOT,
    SERVICE,
    SETTING_ENCODING,
    SETTING_PROFILE,
    SETTING_SEQUENCE,
    SETTING_START_RUN,
    Store,
    encode_base64_text,
    is_copy_name,
)


NOW = 1_676_461_000.0
PROGRAM = b"PROGRAM p\n  VAR\n  END_VAR\nEND_PROGRAM\n"


def test_is_copy_name():
    assert is_copy_name("012345.st")
    assert not is_copy_name("12345.st")
    assert not is_copy_name("../012345.st")
    assert not is_copy_name(TEMPORAL_PROGRAM)


class TestInit:
    def test_legacy_seed(self, legacy_store):
        users = legacy_store.users()
        assert len(users) == 1
        user = users[0]
        assert (user.user_id, user.name, user.username, user.password) == (
            10, "OpenPLC User", "openplc", "openplc"
        )
        assert user.picture_path is None

        assert legacy_store.profile == LEGACY
        assert legacy_store.setting(SETTING_PROFILE) == LEGACY
        assert legacy_store.setting(SETTING_ENCODING) == ENCODING_PLAIN
        assert legacy_store.setting(SETTING_START_RUN) == "false"
        assert legacy_store.programs() == []
        assert legacy_store.read_active_program() == ""
        assert os.path.isfile(legacy_store.paths.blank_program)

    def test_aqua_seed_is_base64(self, aqua_store):
        user = aqua_store.users()[0]
        assert user.username == encode_base64_text("openplc")
        assert base64.b64decode(user.password) == b"openplc"
        assert aqua_store.setting(SETTING_ENCODING) == ENCODING_BASE64

    def test_already_initialized(self, legacy_store):
        with pytest.raises(AlreadyInitialized):
            Store.init(legacy_store.root, LEGACY)

    def test_unknown_profile(self, project_root):
        with pytest.raises(ValueError):
            Store.init(project_root, "neo")

    def test_open_missing(self, project_root):
        with pytest.raises(FileNotFoundError):
            Store(root=project_root)

    def test_reopen(self, aqua_store):
        reopened = Store(root=aqua_store.root)
        assert reopened.profile == AQUA


class TestPermissions:
    def test_legacy_files_open(self, legacy_store):
        for _, mode in legacy_store.list_files():
            assert mode == OPEN

        data = legacy_store.read_as(OTHER, "openplc.db")
        assert b"openplc" in data

    def test_aqua_files_owner_only(self, aqua_store):
        assert aqua_store.mode_of("openplc.db") == OWNER_ONLY
        with pytest.raises(PermissionDenied):
            aqua_store.read_as(OTHER, "openplc.db")

        assert aqua_store.read_as(SERVICE, "openplc.db")
        assert aqua_store.read_as(ROOT, "openplc.db")

    def test_write_as_other(self, legacy_store):
        legacy_store.write_as(OTHER, "webserver/active_program", b"")
        assert legacy_store.read_active_program() == ""

    def test_write_as_other_denied(self, aqua_store):
        with pytest.raises(PermissionDenied):
            aqua_store.write_as(OTHER, "webserver/active_program", b"999999.st")

    def test_set_mode(self, legacy_store):
        legacy_store.set_mode("openplc.db", OWNER_ONLY, owner=ROOT)
        with pytest.raises(PermissionDenied):
            legacy_store.read_as(OTHER, "openplc.db")

        with pytest.raises(ValueError):
            legacy_store.set_mode("openplc.db", "world_writable")
        with pytest.raises(ValueError):
            legacy_store.set_mode("openplc.db", OPEN, owner="nobody")

    def test_read_missing(self, legacy_store):
        with pytest.raises(FileNotFoundError):
            legacy_store.read_as(OTHER, "webserver/000000.st")

    def test_unknown_identity(self, legacy_store):
        with pytest.raises(ValueError):
            legacy_store.read_as("admin", "openplc.db")

    def test_outside_root(self, legacy_store):
        with pytest.raises(PermissionDenied):
            legacy_store.read_as(ROOT, "../elsewhere.db")

    def test_remove_forgets_mode(self, legacy_store):
        legacy_store.write_file("webserver/extra.txt", b"x", mode=OWNER_ONLY)
        legacy_store.remove_file("webserver/extra.txt")

        assert not os.path.exists(legacy_store.paths.resolve("webserver/extra.txt"))
        assert legacy_store.mode_of("webserver/extra.txt") == OPEN


class TestCopies:
    def test_save_copy_names(self, legacy_store):
        first = legacy_store.save_copy(PROGRAM)
        second = legacy_store.save_copy(PROGRAM)

        assert is_copy_name(first) and is_copy_name(second)
        assert first != second
        assert legacy_store.read_copy(first) == PROGRAM

    def test_seeded_names_repeat(self, project_root):
        first = Store.init(os.path.join(project_root, "a"), LEGACY, rng=random.Random(7))
        second = Store.init(os.path.join(project_root, "b"), LEGACY, rng=random.Random(7))

        assert first.save_copy(PROGRAM) == second.save_copy(PROGRAM)

    def test_read_missing_copy(self, legacy_store):
        with pytest.raises(MissingCopy):
            legacy_store.read_copy("000000.st")

    def test_copy_exists_rejects_bad_names(self, legacy_store):
        assert not legacy_store.copy_exists("blank_program.st")


class TestPrograms:
    def test_insert(self, legacy_store):
        copy_name = legacy_store.save_copy(PROGRAM)
        prog_id = legacy_store.insert_program("pump", copy_name, NOW, "station")

        assert prog_id == 1
        record = legacy_store.program(prog_id)
        assert record.title == "pump"
        assert record.description == "station"
        assert record.copy_name == copy_name
        assert record.upload_date
        assert legacy_store.program_by_copy(copy_name) == record

    def test_insert_missing_copy(self, legacy_store):
        with pytest.raises(MissingCopy):
            legacy_store.insert_program("pump", "000000.st", NOW)

    def test_ids_never_reused(self, legacy_store):
        first = legacy_store.insert_program("a", legacy_store.save_copy(PROGRAM), NOW)
        second = legacy_store.insert_program("b", legacy_store.save_copy(PROGRAM), NOW)
        legacy_store.delete_program(second)
        third = legacy_store.insert_program("c", legacy_store.save_copy(PROGRAM), NOW)

        assert (first, second, third) == (1, 2, 3)
        assert legacy_store.setting(SETTING_SEQUENCE) == "3"

    def test_unknown_program(self, legacy_store):
        with pytest.raises(UnknownProgram):
            legacy_store.program(42)
        with pytest.raises(UnknownProgram):
            legacy_store.delete_program(42)

    def test_legacy_delete_leaves_orphan(self, legacy_store):
        copy_name = legacy_store.save_copy(PROGRAM)
        prog_id = legacy_store.insert_program("pump", copy_name, NOW)

        legacy_store.delete_program(prog_id)

        assert legacy_store.programs() == []
        assert legacy_store.copy_exists(copy_name)

    def test_aqua_delete_removes_copy(self, aqua_store):
        copy_name = aqua_store.save_copy(PROGRAM)
        prog_id = aqua_store.insert_program("pump", copy_name, NOW)

        aqua_store.delete_program(prog_id)

        assert not aqua_store.copy_exists(copy_name)

    def test_overwrite_copy_keeps_record(self, legacy_store):
        copy_name = legacy_store.save_copy(PROGRAM)
        prog_id = legacy_store.insert_program("pump", copy_name, NOW)
        before = legacy_store.program(prog_id)

        legacy_store.overwrite_copy(prog_id, PROGRAM + b"(* v2 *)\n")

        assert legacy_store.program(prog_id) == before
        assert legacy_store.read_copy(copy_name).endswith(b"(* v2 *)\n")

    def test_overwrite_unknown(self, legacy_store):
        with pytest.raises(MissingCopy):
            legacy_store.overwrite_copy(42, PROGRAM)


class TestActiveProgram:
    def test_roundtrip(self, legacy_store):
        legacy_store.write_active_program("123456.st")
        assert legacy_store.read_active_program() == "123456.st"

    def test_invalid_names(self, legacy_store):
        with pytest.raises(ValueError):
            legacy_store.write_active_program("../openplc.db")
        with pytest.raises(ValueError):
            legacy_store.write_active_program(TEMPORAL_PROGRAM)

    def test_temporal_in_aqua(self, aqua_store):
        aqua_store.write_active_program(TEMPORAL_PROGRAM)
        assert aqua_store.read_active_program() == TEMPORAL_PROGRAM


def test_replace_users(legacy_store):
    users = legacy_store.users()
    users[0].password = "changed"
    legacy_store.replace_users(users)

    assert legacy_store.user_by_username("openplc").password == "changed"
    assert legacy_store.user_by_username("nobody") is None


def test_settings(legacy_store):
    legacy_store.set_setting(SETTING_START_RUN, "true")
    legacy_store.set_setting("Custom", "value")

    assert legacy_store.setting(SETTING_START_RUN) == "true"
    assert legacy_store.setting("Custom") == "value"
    assert legacy_store.setting("Missing", "fallback") == "fallback"

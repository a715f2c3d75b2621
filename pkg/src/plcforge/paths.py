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
On-disk layout of a plcforge project root
"""
import sys
import os
import os.path

from . import PROJECT_NAME, ROOT_ENVVAR, TEMPORAL_PROGRAM
from .config import CONFIG_FILENAME
from .exceptions import PermissionDenied


WEBSERVER_FOLDERNAME = "webserver"

DB_FILENAME = "openplc.db"
MODES_FILENAME = ".modes"
ACTIVE_PROGRAM_FILENAME = "active_program"
BLANK_PROGRAM_FILENAME = "blank_program.st"
HOOK_FILENAME = "hook.psm"

VAULT_FILENAME = "secret.key"
WHITELIST_FILENAME = "whitelist.txt"
ACTIVITY_FILENAME = "activity.log"
CERT_FILENAME = "certificate.pem"
KEY_FILENAME = "private_key.pem"


# Store in LOCALAPPDATA for windows, User folder for other operating systems
if sys.platform == "win32":  # pragma: skip-if-os-other
    USER_FOLDER = os.environ.get("LOCALAPPDATA") or os.path.expanduser("~")
else:  # pragma: skip-if-os-win32
    USER_FOLDER = os.path.expanduser("~")


def get_platform_folder(name: str) -> str:
    if sys.platform == "win32":  # pragma: skip-if-os-other
        platform_folder = os.path.join(USER_FOLDER, name)
    else:  # pragma: skip-if-os-win32
        platform_folder = os.path.join(USER_FOLDER, ".local", "share", name)

    return platform_folder


def default_root() -> str:
    """
    The project root from PLCFORGE_ROOT, falling back to the platform data folder
    """
    if root := os.environ.get(ROOT_ENVVAR):
        return root
    return get_platform_folder(PROJECT_NAME)


class ProjectPaths:
    root: str
    config_path: str

    db_path: str
    modes_path: str

    # <root>/webserver
    webserver: str
    active_program: str
    blank_program: str
    hook_script: str
    temporal_program: str

    # Hardening material
    vault_path: str
    whitelist_path: str
    activity_log: str
    cert_path: str
    key_path: str

    def __init__(self, root: str):
        self.root = os.path.abspath(root)
        self.config_path = os.path.join(self.root, CONFIG_FILENAME)

        self.db_path = os.path.join(self.root, DB_FILENAME)
        self.modes_path = os.path.join(self.root, MODES_FILENAME)

        self.webserver = os.path.join(self.root, WEBSERVER_FOLDERNAME)
        self.active_program = os.path.join(self.webserver, ACTIVE_PROGRAM_FILENAME)
        self.blank_program = os.path.join(self.webserver, BLANK_PROGRAM_FILENAME)
        self.hook_script = os.path.join(self.webserver, HOOK_FILENAME)
        self.temporal_program = os.path.join(self.webserver, TEMPORAL_PROGRAM)

        self.vault_path = os.path.join(self.root, VAULT_FILENAME)
        self.whitelist_path = os.path.join(self.root, WHITELIST_FILENAME)
        self.activity_log = os.path.join(self.root, ACTIVITY_FILENAME)
        self.cert_path = os.path.join(self.root, CERT_FILENAME)
        self.key_path = os.path.join(self.root, KEY_FILENAME)

    def __repr__(self):
        return f"{type(self).__name__}({self.root!r})"

    def copy_path(self, copy_name: str) -> str:
        return os.path.join(self.webserver, copy_name)

    def resolve(self, path: str) -> str:
        """
        Turn a project-relative (or absolute) path into an absolute path inside the root.

        :raises PermissionDenied: if the path escapes the project root
        """
        full_path = os.path.normpath(os.path.join(self.root, path))
        if os.path.commonpath([full_path, self.root]) != self.root:
            raise PermissionDenied(f"{path!r} is outside the project root")
        return full_path

    def relative(self, path: str) -> str:
        """
        Project-relative form of a path, always with forward slashes
        """
        return os.path.relpath(self.resolve(path), self.root).replace(os.sep, "/")

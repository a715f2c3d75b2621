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
The hardware hook language.

One command per line:
    LOG <text>              append text to the runtime log
    WRITE <path> <base64>   write decoded bytes to a project-relative path

Blank lines and lines starting with '#' are ignored.
"""
from ducktools.classbuilder.prefab import prefab

from . import _lazy_imports as _laz
from .exceptions import HookScriptError


@prefab(frozen=True)
class LogCommand:
    text: str


@prefab(frozen=True)
class WriteCommand:
    path: str
    data: bytes


def parse_hook_script(script: str) -> list[LogCommand | WriteCommand]:
    commands = []
    for line_number, raw_line in enumerate(script.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue

        keyword, _, rest = line.partition(" ")
        match keyword.upper():
            case "LOG":
                commands.append(LogCommand(text=rest.strip()))
            case "WRITE":
                parts = rest.split()
                if len(parts) != 2:
                    raise HookScriptError(
                        f"line {line_number}: WRITE takes a path and a base64 payload"
                    )
                path, payload = parts
                try:
                    data = _laz.base64.b64decode(payload, validate=True)
                except _laz.binascii.Error:
                    raise HookScriptError(f"line {line_number}: payload is not valid base64")
                commands.append(WriteCommand(path=path, data=data))
            case _:
                raise HookScriptError(f"line {line_number}: unknown command {keyword!r}")

    return commands

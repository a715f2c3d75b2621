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
Access to the data files shipped inside the package
"""
from . import _lazy_imports as _laz


PROGRAMS_FOLDER = "programs"
BLANK_PROGRAM = "blank_program.st"
DEMO_PROGRAM = "user_program.st"
EXPECTED_MATRIX = "expected_matrix.toml"


def _package_files():
    return _laz.resources.files(__package__)


def bundled_program_names() -> list[str]:
    folder = _package_files().joinpath(PROGRAMS_FOLDER)
    return sorted(
        item.name for item in folder.iterdir()
        if item.name.endswith(".st")
    )


def bundled_program(name: str) -> str:
    return _package_files().joinpath(PROGRAMS_FOLDER, name).read_text(encoding="utf-8")


def expected_matrix_text() -> str:
    return _package_files().joinpath(EXPECTED_MATRIX).read_text(encoding="utf-8")

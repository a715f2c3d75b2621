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
from ._version import (
    __version__ as __version__,
    __version_tuple__ as __version_tuple__
)


PROJECT_NAME = "plcforge"
APP_COMMAND = "plcforge"

ROOT_ENVVAR = "PLCFORGE_ROOT"

LEGACY = "legacy"
AQUA = "aqua"
PROFILES = (LEGACY, AQUA)

# Names that appear on disk and on the wire
TEMPORAL_PROGRAM = "temporal_program"
COMPILE_SENTINEL = "Compilation finished successfully!"

DEFAULT_USER_ID = 10
DEFAULT_USERNAME = "openplc"
DEFAULT_PASSWORD = "openplc"
DEFAULT_EMAIL = "openplc@openplc.com"
DEFAULT_NAME = "OpenPLC User"

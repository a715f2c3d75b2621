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
class ForgeError(Exception):
    pass


# Store
class AlreadyInitialized(ForgeError):
    """
    Error if a project root already holds a store
    """


class IoFailure(ForgeError):
    pass


class MissingCopy(ForgeError):
    """
    Error if a program record or request names an ST copy that is not on disk
    """


class UnknownProgram(ForgeError):
    pass


class PermissionDenied(ForgeError):
    """
    Error if an identity is not allowed to touch a project file
    """


class InvalidRecord(ForgeError):
    """
    Error if a record field can not be stored in the record file
    """


# Structured text
class StError(ForgeError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message)
        self.line = line
        self.column = column

    def __str__(self):
        return f"line {self.line}, column {self.column}: {self.args[0]}"


class StSyntaxError(StError):
    pass


class UndeclaredVariable(StError):
    pass


class BadLocation(StError):
    pass


class StTypeError(StError):
    pass


# Credential cipher
class CipherError(ForgeError):
    pass


class BadPadding(CipherError):
    pass


class BadEncoding(CipherError):
    pass


# Fieldbus
class FrameError(ForgeError):
    pass


class ShortFrame(FrameError):
    pass


class BadProtocolId(FrameError):
    pass


class UnsupportedFunction(FrameError):
    pass


class ModbusTimeout(ForgeError):
    pass


class ExceptionResponse(ForgeError):
    """
    Error if a Modbus server answered with an exception frame
    """
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# Tap
class UpstreamRefused(ForgeError):
    pass


class TransportError(ForgeError):
    """
    Error if a connection was reset or a TLS handshake failed
    """


# Runtime
class HookScriptError(ForgeError):
    pass


# Harness
class EnvSetupFailure(ForgeError):
    pass


class ScenarioPanicked(ForgeError):
    """
    Error if a playbook crashed rather than reaching a verdict
    """


class UnknownScenario(ForgeError):
    pass


class LifecycleError(ForgeError):
    """
    Error if a client request in the operator workflow got an unexpected status
    """
    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status

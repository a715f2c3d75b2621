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
from ducktools.lazyimporter import LazyImporter
from ducktools.lazyimporter.capture import capture_imports

__all__ = [
    # stdlib
    "asyncio",
    "base64",
    "binascii",
    "datetime",
    "hashlib",
    "html",
    "http_client",
    "ipaddress",
    "json",
    "random",
    "re",
    "resources",  # importlib.resources
    "secrets",
    "shutil",
    "socket",
    "ssl",
    "struct",
    "tempfile",
    "time",
    "tomllib",

    "TemporaryDirectory",
    "SimpleCookie",
    "CookieError",
    "parse_qs",
    "unquote_plus",
    "urlencode",
    "urlsplit",

    # cryptography
    "Cipher",
    "algorithms",
    "modes",
    "padding",
    "x509",
    "NameOID",
    "hashes",
    "rsa",
    "serialization",

    # pymodbus
    "ModbusTcpClient",
    "ModbusTcpServer",
    "ModbusException",
    "ModbusExceptionPdu",
]

laz = LazyImporter()


with capture_imports(laz):
    import asyncio
    import base64
    import binascii
    import datetime
    import hashlib
    import html
    import http.client as http_client
    import importlib.resources as resources
    import ipaddress
    import json
    import random
    import re
    import secrets
    import shutil
    import socket
    import ssl
    import struct
    import tempfile
    import time

    import tomllib

    from tempfile import TemporaryDirectory
    from http.cookies import SimpleCookie, CookieError
    from urllib.parse import parse_qs, unquote_plus, urlencode, urlsplit

    from cryptography import x509
    from cryptography.x509.oid import NameOID
    from cryptography.hazmat.primitives import hashes, padding, serialization
    from cryptography.hazmat.primitives.asymmetric import rsa
    from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

    from pymodbus.client import ModbusTcpClient
    from pymodbus.server import ModbusTcpServer
    from pymodbus.exceptions import ModbusException
    from pymodbus.pdu import ExceptionResponse as ModbusExceptionPdu

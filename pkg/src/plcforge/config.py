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
Project configuration, stored as JSON in the project root
"""
import os

from ducktools.classbuilder.prefab import Prefab, get_attributes, as_dict

from . import LEGACY, AQUA, PROFILES
from . import _lazy_imports as _laz


CONFIG_FILENAME = "plcforge.json"


class ForgeConfig(Prefab, kw_only=True):
    profile: str = LEGACY

    # Listening sockets
    bind_host: str = "127.0.0.1"
    http_port: int = 8080
    https_port: int = 8443
    modbus_port: int = 10502

    # Runtime timing
    scan_interval: float = 0.05
    session_lifetime: float = 300.0
    compile_step_delay: float = 0.02

    access_log: bool = False

    # Addresses used by the attack harness
    operator_ip: str = "127.0.0.1"
    attacker_ip: str = "127.0.0.2"
    client_timeout: float = 5.0

    def __prefab_post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"Unknown profile {self.profile!r}, expected one of {PROFILES}")

    @property
    def web_port(self) -> int:
        return self.https_port if self.profile == AQUA else self.http_port

    @classmethod
    def load(cls, file_path: str):
        try:
            with open(file_path, 'r') as f:
                json_data = _laz.json.load(f)
        except FileNotFoundError:
            return cls()
        except _laz.json.JSONDecodeError:
            return cls()
        else:
            attribute_keys = {k for k, v in get_attributes(cls).items() if v.init}

            filtered_data = {
                k: v for k, v in json_data.items() if k in attribute_keys
            }

            # noinspection PyArgumentList
            return cls(**filtered_data)

    def save(self, file_path: str):
        os.makedirs(os.path.dirname(file_path), exist_ok=True)
        with open(file_path, "w") as f:
            _laz.json.dump(as_dict(self), f, indent=2)

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
Login sessions with an absolute lifetime
"""
import threading
import time

from collections.abc import Callable

from ducktools.classbuilder.prefab import Prefab, attribute

from . import _lazy_imports as _laz


SESSION_LIFETIME = 300.0
COOKIE_NAME = "session"


def new_token() -> str:
    return _laz.secrets.token_hex(32)


class Session(Prefab, kw_only=True):
    token: str
    username: str
    client_ip: str
    created_at: float

    def age(self, now: float) -> float:
        return now - self.created_at

    def is_valid(self, now: float, lifetime: float = SESSION_LIFETIME) -> bool:
        # Absolute window, requests never refresh it
        return self.age(now) < lifetime


class SessionTable(Prefab, kw_only=True):
    lifetime: float = SESSION_LIFETIME
    clock: Callable[[], float] = time.time
    token_factory: Callable[[], str] = new_token

    sessions: dict = attribute(default_factory=dict, init=False, repr=False)
    lock: threading.RLock = attribute(init=False, repr=False, compare=False)

    def __prefab_post_init__(self):
        self.lock = threading.RLock()

    def prune(self) -> int:
        """
        Drop every expired session, returning how many went
        """
        now = self.clock()
        with self.lock:
            expired = [
                token for token, session in self.sessions.items()
                if not session.is_valid(now, self.lifetime)
            ]
            for token in expired:
                del self.sessions[token]
            return len(expired)

    def create(self, username: str, client_ip: str) -> Session:
        with self.lock:
            self.prune()
            token = self.token_factory()
            while token in self.sessions:
                token = self.token_factory()
            session = Session(
                token=token,
                username=username,
                client_ip=client_ip,
                created_at=self.clock(),
            )
            self.sessions[token] = session
            return session

    def resolve(self, token: str | None) -> Session | None:
        """
        Get the live session for a cookie value, dropping it if expired
        """
        if not token:
            return None
        with self.lock:
            session = self.sessions.get(token)
            if session is None:
                return None
            if not session.is_valid(self.clock(), self.lifetime):
                del self.sessions[token]
                return None
            return session

    def invalidate(self, token: str) -> None:
        with self.lock:
            self.sessions.pop(token, None)

    def live_count(self) -> int:
        now = self.clock()
        with self.lock:
            return sum(1 for s in self.sessions.values() if s.is_valid(now, self.lifetime))

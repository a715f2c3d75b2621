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
from plcforge.sessions import COOKIE_NAME, Session, SessionTable, new_token


def test_new_token():
    token = new_token()
    assert len(token) == 64
    assert int(token, 16) >= 0
    assert token != new_token()


def test_cookie_name():
    assert COOKIE_NAME == "session"


class TestSession:
    session = Session(token="a" * 64, username="openplc", client_ip="127.0.0.1", created_at=1000.0)

    def test_age(self):
        assert self.session.age(1042.0) == 42.0

    def test_window(self):
        assert self.session.is_valid(1299.0)
        assert not self.session.is_valid(1300.0)
        assert not self.session.is_valid(1301.0)

    def test_custom_lifetime(self):
        assert not self.session.is_valid(1011.0, lifetime=10)


class TestSessionTable:
    def test_create_resolve(self, fake_clock, token_factory):
        table = SessionTable(clock=fake_clock, token_factory=token_factory)
        session = table.create("openplc", "127.0.0.1")

        assert session.token == f"{1:064x}"
        assert session.created_at == fake_clock.now
        assert table.resolve(session.token) is session
        assert table.live_count() == 1

    def test_unknown_tokens(self, fake_clock):
        table = SessionTable(clock=fake_clock)
        assert table.resolve(None) is None
        assert table.resolve("") is None
        assert table.resolve("f" * 64) is None

    def test_expiry_is_absolute(self, fake_clock, token_factory):
        table = SessionTable(clock=fake_clock, token_factory=token_factory)
        session = table.create("openplc", "127.0.0.1")

        # Use during the window does not extend it
        fake_clock.advance(150)
        assert table.resolve(session.token) is session
        fake_clock.advance(149)
        assert table.resolve(session.token) is session

        fake_clock.advance(2)
        assert table.resolve(session.token) is None
        assert session.token not in table.sessions
        assert table.live_count() == 0

    def test_token_collision_retried(self, fake_clock):
        tokens = iter(["same", "same", "other"])
        table = SessionTable(clock=fake_clock, token_factory=lambda: next(tokens))

        first = table.create("openplc", "127.0.0.1")
        second = table.create("openplc", "127.0.0.2")

        assert (first.token, second.token) == ("same", "other")

    def test_invalidate(self, fake_clock, token_factory):
        table = SessionTable(clock=fake_clock, token_factory=token_factory)
        session = table.create("openplc", "127.0.0.1")

        table.invalidate(session.token)
        table.invalidate(session.token)

        assert table.resolve(session.token) is None

    def test_live_count_ignores_expired(self, fake_clock, token_factory):
        table = SessionTable(lifetime=10, clock=fake_clock, token_factory=token_factory)
        table.create("openplc", "127.0.0.1")
        fake_clock.advance(5)
        table.create("openplc", "127.0.0.1")
        fake_clock.advance(6)

        assert table.live_count() == 1

    def test_create_prunes_expired(self, fake_clock, token_factory):
        table = SessionTable(lifetime=10, clock=fake_clock, token_factory=token_factory)
        old = table.create("openplc", "127.0.0.1")
        fake_clock.advance(11)

        new = table.create("openplc", "127.0.0.1")

        assert list(table.sessions) == [new.token]
        assert old.token not in table.sessions

    def test_prune_keeps_live(self, fake_clock, token_factory):
        table = SessionTable(lifetime=10, clock=fake_clock, token_factory=token_factory)
        table.create("openplc", "127.0.0.1")
        fake_clock.advance(5)
        live = table.create("openplc", "127.0.0.2")
        fake_clock.advance(6)

        assert table.prune() == 1
        assert list(table.sessions) == [live.token]

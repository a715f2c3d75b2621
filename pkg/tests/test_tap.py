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
import socket
import socketserver
import threading

import pytest

from plcforge.exceptions import TransportError, UpstreamRefused
from plcforge.fieldbus import (
    COIL_OFF,
    COIL_ON,
    WRITE_SINGLE_COIL,
    Frame,
    HmiClient,
    ModbusServer,
    PlantImage,
    encode_frame,
)
from plcforge.tap import (
    C2S,
    S2C,
    ByteFlipRule,
    CoilFlipRule,
    PatternRule,
    Tap,
    Transcript,
    TranscriptEntry,
    looks_like_tls,
    replay,
    tls_record_types,
)


class _EchoHandler(socketserver.BaseRequestHandler):
    # Answer one chunk in upper case, then hang up
    def handle(self):
        data = self.request.recv(65536)
        if not data:
            return
        self.server.received.append(data)
        self.request.sendall(data.upper())


class EchoServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self):
        self.received = []
        super().__init__(("127.0.0.1", 0), _EchoHandler)


@pytest.fixture
def echo_server():
    server = EchoServer()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    server.server_close()


def exchange(address, payload: bytes) -> bytes:
    response = b""
    with socket.create_connection(address, timeout=5) as sock:
        sock.sendall(payload)
        while chunk := sock.recv(65536):
            response += chunk
    return response


def closed_port() -> tuple[str, int]:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()


def coil_write(transaction_id, address, value) -> bytes:
    payload = address.to_bytes(2, "big") + value.to_bytes(2, "big")
    return encode_frame(Frame(
        transaction_id=transaction_id,
        protocol_id=0,
        unit_id=1,
        function=WRITE_SINGLE_COIL,
        payload=payload,
    ))


class TestTranscript:
    def test_streams(self):
        transcript = Transcript()
        transcript.append(C2S, b"GET ")
        transcript.append(S2C, b"200")
        transcript.append(C2S, b"/\r\n")

        assert len(transcript) == 3
        assert transcript.client_bytes() == b"GET /\r\n"
        assert transcript.server_bytes() == b"200"
        assert transcript.contains(b"T /")
        assert not transcript.contains(b"404")

    def test_json_lines(self, project_root):
        transcript = Transcript()
        transcript.append(C2S, b"\x00\xffbinary")
        path = f"{project_root}/transcript.jsonl"

        transcript.save(path)
        loaded = Transcript.load(path)

        assert loaded.entries == transcript.entries

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            TranscriptEntry.from_json('{"dir": "sideways", "t_ms": 0, "data_b64": ""}')


class TestRules:
    def test_pattern_rule(self):
        rule = PatternRule(b" AND ", b" OR  ")

        assert rule.client_chunk(b"a AND b AND c") == b"a OR  b OR  c"
        assert rule.server_chunk(b"a AND b") == b"a AND b"
        assert rule.hits == 2

    def test_pattern_rule_server_side(self):
        rule = PatternRule(b"200 OK", b"500 NO", direction=S2C)
        assert rule.client_chunk(b"200 OK") == b"200 OK"
        assert rule.server_chunk(b"HTTP/1.0 200 OK") == b"HTTP/1.0 500 NO"

    def test_pattern_rule_invalid(self):
        with pytest.raises(ValueError):
            PatternRule(b"", b"x")
        with pytest.raises(ValueError):
            PatternRule(b"x", b"y", direction="both")

    def test_coil_flip(self):
        rule = CoilFlipRule(address=3)
        request = coil_write(9, 3, COIL_ON)

        flipped = rule.client_chunk(request)
        assert flipped == coil_write(9, 3, COIL_OFF)

        # The server echoes what it got, the client sees what it asked for
        assert rule.server_chunk(flipped) == request

    def test_coil_flip_other_address(self):
        rule = CoilFlipRule(address=3)
        request = coil_write(9, 4, COIL_ON)

        assert rule.client_chunk(request) == request
        assert rule.server_chunk(request) == request

    def test_coil_flip_partial_data(self):
        rule = CoilFlipRule()
        request = coil_write(9, 3, COIL_ON)

        assert rule.client_chunk(request[:5]) == b""
        assert rule.client_chunk(request[5:]) == coil_write(9, 3, COIL_OFF)

    def test_coil_flip_split_across_chunks(self):
        rule = CoilFlipRule(address=3).bind()
        first = coil_write(1, 3, COIL_ON)
        second = coil_write(2, 3, COIL_OFF)
        stream = first + second

        out = rule.client_chunk(stream[:9])
        out += rule.client_chunk(stream[9:14])
        out += rule.client_chunk(stream[14:])

        assert out == coil_write(1, 3, COIL_OFF) + coil_write(2, 3, COIL_ON)
        assert rule.flipped == {1: COIL_ON, 2: COIL_OFF}

    def test_coil_flip_bound_rules_share_flips(self):
        rule = CoilFlipRule(address=3)
        stream = rule.bind()
        request = coil_write(5, 3, COIL_ON)

        stream.client_chunk(request)

        assert rule.flipped == {5: COIL_ON}
        assert stream._pending is not rule._pending

    def test_coil_flip_passes_non_modbus(self):
        rule = CoilFlipRule()
        assert rule.client_chunk(b"GET / HTTP/1.0\r\n\r\n") == b"GET / HTTP/1.0\r\n\r\n"
        assert rule.client_chunk(b"\x00\x01") == b""

    def test_byte_flip(self):
        rule = ByteFlipRule(min_size=4)

        assert rule.client_chunk(b"abc") == b"abc"
        assert rule.client_chunk(b"abcd") == b"abc" + bytes([ord("d") ^ 0xFF])
        assert rule.server_chunk(b"abcd") == b"abcd"
        assert rule.hits == 1


class TestTls:
    def test_record_types(self):
        data = bytes([0x16, 0x03, 0x03, 0x00, 0x01, 0xAA, 0x17, 0x03, 0x03, 0x00, 0x00])
        assert tls_record_types(data) == [0x16, 0x17]

    def test_looks_like_tls(self):
        assert looks_like_tls(bytes([0x16, 0x03, 0x01, 0x00]))
        assert not looks_like_tls(b"POST /login HTTP/1.0")


class TestTap:
    def test_upstream_refused(self):
        with pytest.raises(UpstreamRefused):
            Tap(closed_port()).start()

    def test_not_running(self):
        with pytest.raises(RuntimeError):
            Tap(("127.0.0.1", 1)).address

    def test_relay_and_record(self, echo_server):
        with Tap(echo_server.server_address) as tap:
            assert exchange(tap.address, b"hello") == b"HELLO"

        transcript = tap.transcript
        assert transcript.client_bytes() == b"hello"
        assert transcript.server_bytes() == b"HELLO"
        assert len(tap.transcripts) == 1

    def test_rewrite_after_recording(self, echo_server):
        rule = PatternRule(b"cat", b"dog")
        with Tap(echo_server.server_address, rule=rule) as tap:
            assert exchange(tap.address, b"cat") == b"DOG"

        # The transcript keeps what the client really sent
        assert tap.transcript.client_bytes() == b"cat"
        assert echo_server.received == [b"dog"]

    def test_coil_flip_through_modbus(self):
        plant = PlantImage()
        server = ModbusServer(plant).start()
        try:
            with Tap(server.address, rule=CoilFlipRule(address=3)) as tap:
                with HmiClient(tap.address) as client:
                    assert client.write_coil(3, True) is True
                    assert client.write_coil(2, True) is True
        finally:
            server.stop()

        regs = plant.snapshot()
        assert regs.input_coils[3] is False
        assert regs.input_coils[2] is True


class TestReplay:
    def test_replay(self, echo_server):
        with Tap(echo_server.server_address) as tap:
            exchange(tap.address, b"login")

        assert replay(tap.transcript, echo_server.server_address) == b"LOGIN"
        assert echo_server.received == [b"login", b"login"]

    def test_empty_transcript(self, echo_server):
        with pytest.raises(ValueError):
            replay(Transcript(), echo_server.server_address)

    def test_refused(self):
        transcript = Transcript()
        transcript.append(C2S, b"login")
        with pytest.raises(TransportError):
            replay(transcript, closed_port(), timeout=1)

    def test_tls_without_application_data(self, echo_server):
        transcript = Transcript()
        # An echoed handshake record is all the target sends back
        transcript.append(C2S, bytes([0x16, 0x03, 0x01, 0x00, 0x02, 0x01, 0x00]))

        with pytest.raises(TransportError):
            replay(transcript, echo_server.server_address)

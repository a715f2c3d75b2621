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
Modbus/TCP subset over the plant register image.

Server side functions:
    0x01  read output coils (%QX)
    0x03  read holding words (%QW)
    0x05  write one input coil (%IX)
    0x06  write one input word (%IW)

Coil addresses are 8 * byte + bit of the %-location, word addresses the word index.
There is no authentication or encryption in either profile.

The TCP server and the HMI client are pymodbus; the frame codec here is what the
tap uses to pick frames out of a relayed stream.
"""
import threading

from collections.abc import Callable

from ducktools.classbuilder.prefab import prefab
from pymodbus.datastore import ModbusServerContext
from pymodbus.datastore.context import ModbusBaseSlaveContext

from . import _lazy_imports as _laz
from ._logger import log
from .exceptions import (
    BadProtocolId,
    ExceptionResponse,
    ModbusTimeout,
    ShortFrame,
    UnsupportedFunction,
)
from .stlang import COIL_COUNT, WORD_COUNT, WORD_MASK, RegisterMap


READ_COILS = 0x01
READ_HOLDING_REGISTERS = 0x03
WRITE_SINGLE_COIL = 0x05
WRITE_SINGLE_REGISTER = 0x06
SUPPORTED_FUNCTIONS = frozenset({
    READ_COILS,
    READ_HOLDING_REGISTERS,
    WRITE_SINGLE_COIL,
    WRITE_SINGLE_REGISTER,
})

EXCEPTION_BIT = 0x80

ILLEGAL_FUNCTION = 0x01
ILLEGAL_DATA_ADDRESS = 0x02
ILLEGAL_DATA_VALUE = 0x03

COIL_ON = 0xFF00
COIL_OFF = 0x0000
WRITE_COIL_VALUES = {COIL_OFF: False, COIL_ON: True}

MAX_READ_COILS = 2000
MAX_READ_REGISTERS = 125

HEADER_FORMAT = ">HHHBB"
HEADER_SIZE = 8  # MBAP header plus function code
MBAP_SIZE = 7
MAX_MBAP_LENGTH = 254  # unit id, function code and at most 252 bytes of data

DEFAULT_UNIT_ID = 1
DEFAULT_TIMEOUT = 2.0


@prefab(frozen=True)
class Frame:
    transaction_id: int
    protocol_id: int
    unit_id: int
    function: int
    payload: bytes = b""

    @property
    def length(self) -> int:
        # unit id + function code + payload
        return 2 + len(self.payload)

    @property
    def is_exception(self) -> bool:
        return bool(self.function & EXCEPTION_BIT)

    @property
    def exception_code(self) -> int | None:
        return self.payload[0] if self.is_exception and self.payload else None


def _check_function(function: int) -> None:
    # Exception replies carry the requested function with the high bit set
    if function & EXCEPTION_BIT:
        return
    if function not in SUPPORTED_FUNCTIONS:
        raise UnsupportedFunction(f"Function code 0x{function:02x} is not supported")


def encode_frame(frame: Frame) -> bytes:
    _check_function(frame.function)
    if frame.protocol_id != 0:
        raise BadProtocolId(f"Protocol id must be 0, got {frame.protocol_id}")
    header = _laz.struct.pack(
        HEADER_FORMAT,
        frame.transaction_id,
        frame.protocol_id,
        frame.length,
        frame.unit_id,
        frame.function,
    )
    return header + frame.payload


def decode_frame(data: bytes) -> Frame:
    """
    Decode one complete Modbus/TCP frame.

    :raises ShortFrame: if data is shorter than its header or stated length
    :raises BadProtocolId: if the protocol id is not 0
    :raises UnsupportedFunction: for function codes outside the served subset
    """
    if len(data) < HEADER_SIZE:
        raise ShortFrame(f"Modbus frame needs at least {HEADER_SIZE} bytes, got {len(data)}")

    transaction_id, protocol_id, length, unit_id, function = _laz.struct.unpack(
        HEADER_FORMAT, data[:HEADER_SIZE]
    )
    if protocol_id != 0:
        raise BadProtocolId(f"Protocol id must be 0, got {protocol_id}")
    if length < 2 or len(data) < MBAP_SIZE - 1 + length:
        raise ShortFrame(f"Frame states length {length} but only {len(data) - 6} bytes follow")
    _check_function(function)

    return Frame(
        transaction_id=transaction_id,
        protocol_id=protocol_id,
        unit_id=unit_id,
        function=function,
        payload=bytes(data[HEADER_SIZE:MBAP_SIZE - 1 + length]),
    )


# Payload helpers
def pack_bits(bits: list[bool]) -> bytes:
    packed = bytearray((len(bits) + 7) // 8)
    for i, bit in enumerate(bits):
        if bit:
            packed[i // 8] |= 1 << (i % 8)
    return bytes(packed)


def unpack_bits(data: bytes, count: int) -> list[bool]:
    return [bool(data[i // 8] & (1 << (i % 8))) for i in range(count)]


def read_request(address: int, quantity: int) -> bytes:
    return _laz.struct.pack(">HH", address, quantity)


def write_request(address: int, value: int) -> bytes:
    return _laz.struct.pack(">HH", address, value)


def exception_frame(request: Frame, code: int) -> Frame:
    return Frame(
        transaction_id=request.transaction_id,
        protocol_id=0,
        unit_id=request.unit_id,
        function=request.function | EXCEPTION_BIT,
        payload=bytes([code]),
    )


class PlantImage:
    """
    The shared register map, swapped atomically under one lock
    """
    def __init__(self, regs: RegisterMap | None = None):
        self._regs = RegisterMap() if regs is None else regs
        self.lock = threading.Lock()

    def snapshot(self) -> RegisterMap:
        with self.lock:
            return self._regs

    def update(self, func: Callable[[RegisterMap], RegisterMap]) -> RegisterMap:
        with self.lock:
            self._regs = func(self._regs)
            return self._regs

    def reset(self) -> None:
        with self.lock:
            self._regs = RegisterMap()

    def set_input_coil(self, index: int, value: bool) -> RegisterMap:
        return self.update(lambda regs: regs.set_input_coil(index, value))

    def set_input_word(self, index: int, value: int) -> RegisterMap:
        return self.update(lambda regs: regs.set_input_word(index, value))


def _image_size(function: int) -> int | None:
    match function:
        case 0x01 | 0x05:
            return COIL_COUNT
        case 0x03 | 0x06:
            return WORD_COUNT
    return None


class PlantContext(ModbusBaseSlaveContext):
    """
    pymodbus device context over the plant image.

    Reads are served from the output images and writes land in the input
    images, so the coil and register tables can not be plain datablocks.
    """
    def __init__(self, plant: PlantImage):
        self.plant = plant

    def __str__(self):
        return "plcforge plant image"

    def reset(self):
        self.plant.reset()

    def validate(self, fc_as_hex, address, count=1):
        size = _image_size(fc_as_hex)
        return size is not None and address >= 0 and count >= 1 and address + count <= size

    def getValues(self, fc_as_hex, address, count=1):
        regs = self.plant.snapshot()
        match fc_as_hex:
            case 0x01:
                image = regs.output_coils
            case 0x03:
                image = regs.holding_words
            case 0x05:
                image = regs.input_coils
            case 0x06:
                image = regs.input_words
            case _:
                raise UnsupportedFunction(f"Function code 0x{fc_as_hex:02x} is not supported")
        return list(image[address:address + count])

    def setValues(self, fc_as_hex, address, values):
        match fc_as_hex:
            case 0x05:
                def write(regs: RegisterMap) -> RegisterMap:
                    for offset, value in enumerate(values):
                        regs = regs.set_input_coil(address + offset, bool(value))
                    return regs
            case 0x06:
                def write(regs: RegisterMap) -> RegisterMap:
                    for offset, value in enumerate(values):
                        regs = regs.set_input_word(address + offset, value & WORD_MASK)
                    return regs
            case _:
                raise UnsupportedFunction(f"Function code 0x{fc_as_hex:02x} is not supported")
        self.plant.update(write)


def handle_request(request: Frame, plant: PlantImage) -> Frame:
    """
    Apply one request to the plant image and build the response frame.

    The frame level counterpart of the pymodbus server, using the same device context.
    """
    function = request.function
    if function not in SUPPORTED_FUNCTIONS:
        return exception_frame(request, ILLEGAL_FUNCTION)
    if len(request.payload) != 4:
        return exception_frame(request, ILLEGAL_DATA_VALUE)
    address, value = _laz.struct.unpack(">HH", request.payload)
    context = PlantContext(plant)

    match function:
        case 0x01 | 0x03:
            limit = MAX_READ_COILS if function == READ_COILS else MAX_READ_REGISTERS
            if not 1 <= value <= limit:
                return exception_frame(request, ILLEGAL_DATA_VALUE)
            if not context.validate(function, address, value):
                return exception_frame(request, ILLEGAL_DATA_ADDRESS)
            values = context.getValues(function, address, value)
            if function == READ_COILS:
                data = pack_bits(values)
            else:
                data = _laz.struct.pack(f">{len(values)}H", *values)
            payload = bytes([len(data)]) + data
        case 0x05:
            if value not in WRITE_COIL_VALUES:
                return exception_frame(request, ILLEGAL_DATA_VALUE)
            if not context.validate(function, address):
                return exception_frame(request, ILLEGAL_DATA_ADDRESS)
            context.setValues(function, address, [WRITE_COIL_VALUES[value]])
            payload = request.payload
        case _:
            if not context.validate(function, address):
                return exception_frame(request, ILLEGAL_DATA_ADDRESS)
            context.setValues(function, address, [value])
            payload = request.payload

    return Frame(
        transaction_id=request.transaction_id,
        protocol_id=0,
        unit_id=request.unit_id,
        function=function,
        payload=payload,
    )


def _free_port(host: str) -> int:
    with _laz.socket.socket() as sock:
        sock.bind((host, 0))
        return sock.getsockname()[1]


class ModbusServer:
    """
    A pymodbus TCP server for the plant image on its own event loop thread
    """
    def __init__(self, plant: PlantImage, host: str = "127.0.0.1", port: int = 0):
        self.plant = plant
        self.host = host
        self.port = port if port else _free_port(host)
        self.context = ModbusServerContext(slaves=PlantContext(plant), single=True)

        self._loop = None
        self._thread: threading.Thread | None = None
        self._server = None
        self._serving = None

    def __enter__(self):
        return self.start()

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()

    @property
    def address(self) -> tuple[str, int]:
        return self.host, self.port

    async def _create_server(self):
        return _laz.ModbusTcpServer(self.context, address=self.address)

    def _run(self, coro):
        return _laz.asyncio.run_coroutine_threadsafe(coro, self._loop)

    def start(self, timeout: float = DEFAULT_TIMEOUT) -> "ModbusServer":
        self._loop = _laz.asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._loop.run_forever, daemon=True)
        self._thread.start()

        self._server = self._run(self._create_server()).result(timeout)
        self._serving = self._run(self._server.serve_forever())

        deadline = _laz.time.monotonic() + timeout
        while True:
            if self._serving.done():
                self.stop()
                raise ModbusTimeout(f"Modbus server could not listen on {self.host}:{self.port}")
            try:
                _laz.socket.create_connection(self.address, timeout=0.2).close()
            except OSError:
                if _laz.time.monotonic() > deadline:
                    self.stop()
                    raise ModbusTimeout(f"Modbus server did not come up on {self.host}:{self.port}")
                _laz.time.sleep(0.01)
            else:
                break

        log(f"Modbus server listening on {self.host}:{self.port}")
        return self

    def stop(self) -> None:
        if self._server is not None:
            try:
                self._run(self._server.shutdown()).result(DEFAULT_TIMEOUT)
            except Exception as e:
                log(f"Modbus server did not shut down cleanly: {e!r}")
            self._server = None
            self._serving = None
        if self._loop is not None:
            self._loop.call_soon_threadsafe(self._loop.stop)
            self._thread.join()
            self._loop.close()
            self._loop = None
            self._thread = None


def serve(plant: PlantImage, port: int, host: str = "127.0.0.1") -> ModbusServer:
    return ModbusServer(plant, host, port).start()


class HmiClient:
    """
    The SCADA HMI role, a pymodbus TCP client.

    Requests on one client carry increasing transaction ids.
    """
    def __init__(
        self,
        address: tuple[str, int],
        *,
        timeout: float = DEFAULT_TIMEOUT,
        unit_id: int = DEFAULT_UNIT_ID,
        source_ip: str | None = None,
    ):
        self.address = address
        self.unit_id = unit_id
        host, port = address
        self.client = _laz.ModbusTcpClient(
            host,
            port=port,
            timeout=timeout,
            source_address=(source_ip, 0) if source_ip else None,
        )

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def close(self):
        self.client.close()

    def _execute(self, function: int, call, *args, **kwargs):
        if not self.client.connect():
            raise ModbusTimeout(f"Could not reach Modbus server at {self.address}")
        try:
            response = call(*args, slave=self.unit_id, **kwargs)
        except _laz.ModbusException as e:
            self.close()
            raise ModbusTimeout(f"No response from Modbus server at {self.address}: {e}")

        if isinstance(response, _laz.ModbusExceptionPdu):
            raise ExceptionResponse(
                f"Server answered function 0x{function:02x} with exception "
                f"0x{response.exception_code:02x}",
                code=response.exception_code,
            )
        if response.isError():
            self.close()
            raise ModbusTimeout(f"No response from Modbus server at {self.address}: {response}")
        return response

    def read_coils(self, address: int, quantity: int) -> list[bool]:
        response = self._execute(READ_COILS, self.client.read_coils, address, count=quantity)
        return [bool(bit) for bit in response.bits[:quantity]]

    def read_holding(self, address: int, quantity: int) -> list[int]:
        response = self._execute(
            READ_HOLDING_REGISTERS, self.client.read_holding_registers, address, count=quantity
        )
        return list(response.registers[:quantity])

    def write_coil(self, address: int, value: bool) -> bool:
        response = self._execute(WRITE_SINGLE_COIL, self.client.write_coil, address, bool(value))
        return bool(response.value)

    def write_register(self, address: int, value: int) -> int:
        response = self._execute(
            WRITE_SINGLE_REGISTER, self.client.write_register, address, value & WORD_MASK
        )
        return response.value


# One connection per polled target, so consecutive polls never reuse a transaction id
_POLLERS: dict[tuple[str, int], HmiClient] = {}
_POLLERS_LOCK = threading.Lock()


def hmi_poll(
    target_addr: tuple[str, int],
    coil_addr: int,
    qty: int,
    *,
    timeout: float = DEFAULT_TIMEOUT,
) -> list[bool]:
    target = tuple(target_addr)
    with _POLLERS_LOCK:
        hmi = _POLLERS.get(target)
        if hmi is None:
            hmi = _POLLERS[target] = HmiClient(target, timeout=timeout)
        try:
            return hmi.read_coils(coil_addr, qty)
        except ModbusTimeout:
            del _POLLERS[target]
            hmi.close()
            raise

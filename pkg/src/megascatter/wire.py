"""Binary wire framing and the text control plane.

Frame layout (normative, all multi-byte values little-endian):

    offset  size  field
    0       4     magic, ASCII "JSCT"
    4       1     version, currently 1
    5       1     frame type: 1 = points chunk, 2 = selection, 3 = camera
    6       2     reserved, must be 0
    8       ...   payload

Points chunk payload:

    u32 row_count, u16 col_count, then col_count descriptors
    (u8 name length, UTF-8 name bytes, u8 dtype), then each column's data
    tightly packed in descriptor order. dtypes: 1 = real32, 2 = real64,
    3 = category code u8, 4 = u32. The x and y coordinate columns are always
    emitted first, as real32 (the GPU boundary is 32-bit; the core keeps 64).

Selection payload: u32 count, then count strictly ascending u32 row indices.

Camera payload: four real64 values x_min, x_max, y_min, y_max.

Control messages are UTF-8 JSON records ``{type, session, view, body}``
carried as text; frames are carried as binary. The transport's message kind
(text vs binary) tells them apart.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import EncodingLimitError, ProtocolError, TruncationError
from .quadtree import Extent
from .selection import SelectionSet
from .table import CategoricalColumn, PointTable
from .viewstate import Camera

MAGIC = b"JSCT"
VERSION = 1
HEADER_LEN = 8

FRAME_POINTS = 1
FRAME_SELECTION = 2
FRAME_CAMERA = 3

DTYPE_REAL32 = 1
DTYPE_REAL64 = 2
DTYPE_CATEGORY8 = 3
DTYPE_U32 = 4

_DTYPE_NP = {
    DTYPE_REAL32: np.dtype("<f4"),
    DTYPE_REAL64: np.dtype("<f8"),
    DTYPE_CATEGORY8: np.dtype("u1"),
    DTYPE_U32: np.dtype("<u4"),
}

MAX_COLUMNS = 0xFFFF
MAX_NAME_BYTES = 0xFF
MAX_U32 = 0xFFFFFFFF

CONTROL_TYPES = frozenset(
    {
        "hello",
        "dataset_info",
        "set_encoding",
        "view_update",
        "selection_update",
        "hover_update",
        "error",
    }
)


@dataclass(frozen=True)
class Frame:
    frame_type: int
    payload: bytes

    def to_bytes(self) -> bytes:
        return MAGIC + struct.pack("<BBH", VERSION, self.frame_type, 0) + self.payload


def parse_frame(data: bytes) -> Frame:
    """Validate the header and split off the payload."""
    if len(data) < HEADER_LEN:
        raise TruncationError(f"frame shorter than its {HEADER_LEN}-byte header")
    if data[:4] != MAGIC:
        raise ProtocolError(f"bad magic {data[:4]!r}")
    version, frame_type, reserved = struct.unpack_from("<BBH", data, 4)
    if version != VERSION:
        raise ProtocolError(f"unsupported version {version}")
    if reserved != 0:
        raise ProtocolError("reserved header bytes must be 0")
    if frame_type not in (FRAME_POINTS, FRAME_SELECTION, FRAME_CAMERA):
        raise ProtocolError(f"unknown frame type {frame_type}")
    return Frame(frame_type=frame_type, payload=data[HEADER_LEN:])


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.payload):
            raise TruncationError(
                f"payload truncated: wanted {n} bytes at offset {self.offset}, "
                f"have {len(self.payload) - self.offset}"
            )
        out = self.payload[self.offset:self.offset + n]
        self.offset += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def finish(self):
        if self.offset != len(self.payload):
            raise ProtocolError(
                f"{len(self.payload) - self.offset} unexpected trailing payload bytes"
            )


@dataclass(frozen=True)
class PointsChunk:
    """Decoded points frame: named arrays in wire order (x, y first)."""

    row_count: int
    columns: list[tuple[str, np.ndarray]] = field(default_factory=list)


def _column_wire_dtype(col) -> tuple[int, np.ndarray]:
    if isinstance(col, CategoricalColumn):
        if len(col.labels) > 0xFF:
            return DTYPE_U32, col.codes.astype("<u4")
        return DTYPE_CATEGORY8, col.codes.astype("u1")
    return DTYPE_REAL64, col.values.astype("<f8")


def encode_points_chunk(
    table: PointTable,
    rows: SelectionSet | None = None,
    columns: tuple[str, ...] = (),
) -> Frame:
    """Columnar frame with x/y (real32) first, then the named aux columns."""
    if rows is not None:
        idx = rows.indices
        if len(idx) and int(idx[-1]) >= table.row_count:
            raise ProtocolError("row set exceeds table row count")
    else:
        idx = None

    named: list[tuple[str, int, np.ndarray]] = []
    x = table.x if idx is None else table.x[idx]
    y = table.y if idx is None else table.y[idx]
    named.append(("x", DTYPE_REAL32, x.astype("<f4")))
    named.append(("y", DTYPE_REAL32, y.astype("<f4")))
    for name in columns:
        col = table.column(name)
        dtype_code, data = _column_wire_dtype(col)
        if idx is not None:
            data = data[idx]
        named.append((name, dtype_code, data))

    if len(named) > MAX_COLUMNS:
        raise EncodingLimitError(f"too many columns: {len(named)} > {MAX_COLUMNS}")

    row_count = len(x)
    parts = [struct.pack("<IH", row_count, len(named))]
    for name, dtype_code, _ in named:
        name_bytes = name.encode("utf-8")
        if len(name_bytes) > MAX_NAME_BYTES:
            raise EncodingLimitError(f"column name too long: {name!r}")
        parts.append(struct.pack("<B", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack("<B", dtype_code))
    for _, _, data in named:
        parts.append(np.ascontiguousarray(data).tobytes())
    return Frame(FRAME_POINTS, b"".join(parts))


def decode_points_chunk(frame: Frame) -> PointsChunk:
    if frame.frame_type != FRAME_POINTS:
        raise ProtocolError(f"expected points frame, got type {frame.frame_type}")
    r = _Reader(frame.payload)
    row_count, col_count = r.unpack("<IH")
    descriptors: list[tuple[str, np.dtype]] = []
    for _ in range(col_count):
        (name_len,) = r.unpack("<B")
        raw_name = r.take(name_len)
        try:
            name = raw_name.decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolError(f"column name is not valid UTF-8: {raw_name!r}") from None
        (dtype_code,) = r.unpack("<B")
        np_dtype = _DTYPE_NP.get(dtype_code)
        if np_dtype is None:
            raise ProtocolError(f"unknown column dtype {dtype_code}")
        descriptors.append((name, np_dtype))
    columns: list[tuple[str, np.ndarray]] = []
    for name, np_dtype in descriptors:
        raw = r.take(row_count * np_dtype.itemsize)
        columns.append((name, np.frombuffer(raw, dtype=np_dtype).copy()))
    r.finish()
    return PointsChunk(row_count=row_count, columns=columns)


def encode_selection(sel: SelectionSet) -> Frame:
    idx = sel.indices
    if len(idx) and int(idx[-1]) > MAX_U32:
        raise EncodingLimitError("selection index exceeds u32 range")
    payload = struct.pack("<I", len(idx)) + idx.astype("<u4").tobytes()
    return Frame(FRAME_SELECTION, payload)


def decode_selection(frame: Frame) -> SelectionSet:
    if frame.frame_type != FRAME_SELECTION:
        raise ProtocolError(f"expected selection frame, got type {frame.frame_type}")
    r = _Reader(frame.payload)
    (count,) = r.unpack("<I")
    raw = r.take(4 * count)
    r.finish()
    indices = np.frombuffer(raw, dtype="<u4").astype(np.int64)
    if len(indices) > 1 and (np.diff(indices) <= 0).any():
        raise ProtocolError("selection indices must be strictly ascending")
    return SelectionSet(indices)


def encode_camera(cam: Camera) -> Frame:
    e = cam.extent
    return Frame(FRAME_CAMERA, struct.pack("<dddd", e.x_min, e.x_max, e.y_min, e.y_max))


def decode_camera(frame: Frame) -> Camera:
    if frame.frame_type != FRAME_CAMERA:
        raise ProtocolError(f"expected camera frame, got type {frame.frame_type}")
    r = _Reader(frame.payload)
    x_min, x_max, y_min, y_max = r.unpack("<dddd")
    r.finish()
    try:
        return Camera(Extent(x_min, x_max, y_min, y_max))
    except ValueError as exc:
        raise ProtocolError(f"invalid camera extent: {exc}") from None


@dataclass(frozen=True)
class ControlMessage:
    """Text-plane record; ``body`` is a JSON-serializable dict."""

    type: str
    session: str
    view: str | None = None
    body: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.type not in CONTROL_TYPES:
            raise ProtocolError(f"unknown control message type {self.type!r}")

    def to_json(self) -> str:
        record = {"type": self.type, "session": self.session, "view": self.view, "body": self.body}
        return json.dumps(record, separators=(",", ":"))


def decode_control(text: str) -> ControlMessage:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"control message is not valid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise ProtocolError("control message must be a JSON object")
    msg_type = record.get("type")
    if not isinstance(msg_type, str):
        raise ProtocolError("control message needs a string 'type'")
    session = record.get("session", "")
    view = record.get("view")
    body = record.get("body", {})
    if not isinstance(body, dict):
        raise ProtocolError("control message 'body' must be an object")
    if view is not None and not isinstance(view, str):
        raise ProtocolError("control message 'view' must be a string or null")
    return ControlMessage(type=msg_type, session=str(session), view=view, body=body)

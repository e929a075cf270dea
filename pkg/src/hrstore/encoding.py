"""Memcomparable key encoding.

Byte-lexicographic order of encodings equals logical order of the encoded
clustering-value tuples, with a trailing sequence number breaking ties:

- int64 and date: big-endian with the sign bit flipped.
- float64: big-endian IEEE bits; positives get the sign bit set, negatives
  get all bits flipped.
- string: raw UTF-8 bytes with embedded 0x00 escaped as 0x00 0xFF, closed by
  a 0x00 0x00 terminator. The two-byte terminator keeps composite keys
  ordered even when the next field's encoding starts with 0xFF; a bare 0x00
  terminator would not.

Within a table file every key occupies a fixed width; logical encodings are
padded with 0x00, which never reorders keys because the terminator already
sorts below any continuation.
"""

from __future__ import annotations

import struct
from typing import Sequence

import numpy as np

from .errors import TypeMismatchError
from .schema import DATE, FLOAT64, INT64, STRING, ReplicaLayout, Schema

SEQ_BYTES = 8
_SIGN = 1 << 63
_U64_MAX = (1 << 64) - 1


def encode_int64(value: int) -> bytes:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeMismatchError(f"expected int, got {type(value).__name__}")
    v = int(value)
    if not -_SIGN <= v < _SIGN:
        raise TypeMismatchError(f"{v} out of int64 range")
    return struct.pack(">Q", (v + _SIGN) & _U64_MAX)


def decode_int64(data: bytes) -> int:
    (u,) = struct.unpack(">Q", data)
    return u - _SIGN


def encode_float64(value: float) -> bytes:
    if not isinstance(value, (int, float, np.integer, np.floating)):
        raise TypeMismatchError(f"expected float, got {type(value).__name__}")
    (bits,) = struct.unpack(">Q", struct.pack(">d", float(value)))
    if bits & _SIGN:
        bits = ~bits & _U64_MAX
    else:
        bits |= _SIGN
    return struct.pack(">Q", bits)


def decode_float64(data: bytes) -> float:
    (bits,) = struct.unpack(">Q", data)
    if bits & _SIGN:
        bits &= ~_SIGN & _U64_MAX
    else:
        bits = ~bits & _U64_MAX
    (v,) = struct.unpack(">d", struct.pack(">Q", bits))
    return v


def encode_string(value: str | bytes) -> bytes:
    if isinstance(value, str):
        raw = value.encode("utf-8")
    elif isinstance(value, (bytes, np.bytes_)):
        raw = bytes(value)
    else:
        raise TypeMismatchError(f"expected string, got {type(value).__name__}")
    return raw.replace(b"\x00", b"\x00\xff") + b"\x00\x00"


def decode_string(data: bytes) -> bytes:
    # Accepts either an exact logical encoding or a zero-padded fixed-width
    # field; trailing padding cannot be confused with content because content
    # never ends in a bare 0x00.
    out = bytearray()
    i = 0
    while i < len(data):
        b = data[i]
        if b != 0:
            out.append(b)
            i += 1
        elif i + 1 < len(data) and data[i + 1] == 0xFF:
            out.append(0)
            i += 2
        else:
            break  # terminator
    return bytes(out)


_ENCODERS = {
    INT64: encode_int64,
    DATE: encode_int64,
    FLOAT64: encode_float64,
    STRING: encode_string,
}


def encode_value(datatype: str, value) -> bytes:
    return _ENCODERS[datatype](value)


def encode_seq(seq: int) -> bytes:
    return struct.pack(">Q", seq)


def prefix_upper_bound(prefix: bytes) -> bytes | None:
    """Smallest byte string greater than every extension of `prefix`.

    None means unbounded (the prefix is empty or all 0xFF).
    """
    trimmed = prefix.rstrip(b"\xff")
    if not trimmed:
        return None
    return trimmed[:-1] + bytes([trimmed[-1] + 1])


# --------------------------------------------------------------------------
# Vectorized fixed-width codecs
# --------------------------------------------------------------------------


def _encode_int_array(col: np.ndarray) -> np.ndarray:
    u = col.astype(np.int64).view(np.uint64) + np.uint64(_SIGN)
    return u.astype(">u8").view("S8")


def _decode_int_field(field: np.ndarray) -> np.ndarray:
    u = np.frombuffer(np.ascontiguousarray(field).tobytes(), dtype=">u8")
    return (u.astype(np.uint64) ^ np.uint64(_SIGN)).view(np.int64)


def _encode_float_array(col: np.ndarray) -> np.ndarray:
    bits = col.astype(np.float64).view(np.uint64)
    neg = (bits >> np.uint64(63)) != 0
    enc = np.where(neg, ~bits, bits | np.uint64(_SIGN))
    return enc.astype(">u8").view("S8")


def _decode_float_field(field: np.ndarray) -> np.ndarray:
    bits = np.frombuffer(np.ascontiguousarray(field).tobytes(), dtype=">u8").astype(np.uint64)
    neg = (bits >> np.uint64(63)) == 0
    out = np.where(neg, ~bits, bits & np.uint64(~_SIGN & _U64_MAX))
    return out.view(np.float64)


def _encode_string_array(col: np.ndarray, width: int) -> np.ndarray:
    """Escape + terminate + zero-pad into S(width)."""
    if col.dtype.kind != "S":
        col = np.asarray(
            [v.encode("utf-8") if isinstance(v, str) else bytes(v) for v in col],
            dtype=object,
        )
        has_nul = any(b"\x00" in v for v in col)
        raw_max = max((len(v) for v in col), default=0)
    else:
        has_nul = bool(np.any(np.char.find(col, b"\x00") >= 0))
        raw_max = int(col.dtype.itemsize)
    if not has_nul:
        if raw_max > width - 2:
            raise TypeMismatchError(
                f"string of {raw_max} bytes exceeds key field width {width}"
            )
        # Zero padding supplies the 0x00 0x00 terminator.
        return np.asarray(col, dtype=f"S{width}")
    out = np.empty(len(col), dtype=f"S{width}")
    for i, v in enumerate(col):
        enc = encode_string(bytes(v))
        if len(enc) > width:
            raise TypeMismatchError(
                f"string of {len(enc)} encoded bytes exceeds key field width {width}"
            )
        out[i] = enc
    return out


def _decode_string_field(field: np.ndarray) -> np.ndarray:
    # numpy S access already strips trailing zeros (terminator + padding).
    return np.asarray([decode_string(v) for v in field.tolist()], dtype=object)


class KeyCodec:
    """Encodes clustering tuples of one layout into fixed-width composite keys.

    String key fields occupy `string_width` bytes (escaped bytes plus the
    two-byte terminator must fit); numeric fields occupy 8 bytes. The final
    8 bytes hold the big-endian sequence number.
    """

    def __init__(self, schema: Schema, layout: ReplicaLayout, string_width: int = 64):
        self.schema = schema
        self.layout = layout
        self.fields: list[tuple[str, str, int]] = []
        for name in layout.order:
            dt = schema.datatype(name)
            w = string_width if dt == STRING else 8
            self.fields.append((name, dt, w))
        self.key_width = sum(w for _, _, w in self.fields) + SEQ_BYTES
        self.struct_dtype = np.dtype(
            [(name, f"S{w}") for name, _, w in self.fields] + [("seq", ">u8")]
        )
        assert self.struct_dtype.itemsize == self.key_width

    # -- single-record path --------------------------------------------------

    def encode_key(self, values: Sequence, seq: int) -> bytes:
        """Order-preserving composite key for one clustering tuple."""
        if len(values) != len(self.fields):
            raise TypeMismatchError(
                f"expected {len(self.fields)} clustering values, got {len(values)}"
            )
        parts = []
        for (name, dt, w), v in zip(self.fields, values):
            enc = encode_value(dt, v)
            if len(enc) > w:
                raise TypeMismatchError(
                    f"value for {name!r} exceeds key field width {w}"
                )
            parts.append(enc.ljust(w, b"\x00"))
        parts.append(encode_seq(seq))
        return b"".join(parts)

    def encode_prefix(self, values: Sequence) -> bytes:
        """Encoding of the first len(values) layout fields, each padded to
        its fixed width.

        Scan bounds are built from these prefixes; padded comparison equals
        logical comparison because field encodings are prefix-free.
        """
        parts = []
        for (name, dt, w), v in zip(self.fields, values):
            enc = encode_value(dt, v)
            if len(enc) > w:
                raise TypeMismatchError(
                    f"value for {name!r} exceeds key field width {w}"
                )
            parts.append(enc.ljust(w, b"\x00"))
        return b"".join(parts)

    # -- batch path -----------------------------------------------------------

    def encode_batch(self, columns, seq_start: int) -> np.ndarray:
        """Vectorized composite keys for columnar input; seq is consecutive."""
        n = None
        rec = None
        for name, dt, w in self.fields:
            col = np.asarray(columns[name])
            if n is None:
                n = len(col)
                rec = np.zeros(n, dtype=self.struct_dtype)
            elif len(col) != n:
                raise TypeMismatchError("clustering columns have unequal lengths")
            if dt in (INT64, DATE):
                rec[name] = _encode_int_array(col)
            elif dt == FLOAT64:
                rec[name] = _encode_float_array(col)
            else:
                rec[name] = _encode_string_array(col, w)
        assert rec is not None and n is not None
        rec["seq"] = np.arange(seq_start, seq_start + n, dtype=np.uint64)
        return rec.view(f"S{self.key_width}")

    def decode_batch(self, keys: np.ndarray) -> dict[str, np.ndarray]:
        """Clustering columns (plus 'seq') from an array of composite keys."""
        rec = np.ascontiguousarray(keys).view(self.struct_dtype)
        out: dict[str, np.ndarray] = {}
        for name, dt, _ in self.fields:
            if dt in (INT64, DATE):
                out[name] = _decode_int_field(rec[name])
            elif dt == FLOAT64:
                out[name] = _decode_float_field(rec[name])
            else:
                out[name] = _decode_string_field(rec[name])
        out["seq"] = rec["seq"].astype(np.uint64)
        return out

    def field_slot(self, column: str) -> tuple[int, str, int]:
        """(position in layout, datatype, width) of a clustering column."""
        for i, (name, dt, w) in enumerate(self.fields):
            if name == column:
                return i, dt, w
        raise KeyError(column)


def encode_key(schema: Schema, layout: ReplicaLayout, values: Sequence, seq: int,
               string_width: int = 64) -> bytes:
    return KeyCodec(schema, layout, string_width).encode_key(values, seq)

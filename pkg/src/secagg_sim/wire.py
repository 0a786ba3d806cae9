"""Compact, deterministic binary encoding of protocol payloads.

Byte counts of encoded payloads are the unit of every communication metric,
so the layout is explicit: a 1-byte tag followed by fixed-width fields.
Field vectors cost ``VECTOR_HEADER + 4 * len`` bytes. A top-level ``None``
encodes to zero bytes.
"""

from __future__ import annotations

import struct
from typing import Any

import numpy as np

from .shamir import ShareArray, ShareParams

# src, dst, round, payload length
ENVELOPE_BYTES = 16
VECTOR_HEADER = 5

_NONE, _FALSE, _TRUE, _INT, _BIGINT, _BYTES, _STR, _VEC, _SHARE, _LIST, _TUPLE, _DICT = range(12)

_I64 = struct.Struct("<q")
_U32 = struct.Struct("<I")
_SHARE_HDR = struct.Struct("<IIIIIB I")  # point, n, t, pack_k, q, packed, secret_len


def encode(obj: Any) -> bytes:
    if obj is None:
        return b""
    out = bytearray()
    _enc(obj, out)
    return bytes(out)


def decode(data: bytes) -> Any:
    if not data:
        return None
    obj, pos = _dec(memoryview(data), 0)
    if pos != len(data):
        raise ValueError(f"trailing bytes after payload ({len(data) - pos})")
    return obj


def _enc_bytes(obj, out: bytearray):
    out.append(_BYTES)
    out += _U32.pack(len(obj))
    out += obj


def _enc_int(obj, out: bytearray):
    v = int(obj)
    if -(2**63) <= v < 2**63:
        out.append(_INT)
        out += _I64.pack(v)
    else:
        raw = v.to_bytes((v.bit_length() + 8) // 8, "little", signed=True)
        out.append(_BIGINT)
        out += _U32.pack(len(raw)) + raw


def _enc_bool(obj, out: bytearray):
    out.append(_TRUE if obj else _FALSE)


def _enc_none(obj, out: bytearray):
    out.append(_NONE)


def _enc_str(obj, out: bytearray):
    raw = obj.encode()
    out.append(_STR)
    out += _U32.pack(len(raw)) + raw


def _enc_vec(obj, out: bytearray):
    if obj.ndim != 1:
        raise TypeError("only 1-D field vectors are encodable")
    out.append(_VEC)
    out += _U32.pack(len(obj))
    out += obj.astype("<u4").tobytes()


def _enc_share(obj, out: bytearray):
    p = obj.params
    out.append(_SHARE)
    out += _SHARE_HDR.pack(obj.owner_point, p.n, p.t, p.pack_k, p.q, int(p.packed), p.secret_len or 0)
    _enc_vec(obj.values, out)


def _enc_seq(obj, out: bytearray):
    out.append(_LIST if isinstance(obj, list) else _TUPLE)
    out += _U32.pack(len(obj))
    for item in obj:
        _enc(item, out)


def _enc_dict(obj, out: bytearray):
    out.append(_DICT)
    out += _U32.pack(len(obj))
    for key, value in obj.items():
        _enc(key, out)
        _enc(value, out)


_ENCODERS = {
    type(None): _enc_none,
    bool: _enc_bool,
    int: _enc_int,
    bytes: _enc_bytes,
    bytearray: _enc_bytes,
    str: _enc_str,
    np.ndarray: _enc_vec,
    ShareArray: _enc_share,
    list: _enc_seq,
    tuple: _enc_seq,
    dict: _enc_dict,
}


def _enc(obj: Any, out: bytearray):
    fn = _ENCODERS.get(type(obj))
    if fn is None:
        if isinstance(obj, (bool, np.bool_)):
            fn = _enc_bool
        elif isinstance(obj, (int, np.integer)):
            fn = _enc_int
        elif isinstance(obj, memoryview):
            fn = _enc_bytes
        elif isinstance(obj, (list, tuple)):
            fn = _enc_seq
        elif isinstance(obj, dict):
            fn = _enc_dict
        else:
            raise TypeError(f"cannot encode {type(obj).__name__}")
    fn(obj, out)


def _dec(buf: memoryview, pos: int) -> tuple[Any, int]:
    tag = buf[pos]
    pos += 1
    if tag == _BYTES:
        (size,) = _U32.unpack_from(buf, pos)
        pos += 4
        return bytes(buf[pos : pos + size]), pos + size
    if tag == _INT:
        return _I64.unpack_from(buf, pos)[0], pos + 8
    if tag == _NONE:
        return None, pos
    if tag in (_FALSE, _TRUE):
        return tag == _TRUE, pos
    if tag == _INT:
        return _I64.unpack_from(buf, pos)[0], pos + 8
    if tag in (_BIGINT, _BYTES, _STR):
        (size,) = _U32.unpack_from(buf, pos)
        pos += 4
        raw = bytes(buf[pos : pos + size])
        pos += size
        if tag == _BIGINT:
            return int.from_bytes(raw, "little", signed=True), pos
        return (raw.decode() if tag == _STR else raw), pos
    if tag == _VEC:
        (size,) = _U32.unpack_from(buf, pos)
        pos += 4
        vec = np.frombuffer(buf, dtype="<u4", count=size, offset=pos).astype(np.uint64)
        return vec, pos + 4 * size
    if tag == _SHARE:
        point, n, t, k, q, packed, secret_len = _SHARE_HDR.unpack_from(buf, pos)
        pos += _SHARE_HDR.size
        values, pos = _dec(buf, pos)
        params = ShareParams(n, t, k, q, bool(packed), secret_len or None)
        return ShareArray(point, values, params), pos
    if tag in (_LIST, _TUPLE):
        (size,) = _U32.unpack_from(buf, pos)
        pos += 4
        items = []
        for _ in range(size):
            item, pos = _dec(buf, pos)
            items.append(item)
        return (items if tag == _LIST else tuple(items)), pos
    if tag == _DICT:
        (size,) = _U32.unpack_from(buf, pos)
        pos += 4
        result = {}
        for _ in range(size):
            key, pos = _dec(buf, pos)
            result[key], pos = _dec(buf, pos)
        return result, pos
    raise ValueError(f"unknown tag {tag} at offset {pos - 1}")

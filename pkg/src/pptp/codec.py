"""Canonical byte layout for names, tag items and path tags.

Every field is written in a fixed order. Integers are fixed-width big-endian,
variable-length fields carry a length prefix, and each top-level record
starts with a one-byte kind marker::

    Name       u16 count, then per component: u16 len | bytes
    TagItem    0x01 | u16 len | advertiser utf-8 | u32 face | u64 price
               | u64 not_before | u64 not_after | u64 adv_bandwidth
               | u64 adv_latency                          (signed core)
               | u16 len | signature                      (full item)
    PathTag    0x02 | u16 count | per item, bottom first: u32 len | full item

Commitment transactions use kind 0x03 and are encoded in :mod:`pptp.payments`.
"""

from __future__ import annotations

import struct

from .model import Name, PathTag, PerfMetric, TagItem, Window

KIND_TAG_ITEM = 0x01
KIND_PATH_TAG = 0x02
KIND_COMMITMENT = 0x03


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def u8(self, v):
        self._parts.append(struct.pack(">B", v))
        return self

    def u16(self, v):
        self._parts.append(struct.pack(">H", v))
        return self

    def u32(self, v):
        self._parts.append(struct.pack(">I", v))
        return self

    def u64(self, v):
        self._parts.append(struct.pack(">Q", v))
        return self

    def blob16(self, b: bytes):
        if len(b) > 0xFFFF:
            raise ValueError("field longer than 65535 bytes")
        return self.u16(len(b)).raw(b)

    def blob32(self, b: bytes):
        return self.u32(len(b)).raw(b)

    def text(self, s: str):
        return self.blob16(s.encode("utf-8"))

    def raw(self, b: bytes):
        self._parts.append(bytes(b))
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes):
        self._data = memoryview(bytes(data))
        self._pos = 0

    def _take(self, n):
        if self._pos + n > len(self._data):
            raise ValueError("truncated encoding")
        chunk = self._data[self._pos:self._pos + n]
        self._pos += n
        return bytes(chunk)

    def u8(self):
        return self._take(1)[0]

    def u16(self):
        return struct.unpack(">H", self._take(2))[0]

    def u32(self):
        return struct.unpack(">I", self._take(4))[0]

    def u64(self):
        return struct.unpack(">Q", self._take(8))[0]

    def blob16(self):
        return self._take(self.u16())

    def blob32(self):
        return self._take(self.u32())

    def text(self):
        return self.blob16().decode("utf-8")

    def expect(self, kind):
        got = self.u8()
        if got != kind:
            raise ValueError(f"expected record kind {kind:#04x}, got {got:#04x}")

    def done(self):
        if self._pos != len(self._data):
            raise ValueError(f"{len(self._data) - self._pos} trailing bytes")


def encode_name(name: Name) -> bytes:
    w = Writer().u16(len(name.components))
    for c in name.components:
        w.blob16(c)
    return w.getvalue()


def decode_name(data: bytes) -> Name:
    r = Reader(data)
    comps = tuple(r.blob16() for _ in range(r.u16()))
    r.done()
    return Name(comps)


def _write_core(w: Writer, item: TagItem):
    (w.u8(KIND_TAG_ITEM).text(item.advertiser).u32(item.face).u64(item.price)
     .u64(item.window.not_before).u64(item.window.not_after)
     .u64(item.metric.adv_bandwidth).u64(item.metric.adv_latency))


def encode_item_core(item: TagItem) -> bytes:
    """Bytes covered by the item signature (everything except the signature)."""
    w = Writer()
    _write_core(w, item)
    return w.getvalue()


def encode_item(item: TagItem) -> bytes:
    w = Writer()
    _write_core(w, item)
    w.blob16(item.signature)
    return w.getvalue()


def _read_item(r: Reader) -> TagItem:
    r.expect(KIND_TAG_ITEM)
    advertiser = r.text()
    face = r.u32()
    price = r.u64()
    window = Window(r.u64(), r.u64())
    metric = PerfMetric(r.u64(), r.u64())
    signature = r.blob16()
    return TagItem(advertiser, face, price, window, metric, signature)


def decode_item(data: bytes) -> TagItem:
    r = Reader(data)
    item = _read_item(r)
    r.done()
    return item


def encode_tag(tag: PathTag) -> bytes:
    w = Writer().u8(KIND_PATH_TAG).u16(len(tag.items))
    for item in tag.items:
        w.blob32(encode_item(item))
    return w.getvalue()


def decode_tag(data: bytes) -> PathTag:
    r = Reader(data)
    r.expect(KIND_PATH_TAG)
    items = tuple(decode_item(r.blob32()) for _ in range(r.u16()))
    r.done()
    return PathTag(items)

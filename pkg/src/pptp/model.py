"""Value types shared by the forwarding plane, the consumer and the ledger."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from .errors import TokenOverflow

#: Largest amount representable in the 64-bit wire encoding.
MAX_TOKENS = 2**64 - 1
#: Largest tick value a window bound may take.
MAX_TICK = 2**64 - 1


def check_tokens(amount: int) -> int:
    if not isinstance(amount, int) or isinstance(amount, bool):
        raise TypeError(f"token amounts are integers, got {amount!r}")
    if amount < 0:
        raise ValueError(f"token amount must be non-negative, got {amount}")
    if amount > MAX_TOKENS:
        raise TokenOverflow(f"{amount} exceeds the 64-bit token range")
    return amount


def add_tokens(*amounts: int) -> int:
    """Exact sum of token amounts; raises :class:`TokenOverflow` past 2**64-1."""
    return check_tokens(sum(check_tokens(a) for a in amounts))


def sub_tokens(a: int, b: int) -> int:
    if b > a:
        raise ValueError(f"cannot take {b}u out of {a}u")
    return a - b


@dataclass(frozen=True, order=True)
class Name:
    """Hierarchical content name, e.g. ``/video/movie1/7``."""

    components: tuple[bytes, ...]

    def __post_init__(self):
        comps = tuple(bytes(c) for c in self.components)
        if not comps:
            raise ValueError("a name needs at least one component")
        if any(len(c) == 0 for c in comps):
            raise ValueError("name components must be non-empty")
        object.__setattr__(self, "components", comps)

    @classmethod
    def parse(cls, uri: str) -> "Name":
        parts = [p for p in uri.strip().split("/") if p]
        return cls(tuple(p.encode() for p in parts))

    def is_prefix_of(self, other: "Name") -> bool:
        n = len(self.components)
        return n <= len(other.components) and other.components[:n] == self.components

    def append(self, component) -> "Name":
        if isinstance(component, int):
            component = str(component)
        if isinstance(component, str):
            component = component.encode()
        return Name(self.components + (component,))

    def __len__(self):
        return len(self.components)

    def __str__(self):
        return "/" + "/".join(c.decode(errors="backslashreplace") for c in self.components)


@dataclass(frozen=True)
class Window:
    """Closed tick interval during which an advertised price is binding."""

    not_before: int
    not_after: int

    def __post_init__(self):
        if not 0 <= self.not_before <= self.not_after <= MAX_TICK:
            raise ValueError(f"bad window [{self.not_before}, {self.not_after}]")

    def contains(self, tick: int) -> bool:
        return self.not_before <= tick <= self.not_after

    def overlaps(self, other: "Window") -> bool:
        return max(self.not_before, other.not_before) <= min(self.not_after, other.not_after)

    def __str__(self):
        return f"{self.not_before}:{self.not_after}"


@dataclass(frozen=True)
class PerfMetric:
    """Advertised per-hop performance: packets per tick and one-hop delay in ticks."""

    adv_bandwidth: int = 0
    adv_latency: int = 0

    def __post_init__(self):
        if self.adv_bandwidth < 0 or self.adv_latency < 0:
            raise ValueError("performance metrics are non-negative")


@dataclass(frozen=True)
class TagItem:
    """One signed hop record in a path tag.

    ``face`` is the advertiser's receiving interface for the probe Data, i.e.
    the face a directed Interest must leave through.
    """

    advertiser: str
    face: int
    price: int
    window: Window
    metric: PerfMetric = PerfMetric()
    signature: bytes = b""

    def __post_init__(self):
        check_tokens(self.price)
        if not 0 <= self.face < 2**32:
            raise ValueError(f"face id out of range: {self.face}")

    def core(self) -> bytes:
        from .codec import encode_item_core

        return encode_item_core(self)

    def with_price(self, price: int) -> "TagItem":
        return replace(self, price=price)


@dataclass(frozen=True)
class PathTag:
    """Stack of :class:`TagItem`. The last element of ``items`` is the top.

    Items are pushed while probe Data travels producer to consumer, so popping
    a returned tag yields hops in consumer to producer order.
    """

    items: tuple[TagItem, ...] = ()

    def push(self, item: TagItem) -> "PathTag":
        return PathTag(self.items + (item,))

    def pop(self) -> tuple[TagItem, "PathTag"]:
        if not self.items:
            raise IndexError("pop from empty path tag")
        return self.items[-1], PathTag(self.items[:-1])

    @property
    def top(self) -> Optional[TagItem]:
        return self.items[-1] if self.items else None

    def hops(self) -> list[TagItem]:
        """Items in pop order (first hop after the consumer first)."""
        return list(reversed(self.items))

    @classmethod
    def from_hops(cls, hops) -> "PathTag":
        return cls(tuple(reversed(tuple(hops))))

    def __len__(self):
        return len(self.items)


class PacketKind(enum.Enum):
    INTEREST = "interest"
    DATA = "data"


@dataclass(frozen=True)
class Packet:
    kind: PacketKind
    name: Name
    nonce: int
    probe: bool = False
    tag: Optional[PathTag] = None
    envelope: Optional[object] = None
    payload_size: int = 0

    def __post_init__(self):
        if not 0 <= self.nonce < 2**64:
            raise ValueError("nonce must fit in 64 bits")
        if self.kind is PacketKind.INTEREST:
            if self.probe and (self.tag is not None or self.envelope is not None):
                raise ValueError("probe Interests carry neither tag nor envelope")
        elif self.envelope is not None:
            raise ValueError("only Interests carry payment envelopes")

    @property
    def is_interest(self):
        return self.kind is PacketKind.INTEREST

    @property
    def key(self) -> tuple[Name, int]:
        return (self.name, self.nonce)


def probe_interest(name: Name, nonce: int) -> Packet:
    return Packet(PacketKind.INTEREST, name, nonce, probe=True)


"""NDN-style forwarding with path tags.

Probe Interests are spread over FIB faces round-robin and carry nothing.
The producer answers with a one-item tag; every router on the way back pushes
its own signed, priced item naming the face the Data arrived on. Content
Interests carry that tag back: each router pops the top item, checks it is
its own, takes its fee out of the attached cheque and sends the Interest out
of the recorded face.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    NoPitEntry,
    NoRoute,
    PitDuplicate,
    TagMismatch,
    UnderfundedEnvelope,
)
from .model import Name, Packet, PacketKind, PathTag
from .payments import ChannelBook, PaymentEnvelope, accept_payment, split_and_forward, transferred
from .pricing import PriceSchedule
from .signing import Identity

DEFAULT_PIT_LIFETIME = 100
DEFAULT_PAYLOAD_SIZE = 1024


class Role(enum.Enum):
    CONSUMER = "consumer"
    ROUTER = "router"
    PRODUCER = "producer"


@dataclass
class FibEntry:
    prefix: Name
    faces: list[int]
    rr_counter: int = 0

    def __post_init__(self):
        if not self.faces:
            raise ValueError(f"FIB entry for {self.prefix} has no faces")


@dataclass(frozen=True)
class PitEntry:
    key: tuple[Name, int]
    in_face: Optional[int]
    created: int
    expiry: int


@dataclass(frozen=True)
class ForwardAction:
    """Send ``packet`` out of ``face``; ``face is None`` means hand it to the local app."""

    face: Optional[int]
    packet: Packet


class Node:
    """Forwarding state of one node plus its payment bookkeeping.

    ``received``/``paid`` count tokens moved through channels; ``kept`` is the
    sum of fees retained by cheque splitting and ``stranded`` the cheque value
    accepted for Interests that were never forwarded. For every node
    ``received - paid == kept + stranded``.
    """

    def __init__(self, identity: Identity, role: Role, faces: dict[int, str],
                 pricing: Optional[PriceSchedule] = None,
                 channels: Optional[ChannelBook] = None,
                 prefixes=(), pit_lifetime: int = DEFAULT_PIT_LIFETIME):
        self.identity = identity
        self.role = role
        self.faces = dict(faces)
        self.pricing = pricing
        self.channels = channels if channels is not None else ChannelBook()
        self.prefixes = [p if isinstance(p, Name) else Name.parse(p) for p in prefixes]
        self.pit_lifetime = pit_lifetime
        self.fib: list[FibEntry] = []
        self.pit: dict[tuple[Name, int], PitEntry] = {}
        self.received = 0
        self.paid = 0
        self.kept = 0
        self.stranded = 0
        if role is Role.PRODUCER and not self.prefixes:
            raise ValueError(f"producer {identity.node_id} owns no prefix")

    @property
    def id(self) -> str:
        return self.identity.node_id

    @property
    def revenue(self) -> int:
        return self.received - self.paid

    def face_to(self, neighbor: str) -> int:
        for face, peer in self.faces.items():
            if peer == neighbor:
                return face
        raise KeyError(f"{self.id} has no face to {neighbor}")

    def add_route(self, prefix: Name, faces) -> FibEntry:
        for e in self.fib:
            if e.prefix == prefix:
                e.faces.extend(f for f in faces if f not in e.faces)
                return e
        entry = FibEntry(prefix, list(faces))
        self.fib.append(entry)
        return entry

    def lookup(self, name: Name) -> FibEntry:
        best = None
        for e in self.fib:
            if e.prefix.is_prefix_of(name) and (best is None or len(e.prefix) > len(best.prefix)):
                best = e
        if best is None:
            raise NoRoute(f"{self.id} has no route for {name}")
        return best

    def owns(self, name: Name) -> bool:
        return any(p.is_prefix_of(name) for p in self.prefixes)

    def originate(self, pkt: Packet, now: int) -> None:
        """Record a locally generated Interest so its Data is delivered to the app."""
        self._pit_insert(pkt, None, now)

    def accept_cheque(self, envelope: PaymentEnvelope, payer: str) -> int:
        """Countersign the commitment handed over by ``payer``; returns the amount received."""
        ch = self.channels.between(payer, self.id)
        amount = transferred(ch, envelope.commitment, self.id)
        accept_payment(ch, envelope.commitment, self.identity)
        self.received += amount
        return amount

    def expire(self, now: int) -> list[PitEntry]:
        gone = [e for e in self.pit.values() if e.expiry <= now]
        for e in gone:
            del self.pit[e.key]
        return gone

    def _pit_insert(self, pkt: Packet, in_face: Optional[int], now: int) -> None:
        if pkt.key in self.pit:
            raise PitDuplicate(f"{self.id} already has {pkt.name} nonce {pkt.nonce:#x} pending")
        self.pit[pkt.key] = PitEntry(pkt.key, in_face, now, now + self.pit_lifetime)

    def _own_item(self, tag: Optional[PathTag]):
        if tag is None or len(tag) == 0:
            raise TagMismatch(f"{self.id} got a directed Interest with an empty tag")
        item, rest = tag.pop()
        if item.advertiser != self.id:
            raise TagMismatch(f"{self.id} popped an item advertised by {item.advertiser}")
        if item.face not in self.faces:
            raise TagMismatch(f"{self.id} has no face {item.face}")
        if self.pricing is None or not self.pricing.issued(item):
            raise TagMismatch(f"{self.id} never issued the popped item")
        return item, rest

    def __repr__(self):
        return f"Node({self.id!r}, {self.role.value})"


def probe_next_face(node: Node, name: Name, in_face: Optional[int] = None) -> int:
    """Round-robin face choice for a probe, never bouncing it back where it came from."""
    entry = node.lookup(name)
    n = len(entry.faces)
    for _ in range(n):
        face = entry.faces[entry.rr_counter % n]
        entry.rr_counter += 1
        if face != in_face:
            return face
    raise NoRoute(f"{node.id}: the only route for {name} is the arrival face")


def on_interest(node: Node, in_face: int, pkt: Packet, now: int) -> ForwardAction:
    if not pkt.is_interest:
        raise ValueError("on_interest called with a Data packet")
    if node.role is Role.CONSUMER:
        raise NoRoute(f"consumer {node.id} does not transit Interests")
    if node.role is Role.PRODUCER:
        return ForwardAction(in_face, produce_data(node, pkt, now, in_face))

    if pkt.probe:
        if pkt.key in node.pit:
            raise PitDuplicate(f"{node.id} already forwarded probe {pkt.nonce:#x}")
        out = probe_next_face(node, pkt.name, in_face)
        node._pit_insert(pkt, in_face, now)
        return ForwardAction(out, pkt)

    item, rest = node._own_item(pkt.tag)
    if pkt.key in node.pit:
        raise PitDuplicate(f"{node.id} already has {pkt.name} pending")
    envelope = pkt.envelope
    if envelope is None:
        raise UnderfundedEnvelope(f"{node.id} got a directed Interest without a cheque")
    next_hop = node.faces[item.face]
    kept, out_env = split_and_forward(node.identity, envelope, item.price,
                                      node.channels.between(node.id, next_hop))
    node.kept += kept
    node._pit_insert(pkt, in_face, now)
    return ForwardAction(item.face, replace(pkt, tag=rest, envelope=out_env))


def on_data(node: Node, in_face: int, pkt: Packet, now: int) -> ForwardAction:
    if pkt.is_interest:
        raise ValueError("on_data called with an Interest")
    entry = node.pit.pop(pkt.key, None)
    if entry is None:
        raise NoPitEntry(f"{node.id}: unsolicited Data {pkt.name}")
    if entry.in_face is None:
        return ForwardAction(None, pkt)
    if pkt.probe and node.role is Role.ROUTER:
        item = node.pricing.advertise(in_face, now)
        pkt = replace(pkt, tag=(pkt.tag or PathTag()).push(item))
    return ForwardAction(entry.in_face, pkt)


def produce_data(producer: Node, interest: Packet, now: int,
                 in_face: Optional[int] = None) -> Packet:
    """Answer an Interest at its producer.

    A probe gets a tag holding the producer's own priced item for the arrival
    face. A content Interest must carry the producer's item as its last tag
    entry; the producer keeps the whole remaining cheque.
    """
    if not producer.owns(interest.name):
        raise NoRoute(f"{producer.id} does not own {interest.name}")
    if interest.probe:
        if in_face is None:
            in_face = next(iter(producer.faces))
        item = producer.pricing.advertise(in_face, now)
        return Packet(PacketKind.DATA, interest.name, interest.nonce, probe=True,
                      tag=PathTag((item,)))
    item, rest = producer._own_item(interest.tag)
    if len(rest):
        raise TagMismatch(f"{producer.id}: {len(rest)} tag items left past the producer")
    if interest.envelope is None:
        raise UnderfundedEnvelope(f"{producer.id} got a content Interest without a cheque")
    kept, _ = split_and_forward(producer.identity, interest.envelope, item.price)
    producer.kept += kept
    return Packet(PacketKind.DATA, interest.name, interest.nonce,
                  payload_size=DEFAULT_PAYLOAD_SIZE)

"""Router-side price schedules and the equivocation predicate.

A router advertises a price per face together with a validity window. Within
that window the price must not change; two validly signed items for the same
(advertiser, face) with overlapping windows and different prices are proof of
equivocation and can be submitted to the ledger.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .codec import encode_item
from .errors import (
    EquivocationRefused,
    FaultInjectionDisabled,
    NoActivePrice,
    UnregisteredIdentity,
)
from .model import PerfMetric, TagItem, Window, check_tokens
from .signing import Identity, KeyRegistry, signed, verify_item


@dataclass(frozen=True)
class PriceEntry:
    face: int
    price: int
    window: Window
    metric: PerfMetric = PerfMetric()


def _conflicts(face, price, window, other_face, other_price, other_window) -> bool:
    return face == other_face and price != other_price and window.overlaps(other_window)


class PriceSchedule:
    """Per-face prices of one node plus its append-only advertisement log.

    ``metric_for`` supplies the performance metric advertised for a face when
    an entry does not carry its own.
    """

    def __init__(self, identity: Identity,
                 metric_for: Optional[Callable[[int], PerfMetric]] = None,
                 fault_injection: bool = False):
        self.identity = identity
        self.entries: list[PriceEntry] = []
        self.injected: list[PriceEntry] = []
        self.log: list[TagItem] = []
        self.fault_injection = fault_injection
        self._metric_for = metric_for
        self._issued: set[bytes] = set()
        self._cache: dict[PriceEntry, TagItem] = {}

    @property
    def node_id(self) -> str:
        return self.identity.node_id

    def set_price(self, face: int, price: int, window: Window,
                  metric: Optional[PerfMetric] = None) -> PriceEntry:
        check_tokens(price)
        for e in self.entries + self.injected:
            if _conflicts(face, price, window, e.face, e.price, e.window):
                raise EquivocationRefused(
                    f"{self.node_id} face {face}: {price}u on [{window}] conflicts with "
                    f"{e.price}u on [{e.window}]")
        for item in self.log:
            if _conflicts(face, price, window, item.face, item.price, item.window):
                raise EquivocationRefused(
                    f"{self.node_id} face {face}: conflicts with an issued advertisement")
        if metric is None:
            metric = self._metric_for(face) if self._metric_for else PerfMetric()
        entry = PriceEntry(face, price, window, metric)
        self.entries.append(entry)
        return entry

    def active_entry(self, face: int, now: int) -> PriceEntry:
        # injected entries shadow honest ones: a faulty router keeps quoting the new price
        for e in reversed(self.injected):
            if e.face == face and e.window.contains(now):
                return e
        for e in self.entries:
            if e.face == face and e.window.contains(now):
                return e
        raise NoActivePrice(f"{self.node_id} has no price for face {face} at tick {now}")

    def advertise(self, face: int, now: int) -> TagItem:
        """Signed tag item for ``face`` under the entry valid at ``now``."""
        return self._issue(self.active_entry(face, now))

    def equivocate_for_test(self, face: int, price: int, window: Window,
                            metric: Optional[PerfMetric] = None) -> TagItem:
        """Emit a signed item that skips the conflict check (fault injection only)."""
        if not self.fault_injection:
            raise FaultInjectionDisabled("equivocation requires fault-injection mode")
        if metric is None:
            metric = self._metric_for(face) if self._metric_for else PerfMetric()
        entry = PriceEntry(face, check_tokens(price), window, metric)
        self.injected.append(entry)
        return self._issue(entry)

    def issued(self, item: TagItem) -> bool:
        """True if this node signed and emitted exactly ``item``."""
        return encode_item(item) in self._issued

    def _issue(self, entry: PriceEntry) -> TagItem:
        item = self._cache.get(entry)
        if item is None:
            core = TagItem(self.node_id, entry.face, entry.price, entry.window, entry.metric)
            item = signed(core, self.identity)
            self._cache[entry] = item
            self._issued.add(encode_item(item))
        self.log.append(item)
        return item


def detect_conflict(a: TagItem, b: TagItem, registry: KeyRegistry) -> bool:
    """Equivocation predicate: both items verify, same hop, overlapping windows, different prices."""
    if a.advertiser != b.advertiser or a.face != b.face:
        return False
    if a.price == b.price or not a.window.overlaps(b.window):
        return False
    try:
        return verify_item(a, registry) and verify_item(b, registry)
    except UnregisteredIdentity:
        return False

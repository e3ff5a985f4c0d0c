"""Consumer side: probing, path registration, utility and path selection.

Utility of a path follows ``U = ln(V / c)`` where ``V`` is the QoE a path
delivers and ``c`` the per-packet price of the path. Paths are arms of an
epsilon-greedy bandit whose exploration rate decays as ``eps0 / (1 + t/tau)``.
Arms that were never measured are ranked by the utility predicted from the
routers' advertised metrics.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

from .codec import Writer
from .errors import BadSignature, NoSamples, StalePrice, UnknownArm
from .model import Name, Packet, PacketKind, PathTag, TagItem, add_tokens, probe_interest
from .payments import ChannelBook, PaymentEnvelope, make_payment
from .pricing import detect_conflict
from .signing import Identity, KeyRegistry, verify_item

DELAY = "delay"
THROUGHPUT = "throughput"
NEG_INF = float("-inf")


@dataclass(frozen=True)
class UtilityModel:
    """QoE model parameters.

    ``threshold`` is the delay budget in ticks (100 ticks = 100 ms at the
    default tick length); ``eps_floor`` replaces a zero path cost.
    """

    kind: str = DELAY
    alpha: float = 1.0
    beta: float = 100.0
    eps_floor: float = 1.0
    threshold: int = 100

    def __post_init__(self):
        if self.kind not in (DELAY, THROUGHPUT):
            raise ValueError(f"unknown utility model {self.kind!r}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.kind == DELAY and not (self.alpha > 0 or self.beta > 0):
            raise ValueError("the delay model needs alpha or beta positive")
        if self.eps_floor <= 0:
            raise ValueError("eps_floor must be positive")


@dataclass
class PricedPath:
    path_id: str
    items: tuple[TagItem, ...]
    total_cost: int
    predicted_v: float
    discovered_at: int
    first_face: Optional[int] = None

    @property
    def nodes(self) -> list[str]:
        return [it.advertiser for it in self.items]

    def tag(self) -> PathTag:
        return PathTag.from_hops(self.items)

    def expires_at(self) -> int:
        return min(it.window.not_after for it in self.items)


@dataclass
class PathStats:
    sent: int = 0
    delivered: int = 0
    within_threshold: int = 0
    latency_sum: int = 0
    cost_spent: int = 0
    ewma_u: Optional[float] = None
    pulls: int = 0
    prior_u: float = NEG_INF

    def record_delivery(self, latency: int, threshold: int) -> None:
        self.delivered += 1
        self.latency_sum += latency
        if latency <= threshold:
            self.within_threshold += 1

    @property
    def mean_latency(self) -> Optional[float]:
        return self.latency_sum / self.delivered if self.delivered else None


@dataclass
class BanditState:
    arms: dict[str, PathStats] = field(default_factory=dict)
    eps0: float = 0.2
    tau: float = 200.0
    t: int = 0

    def __post_init__(self):
        if not 0 < self.eps0 <= 1:
            raise ValueError("eps0 must lie in (0, 1]")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    @property
    def epsilon(self) -> float:
        return self.eps0 / (1.0 + self.t / self.tau)

    def score(self, path_id: str) -> float:
        arm = self.arms[path_id]
        return arm.ewma_u if arm.pulls > 0 else arm.prior_u


def path_id_of(items) -> str:
    w = Writer().u16(len(items))
    for it in items:
        w.text(it.advertiser).u32(it.face)
    return hashlib.sha256(w.getvalue()).hexdigest()[:16]


def path_cost(items) -> int:
    if not items:
        raise ValueError("a path has at least one priced hop")
    return add_tokens(*(it.price for it in items))


def predict_v(items, model: UtilityModel) -> float:
    if model.kind == THROUGHPUT:
        return float(min(it.metric.adv_bandwidth for it in items))
    total = sum(it.metric.adv_latency for it in items)
    on_time = 1.0 if total <= model.threshold else 0.0
    return model.alpha * on_time + model.beta / max(total, 1)


def measured_v(stats: PathStats, model: UtilityModel, window: int = 1) -> float:
    """QoE realised over one reporting window of ``window`` ticks."""
    if stats.delivered <= 0:
        raise NoSamples("no packet delivered in this window")
    if model.kind == THROUGHPUT:
        return stats.delivered / window
    mean_latency = max(stats.latency_sum / stats.delivered, 1.0)
    return model.alpha * stats.within_threshold / stats.delivered + model.beta / mean_latency


def utility(v: float, cost: float, eps_floor: float = 1.0) -> float:
    if v < 0:
        raise ValueError(f"QoE must be non-negative, got {v}")
    if v == 0:
        return NEG_INF
    return math.log(v / max(cost, eps_floor))


def select_path(bandit: BanditState, rng) -> str:
    """Pick an arm: uniform with probability ``epsilon``, else the best score.

    Exactly one uniform draw is consumed per call (two when exploring) so
    runs stay reproducible under a fixed seed.
    """
    if not bandit.arms:
        raise ValueError("no arms to select from")
    ids = sorted(bandit.arms)
    explore = rng.random() < bandit.epsilon
    if explore:
        choice = ids[int(rng.integers(len(ids)))]
    else:
        choice = ids[0]
        best = bandit.score(choice)
        for pid in ids[1:]:
            s = bandit.score(pid)
            if s > best:
                choice, best = pid, s
    bandit.t += 1
    return choice


def update_estimate(bandit: BanditState, path_id: str, u_observed: float,
                    gamma: float = 0.3) -> None:
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    try:
        arm = bandit.arms[path_id]
    except KeyError:
        raise UnknownArm(path_id) from None
    if arm.ewma_u is None or arm.pulls == 0:
        arm.ewma_u = u_observed
    else:
        arm.ewma_u = gamma * u_observed + (1 - gamma) * arm.ewma_u
    arm.pulls += 1


class Watcher:
    """Remembers every verified advertisement seen and spots equivocation."""

    def __init__(self, registry: KeyRegistry):
        self.registry = registry
        self.seen: dict[tuple[str, int], list[TagItem]] = {}

    def observe(self, item: TagItem) -> list[tuple[TagItem, TagItem]]:
        """Record ``item``; return conflicting (earlier, new) pairs it forms."""
        known = self.seen.setdefault((item.advertiser, item.face), [])
        if item in known:
            return []
        pairs = [(old, item) for old in known if detect_conflict(old, item, self.registry)]
        known.append(item)
        return pairs


class Consumer:
    """State of one consuming node: its discovered paths and bandit."""

    def __init__(self, identity: Identity, registry: KeyRegistry,
                 model: UtilityModel = UtilityModel(), neighbors: Optional[dict[str, int]] = None,
                 eps0: float = 0.2, tau: float = 200.0, gamma: float = 0.3, label: str = ""):
        self.identity = identity
        self.label = label
        self.registry = registry
        self.model = model
        self.neighbors = dict(neighbors or {})
        self.bandit = BanditState(eps0=eps0, tau=tau)
        self.gamma = gamma
        self.paths: dict[str, PricedPath] = {}
        self.watcher = Watcher(registry)
        self._nonces = 0

    @property
    def id(self) -> str:
        return self.identity.node_id

    def next_nonce(self) -> int:
        self._nonces += 1
        digest = hashlib.sha256(f"{self.id}|{self.label}|{self._nonces}".encode()).digest()
        return int.from_bytes(digest[:8], "big")

    def drop_expired(self, now: int) -> list[str]:
        gone = [pid for pid, p in self.paths.items() if p.expires_at() < now]
        for pid in gone:
            del self.paths[pid]
            del self.bandit.arms[pid]
        return gone


def launch_probes(consumer: Consumer, name: Name, count: int) -> list[Packet]:
    if count < 1:
        raise ValueError("launch at least one probe")
    return [probe_interest(name, consumer.next_nonce()) for _ in range(count)]


def register_path(consumer: Consumer, probe_data: Packet, now: int) -> PricedPath:
    """Turn a returned probe tag into a priced, verified path.

    Raises ``BadSignature`` or ``StalePrice`` carrying the offending hop index.
    A tag that repeats a known hop sequence refreshes the existing path.
    """
    if probe_data.tag is None or len(probe_data.tag) == 0:
        raise ValueError("probe Data carries no tag")
    items = tuple(probe_data.tag.hops())
    for i, it in enumerate(items):
        if not verify_item(it, consumer.registry):
            raise BadSignature(f"hop {i} ({it.advertiser}) has a bad signature", index=i)
    for i, it in enumerate(items):
        if not it.window.contains(now):
            raise StalePrice(i, now)
    pid = path_id_of(items)
    cost = path_cost(items)
    v = predict_v(items, consumer.model)
    first_face = consumer.neighbors.get(items[0].advertiser)
    path = PricedPath(pid, items, cost, v, now, first_face)
    consumer.paths[pid] = path
    arm = consumer.bandit.arms.setdefault(pid, PathStats())
    arm.prior_u = utility(v, cost, consumer.model.eps_floor)
    return path


def build_content_interest(path: PricedPath, name: Name, seq: int, channels: ChannelBook,
                           payer: Identity, nonce: Optional[int] = None) -> Packet:
    """Directed Interest for ``name/seq`` paying ``path.total_cost`` to the first hop."""
    first_hop = path.items[0].advertiser
    channel = channels.between(payer.node_id, first_hop)
    tx = make_payment(channel, payer, path.total_cost)
    content = name.append(seq)
    if nonce is None:
        digest = hashlib.sha256(payer.node_id.encode() + b"/" + str(content).encode()).digest()
        nonce = int.from_bytes(digest[:8], "big")
    return Packet(PacketKind.INTEREST, content, nonce, tag=path.tag(),
                  envelope=PaymentEnvelope(path.total_cost, tx))

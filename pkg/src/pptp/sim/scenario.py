"""Line-oriented scenario files.

One directive per line, ``#`` starts a comment::

    node <id> role=<consumer|router|producer> [balance=<u>] [deposit=<u>]
    link <a> <b> [latency=<t>] [bw=<n>] [loss=<p>]
    price <node> <a>-<b> price=<u> window=<t0>:<t1>
    content <producer> prefix=<name> price=<u>
    demand <consumer> prefix=<name> rate=<r> model=<delay|throughput> probes=<n>
           [alpha=<x>] [beta=<x>] [threshold=<t>] [until=<t>]
    channel <a> <b> dep_a=<u> dep_b=<u>
    fault equivocate <node> <a>-<b> price=<u> window=<t0>:<t1> at=<t>
    run [ticks=<t>] [seed=<s>] [window=<t>] [pit=<t>] [reprobe=<t>]

``price`` sets the fee ``node`` charges for forwarding over its end of link
``a-b``. A demand with ``until`` stops issuing requests at that tick.
Link defaults are latency 1, bw 10, loss 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import DanglingReference, DuplicateDirective, ScenarioError, ScenarioSyntaxError
from ..model import Name, Window

ROLES = ("consumer", "router", "producer")
MODELS = ("delay", "throughput")


@dataclass(frozen=True)
class NodeSpec:
    id: str
    role: str
    balance: int = 0
    deposit: int = 0
    line: int = 0


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    latency: int = 1
    bw: int = 10
    loss: float = 0.0
    line: int = 0

    def joins(self, x, y) -> bool:
        return {self.a, self.b} == {x, y}


@dataclass(frozen=True)
class PriceSpec:
    node: str
    a: str
    b: str
    price: int
    window: Window
    line: int = 0

    @property
    def peer(self) -> str:
        return self.b if self.node == self.a else self.a


@dataclass(frozen=True)
class ContentSpec:
    producer: str
    prefix: Name
    price: int
    line: int = 0


@dataclass(frozen=True)
class DemandSpec:
    consumer: str
    prefix: Name
    rate: float
    model: str
    probes: int
    alpha: float = 1.0
    beta: float = 100.0
    threshold: int = 100
    until: Optional[int] = None
    line: int = 0


@dataclass(frozen=True)
class ChannelSpec:
    a: str
    b: str
    dep_a: int
    dep_b: int
    line: int = 0


@dataclass(frozen=True)
class FaultSpec:
    node: str
    a: str
    b: str
    price: int
    window: Window
    at: int
    line: int = 0

    @property
    def peer(self) -> str:
        return self.b if self.node == self.a else self.a


@dataclass
class RunParams:
    ticks: int = 1000
    seed: int = 0
    window: int = 100
    pit: int = 100
    reprobe: int = 100


@dataclass
class Scenario:
    nodes: list[NodeSpec] = field(default_factory=list)
    links: list[LinkSpec] = field(default_factory=list)
    prices: list[PriceSpec] = field(default_factory=list)
    contents: list[ContentSpec] = field(default_factory=list)
    demands: list[DemandSpec] = field(default_factory=list)
    channels: list[ChannelSpec] = field(default_factory=list)
    faults: list[FaultSpec] = field(default_factory=list)
    run: RunParams = field(default_factory=RunParams)

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def link(self, a: str, b: str) -> Optional[LinkSpec]:
        for l in self.links:
            if l.joins(a, b):
                return l
        return None


def _kv(tokens, lineno, required, optional=()):
    out = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not value:
            raise ScenarioSyntaxError(f"expected key=value, got {tok!r}", lineno)
        if key not in required and key not in optional:
            raise ScenarioSyntaxError(f"unknown key {key!r}", lineno)
        if key in out:
            raise ScenarioSyntaxError(f"key {key!r} given twice", lineno)
        out[key] = value
    missing = [k for k in required if k not in out]
    if missing:
        raise ScenarioSyntaxError(f"missing {', '.join(missing)}", lineno)
    return out


def _int(value, lineno, what, minimum=0):
    try:
        v = int(value)
    except ValueError:
        raise ScenarioSyntaxError(f"{what} must be an integer, got {value!r}", lineno) from None
    if v < minimum:
        raise ScenarioSyntaxError(f"{what} must be >= {minimum}", lineno)
    return v


def _float(value, lineno, what):
    try:
        v = float(value)
    except ValueError:
        raise ScenarioSyntaxError(f"{what} must be a number, got {value!r}", lineno) from None
    if v != v or v < 0:
        raise ScenarioSyntaxError(f"{what} must be non-negative", lineno)
    return v


def _window(value, lineno):
    lo, sep, hi = value.partition(":")
    if not sep:
        raise ScenarioSyntaxError(f"window must be <t0>:<t1>, got {value!r}", lineno)
    try:
        return Window(_int(lo, lineno, "window start"), _int(hi, lineno, "window end"))
    except ValueError as e:
        raise ScenarioSyntaxError(str(e), lineno) from None


def _hop(value, lineno):
    a, sep, b = value.partition("-")
    if not sep or not a or not b:
        raise ScenarioSyntaxError(f"link must be written <a>-<b>, got {value!r}", lineno)
    return a, b


def _name(value, lineno):
    try:
        return Name.parse(value)
    except ValueError as e:
        raise ScenarioSyntaxError(f"bad name {value!r}: {e}", lineno) from None


def _args(tokens, n, lineno, usage):
    if len(tokens) < n:
        raise ScenarioSyntaxError(f"usage: {usage}", lineno)
    return tokens[:n], tokens[n:]


def parse_scenario(text: str) -> Scenario:
    """Parse and cross-check a scenario; errors carry the offending line number."""
    sc = Scenario()
    seen_run = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "node":
            (nid,), kv = _args(rest, 1, lineno, "node <id> role=...")
            kv = _kv(kv, lineno, ("role",), ("balance", "deposit"))
            if kv["role"] not in ROLES:
                raise ScenarioSyntaxError(f"unknown role {kv['role']!r}", lineno)
            if any(n.id == nid for n in sc.nodes):
                raise DuplicateDirective(f"node {nid!r} declared twice", lineno)
            sc.nodes.append(NodeSpec(nid, kv["role"], _int(kv.get("balance", 0), lineno, "balance"),
                                     _int(kv.get("deposit", 0), lineno, "deposit"), lineno))
        elif head == "link":
            (a, b), kv = _args(rest, 2, lineno, "link <a> <b> ...")
            kv = _kv(kv, lineno, (), ("latency", "bw", "loss"))
            if a == b:
                raise ScenarioSyntaxError("a link joins two distinct nodes", lineno)
            loss = _float(kv.get("loss", 0), lineno, "loss")
            if loss > 1:
                raise ScenarioSyntaxError("loss is a probability", lineno)
            sc.links.append(LinkSpec(a, b, _int(kv.get("latency", 1), lineno, "latency", 1),
                                     _int(kv.get("bw", 10), lineno, "bw", 1), loss, lineno))
        elif head == "price":
            (nid, hop), kv = _args(rest, 2, lineno, "price <node> <a>-<b> price=<u> window=<t0>:<t1>")
            kv = _kv(kv, lineno, ("price", "window"))
            a, b = _hop(hop, lineno)
            sc.prices.append(PriceSpec(nid, a, b, _int(kv["price"], lineno, "price"),
                                       _window(kv["window"], lineno), lineno))
        elif head == "content":
            (pid,), kv = _args(rest, 1, lineno, "content <producer> prefix=<name> price=<u>")
            kv = _kv(kv, lineno, ("prefix", "price"))
            sc.contents.append(ContentSpec(pid, _name(kv["prefix"], lineno),
                                           _int(kv["price"], lineno, "price"), lineno))
        elif head == "demand":
            (cid,), kv = _args(rest, 1, lineno, "demand <consumer> prefix=... rate=... model=... probes=...")
            kv = _kv(kv, lineno, ("prefix", "rate", "model", "probes"),
                     ("alpha", "beta", "threshold", "until"))
            if kv["model"] not in MODELS:
                raise ScenarioSyntaxError(f"unknown model {kv['model']!r}", lineno)
            sc.demands.append(DemandSpec(
                cid, _name(kv["prefix"], lineno), _float(kv["rate"], lineno, "rate"), kv["model"],
                _int(kv["probes"], lineno, "probes", 1),
                _float(kv.get("alpha", 1.0), lineno, "alpha"), _float(kv.get("beta", 100.0), lineno, "beta"),
                _int(kv.get("threshold", 100), lineno, "threshold"),
                _int(kv["until"], lineno, "until") if "until" in kv else None, lineno))
        elif head == "channel":
            (a, b), kv = _args(rest, 2, lineno, "channel <a> <b> dep_a=<u> dep_b=<u>")
            kv = _kv(kv, lineno, ("dep_a", "dep_b"))
            if a == b:
                raise ScenarioSyntaxError("a channel joins two distinct nodes", lineno)
            sc.channels.append(ChannelSpec(a, b, _int(kv["dep_a"], lineno, "dep_a"),
                                           _int(kv["dep_b"], lineno, "dep_b"), lineno))
        elif head == "fault":
            if not rest or rest[0] != "equivocate":
                raise ScenarioSyntaxError("only 'fault equivocate' is supported", lineno)
            (nid, hop), kv = _args(rest[1:], 2, lineno, "fault equivocate <node> <a>-<b> ...")
            kv = _kv(kv, lineno, ("price", "window", "at"))
            a, b = _hop(hop, lineno)
            sc.faults.append(FaultSpec(nid, a, b, _int(kv["price"], lineno, "price"),
                                       _window(kv["window"], lineno), _int(kv["at"], lineno, "at"),
                                       lineno))
        elif head == "run":
            if seen_run:
                raise DuplicateDirective("run given twice", lineno)
            seen_run = True
            kv = _kv(rest, lineno, (), ("ticks", "seed", "window", "pit", "reprobe"))
            sc.run = RunParams(
                ticks=_int(kv.get("ticks", 1000), lineno, "ticks", 1),
                seed=_int(kv.get("seed", 0), lineno, "seed"),
                window=_int(kv.get("window", 100), lineno, "window", 1),
                pit=_int(kv.get("pit", 100), lineno, "pit", 1),
                reprobe=_int(kv.get("reprobe", 100), lineno, "reprobe", 0))
        else:
            raise ScenarioSyntaxError(f"unknown directive {head!r}", lineno)
    _check(sc)
    return sc


def _check(sc: Scenario) -> None:
    if not sc.nodes:
        raise ScenarioSyntaxError("scenario declares no nodes", 1)
    roles = {n.id: n.role for n in sc.nodes}

    def need(node_id, line, role=None):
        if node_id not in roles:
            raise DanglingReference(f"unknown node {node_id!r}", line)
        if role and roles[node_id] != role:
            raise ScenarioError(f"{node_id!r} is a {roles[node_id]}, expected a {role}", line)

    pairs = set()
    for l in sc.links:
        need(l.a, l.line)
        need(l.b, l.line)
        key = frozenset((l.a, l.b))
        if key in pairs:
            raise DuplicateDirective(f"link {l.a}-{l.b} declared twice", l.line)
        pairs.add(key)

    def need_link(node_id, a, b, line):
        need(a, line)
        need(b, line)
        if frozenset((a, b)) not in pairs:
            raise DanglingReference(f"no link {a}-{b}", line)
        if node_id not in (a, b):
            raise DanglingReference(f"{node_id!r} is not an endpoint of {a}-{b}", line)

    for p in sc.prices:
        need(p.node, p.line, "router")
        need_link(p.node, p.a, p.b, p.line)
    content_keys = set()
    for c in sc.contents:
        need(c.producer, c.line, "producer")
        if (c.producer, c.prefix) in content_keys:
            raise DuplicateDirective(f"{c.producer} already serves {c.prefix}", c.line)
        content_keys.add((c.producer, c.prefix))
    demand_keys = set()
    for d in sc.demands:
        need(d.consumer, d.line, "consumer")
        if (d.consumer, d.prefix) in demand_keys:
            raise DuplicateDirective(f"{d.consumer} already requests {d.prefix}", d.line)
        demand_keys.add((d.consumer, d.prefix))
        if not any(c.prefix.is_prefix_of(d.prefix) for c in sc.contents):
            raise DanglingReference(f"no producer serves {d.prefix}", d.line)
    chan_keys = set()
    for ch in sc.channels:
        need_link(ch.a, ch.a, ch.b, ch.line)
        if (ch.a, ch.b) in chan_keys:
            raise DuplicateDirective(f"channel {ch.a} {ch.b} declared twice", ch.line)
        chan_keys.add((ch.a, ch.b))
    for f in sc.faults:
        need(f.node, f.line, "router")
        need_link(f.node, f.a, f.b, f.line)
    for n in sc.nodes:
        if n.role == "producer" and not any(c.producer == n.id for c in sc.contents):
            raise ScenarioError(f"producer {n.id!r} serves no content", n.line)

"""Deterministic tick-driven simulation of a PPTP network.

Each tick runs, in order: fault injections, packet arrivals, consumer
activity, link transmissions, PIT expiry and (at window ends) metrics
collection. Links are FIFO per direction, transmit at most ``bw`` packets per
tick and deliver exactly ``latency`` ticks later. Every random draw (link
losses and bandit exploration) comes from one seeded generator, so a scenario
and seed fully determine the output.

A cheque is handed to the next hop when its Interest is put on the link: the
payee countersigns immediately, so commitments on one channel never overlap.
If the link then loses the Interest the payee keeps the money; such packets
are counted as paid-undelivered.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..consumer import (
    Consumer,
    PathStats,
    PricedPath,
    UtilityModel,
    build_content_interest,
    launch_probes,
    measured_v,
    register_path,
    select_path,
    update_estimate,
    utility,
)
from ..errors import EquivocationRefused, InvariantViolation, ProtocolError, ScenarioError
from ..forwarding import ForwardAction, Node, Role, on_data, on_interest, probe_next_face
from ..ledger import Ledger
from ..model import MAX_TICK, Name, Packet, PerfMetric, Window
from ..payments import ChannelBook, open_channel
from ..pricing import PriceSchedule
from ..signing import Identity
from .report import MetricsRow, build_summary
from .scenario import DemandSpec, Scenario


@dataclass
class _Direction:
    sender: str
    receiver: str
    receiver_face: int
    latency: int
    capacity: int
    loss: float
    queue: deque = field(default_factory=deque)
    in_flight: deque = field(default_factory=deque)
    sent_this_tick: int = 0


@dataclass
class _Demand:
    spec: DemandSpec
    consumer: Consumer
    credit: float = 0.0
    seq: int = 0
    next_probe: int = 0
    outstanding: dict = field(default_factory=dict)
    window_stats: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)
    known: dict = field(default_factory=dict)
    sent: int = 0
    delivered: int = 0
    spent: int = 0


@dataclass
class RunResult:
    rows: list[MetricsRow]
    summary: dict


def compute_routes(sc: Scenario) -> dict[str, dict[Name, list[str]]]:
    """Next-hop neighbours per node and content prefix.

    Hop distances to the producers of a prefix are measured in the graph
    without consumers and without transit through other producers. A router
    routes to every neighbour strictly closer than itself, which is loop
    free; a consumer routes to every neighbour that can reach a producer.
    """
    roles = {n.id: n.role for n in sc.nodes}
    adj: dict[str, list[str]] = {n.id: [] for n in sc.nodes}
    for l in sc.links:
        adj[l.a].append(l.b)
        adj[l.b].append(l.a)
    routes: dict[str, dict[Name, list[str]]] = {n.id: {} for n in sc.nodes}
    prefixes = []
    for c in sc.contents:
        if c.prefix not in prefixes:
            prefixes.append(c.prefix)
    for prefix in prefixes:
        sources = [c.producer for c in sc.contents if c.prefix == prefix]
        dist = {s: 0 for s in sources}
        frontier = list(sources)
        while frontier:
            nxt = []
            for u in frontier:
                if roles[u] != "router" and u not in sources:
                    continue
                if roles[u] == "producer" and dist[u] > 0:
                    continue
                for v in adj[u]:
                    if v not in dist and roles[v] == "router":
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        for n in sc.nodes:
            if n.role == "router" and n.id in dist:
                hops = [v for v in adj[n.id] if v in dist and dist[v] < dist[n.id]]
            elif n.role == "consumer":
                hops = [v for v in adj[n.id] if v in dist]
            else:
                hops = []
            if hops:
                routes[n.id][prefix] = hops
    return routes


class Simulation:
    def __init__(self, scenario: Scenario, seed: Optional[int] = None,
                 ticks: Optional[int] = None):
        self.scenario = scenario
        self.seed = scenario.run.seed if seed is None else seed
        self.ticks = scenario.run.ticks if ticks is None else ticks
        self.window = scenario.run.window
        self.rng = np.random.default_rng(self.seed)
        self.ledger = Ledger()
        self.channels = ChannelBook()
        self.drops: Counter = Counter()
        self.events: Counter = Counter()
        self.disputes: list[dict] = []
        self.window_ends: list[int] = []
        self.identities = {n.id: Identity.derive(n.id) for n in scenario.nodes}
        self.nodes: dict[str, Node] = {}
        self._dirs: dict[tuple[str, int], _Direction] = {}
        self._dir_order: list[_Direction] = []
        self.demands: list[_Demand] = []
        self._build()

    # setup

    def _build(self):
        sc = self.scenario
        faces: dict[str, dict[int, str]] = {n.id: {} for n in sc.nodes}
        metrics: dict[tuple[str, int], PerfMetric] = {}
        for l in sc.links:
            fa, fb = len(faces[l.a]), len(faces[l.b])
            faces[l.a][fa] = l.b
            faces[l.b][fb] = l.a
            for sender, receiver, rface, sface in ((l.a, l.b, fb, fa), (l.b, l.a, fa, fb)):
                d = _Direction(sender, receiver, rface, l.latency, l.bw, l.loss)
                self._dirs[(sender, sface)] = d
                self._dir_order.append(d)
                metrics[(sender, sface)] = PerfMetric(l.bw, l.latency)

        for n in sc.nodes:
            self.ledger.register(n.id, self.identities[n.id].pubkey, n.balance, n.deposit)

        faulty = {f.node for f in sc.faults}
        for n in sc.nodes:
            role = Role(n.role)
            pricing = None
            prefixes = [c.prefix for c in sc.contents if c.producer == n.id]
            if role is not Role.CONSUMER:
                pricing = PriceSchedule(self.identities[n.id],
                                        metric_for=lambda f, nid=n.id: metrics[(nid, f)],
                                        fault_injection=n.id in faulty)
            self.nodes[n.id] = Node(self.identities[n.id], role, faces[n.id], pricing,
                                    self.channels, prefixes, sc.run.pit)

        for p in sc.prices:
            node = self.nodes[p.node]
            try:
                node.pricing.set_price(node.face_to(p.peer), p.price, p.window)
            except EquivocationRefused as e:
                raise ScenarioError(str(e), p.line) from None
        for c in sc.contents:
            node = self.nodes[c.producer]
            for face in node.faces:
                try:
                    node.pricing.set_price(face, c.price, Window(0, MAX_TICK))
                except EquivocationRefused:
                    raise ScenarioError(
                        f"producer {c.producer} serves prefixes at different prices", c.line) from None

        for node_id, table in compute_routes(sc).items():
            node = self.nodes[node_id]
            for prefix, hops in table.items():
                node.add_route(prefix, [node.face_to(h) for h in hops])

        for ch in sc.channels:
            try:
                channel = open_channel(self.identities[ch.a], self.identities[ch.b],
                                       ch.dep_a, ch.dep_b, self.ledger)
            except Exception as e:
                raise ScenarioError(f"cannot open channel {ch.a} {ch.b}: {e}", ch.line) from None
            self.channels.add(channel)

        for d in sc.demands:
            node = self.nodes[d.consumer]
            model = UtilityModel(d.model, d.alpha, d.beta, 1.0, d.threshold)
            consumer = Consumer(self.identities[d.consumer], self.ledger, model,
                                {peer: face for face, peer in node.faces.items()},
                                label=str(d.prefix))
            self.demands.append(_Demand(d, consumer))

    # main loop

    def run(self) -> RunResult:
        for now in range(self.ticks):
            self._inject_faults(now)
            self._deliver(now)
            for dem in self.demands:
                self._consumer_step(dem, now)
            self._transmit(now)
            for node in self.nodes.values():
                self.events["pit_expired"] += len(node.expire(now))
            if (now + 1) % self.window == 0 or now == self.ticks - 1:
                self._close_window(now)
        self._drain()
        for ch in self.channels:
            self.ledger.settle(ch, ch.latest)
        self._check_invariants()
        return RunResult(self._rows(), build_summary(self))

    def _inject_faults(self, now):
        for f in self.scenario.faults:
            if f.at == now:
                node = self.nodes[f.node]
                node.pricing.equivocate_for_test(node.face_to(f.peer), f.price, f.window)
                self.events["equivocations_injected"] += 1

    def _deliver(self, now):
        for d in self._dir_order:
            while d.in_flight and d.in_flight[0][0] <= now:
                _, pkt = d.in_flight.popleft()
                self._arrive(self.nodes[d.receiver], d.receiver_face, pkt, now)

    def _transmit(self, now):
        for d in self._dir_order:
            for _ in range(min(d.capacity, len(d.queue))):
                pkt = d.queue.popleft()
                if d.loss > 0 and self.rng.random() < d.loss:
                    self._lost(d, pkt)
                    continue
                d.in_flight.append((now + d.latency, pkt))

    def _drain(self):
        # cheques already countersigned for Interests still on a link stay with the payee
        for d in self._dir_order:
            pending = list(d.queue) + [pkt for _, pkt in d.in_flight]
            for pkt in pending:
                if pkt.is_interest and pkt.envelope is not None:
                    self.nodes[d.receiver].stranded += pkt.envelope.remaining
                    self.events["paid_in_flight_at_end"] += 1

    def _lost(self, d: _Direction, pkt: Packet):
        kind = "interest" if pkt.is_interest else "data"
        self.events[f"lost_{kind}"] += 1
        if pkt.is_interest and pkt.envelope is not None:
            self.nodes[d.receiver].stranded += pkt.envelope.remaining
            self.events["paid_undelivered"] += 1
        elif not pkt.is_interest and not pkt.probe:
            self.events["paid_undelivered"] += 1

    def _send(self, node: Node, action: ForwardAction):
        d = self._dirs[(node.id, action.face)]
        pkt = action.packet
        env = pkt.envelope if pkt.is_interest else None
        if env is not None:
            payee = self.nodes[d.receiver]
            try:
                payee.accept_cheque(env, node.id)
            except ProtocolError as e:
                self.drops[f"handoff:{e.reason}"] += 1
                if node.role is not Role.CONSUMER:
                    node.stranded += env.remaining
                return False
            node.paid += env.remaining
        d.queue.append(pkt)
        return True

    def _arrive(self, node: Node, in_face: int, pkt: Packet, now: int):
        handler = on_interest if pkt.is_interest else on_data
        try:
            action = handler(node, in_face, pkt, now)
        except ProtocolError as e:
            self.drops[e.reason] += 1
            if pkt.is_interest and pkt.envelope is not None:
                node.stranded += pkt.envelope.remaining
            return
        if action.face is not None:
            self._send(node, action)
            return
        for dem in self.demands:
            if dem.consumer.id == node.id and dem.spec.prefix.is_prefix_of(pkt.name):
                self._consumer_receive(dem, pkt, now)
                return

    # consumers

    def _consumer_step(self, dem: _Demand, now: int):
        consumer = dem.consumer
        node = self.nodes[consumer.id]
        if dem.spec.until is not None and now >= dem.spec.until:
            return
        for pid in consumer.drop_expired(now):
            self.events["paths_expired"] += 1
        reprobe = self.scenario.run.reprobe
        if now >= dem.next_probe and (now == 0 or reprobe > 0 or not consumer.paths):
            for probe in launch_probes(consumer, dem.spec.prefix, dem.spec.probes):
                try:
                    face = probe_next_face(node, probe.name)
                except ProtocolError as e:
                    self.drops[e.reason] += 1
                    continue
                node.originate(probe, now)
                self._send(node, ForwardAction(face, probe))
                self.events["probes_sent"] += 1
            dem.next_probe = now + (reprobe if reprobe > 0 else self.scenario.run.pit)

        if not consumer.paths:
            dem.credit = min(dem.credit + dem.spec.rate, max(dem.spec.rate, 1.0))
            return
        dem.credit += dem.spec.rate
        while dem.credit >= 1.0:
            dem.credit -= 1.0
            pid = select_path(consumer.bandit, self.rng)
            path = consumer.paths[pid]
            dem.seq += 1
            try:
                pkt = build_content_interest(path, dem.spec.prefix, dem.seq, self.channels,
                                             consumer.identity, consumer.next_nonce())
            except ProtocolError as e:
                self.drops[f"consumer:{e.reason}"] += 1
                continue
            node.originate(pkt, now)
            if not self._send(node, ForwardAction(path.first_face, pkt)):
                del node.pit[pkt.key]
                continue
            cost = path.total_cost
            for stats in (consumer.bandit.arms[pid], self._window_stats(dem, pid)):
                stats.sent += 1
                stats.cost_spent += cost
            dem.sent += 1
            dem.spent += cost
            dem.outstanding[pkt.nonce] = (pid, now)

    def _window_stats(self, dem: _Demand, pid: str) -> PathStats:
        return dem.window_stats.setdefault(pid, PathStats())

    def _consumer_receive(self, dem: _Demand, pkt: Packet, now: int):
        consumer = dem.consumer
        if pkt.probe:
            try:
                path = register_path(consumer, pkt, now)
            except ProtocolError as e:
                self.drops[f"register:{e.reason}"] += 1
                return
            if path.path_id not in dem.known:
                dem.known[path.path_id] = path
            self.events["paths_registered"] += 1
            for item in path.items:
                for proof in consumer.watcher.observe(item):
                    verdict = self.ledger.submit_conflict(proof, consumer.id)
                    self.disputes.append({
                        "tick": now, "submitter": consumer.id, "advertiser": verdict.advertiser,
                        "verdict": verdict.status, "reason": verdict.reason,
                        "burned": verdict.burned})
            return
        entry = dem.outstanding.pop(pkt.nonce, None)
        if entry is None:
            return
        pid, sent_at = entry
        latency = now - sent_at
        thr = consumer.model.threshold
        if pid in consumer.bandit.arms:
            consumer.bandit.arms[pid].record_delivery(latency, thr)
        self._window_stats(dem, pid).record_delivery(latency, thr)
        dem.delivered += 1

    def _close_window(self, now: int):
        start = self.window_ends[-1] + 1 if self.window_ends else 0
        length = now + 1 - start
        self.window_ends.append(now)
        for dem in self.demands:
            consumer = dem.consumer
            snapshot = {}
            for pid, ws in dem.window_stats.items():
                path = dem.known.get(pid) or consumer.paths.get(pid)
                v = u = None
                if ws.delivered:
                    v = measured_v(ws, consumer.model, length)
                    u = utility(v, path.total_cost, consumer.model.eps_floor)
                    if pid in consumer.bandit.arms:
                        update_estimate(consumer.bandit, pid, u, consumer.gamma)
                snapshot[pid] = (ws, v, u)
            dem.history[now] = snapshot
            dem.window_stats = {}

    def _rows(self) -> list[MetricsRow]:
        rows = []
        for dem in self.demands:
            pids = sorted(dem.known)
            for end in self.window_ends:
                snap = dem.history.get(end, {})
                for pid in pids:
                    ws, v, u = snap.get(pid, (PathStats(), None, None))
                    rows.append(MetricsRow(
                        tick=end + 1, consumer=dem.consumer.id, path_id=pid,
                        interests_sent=ws.sent, data_received=ws.delivered,
                        mean_latency=ws.mean_latency,
                        frac_within_threshold=(ws.within_threshold / ws.delivered
                                               if ws.delivered else None),
                        cost_spent=ws.cost_spent, v_measured=v, u_measured=u))
        return rows

    # checks

    def _check_invariants(self):
        self.ledger.check_conservation()
        if self.ledger.escrows:
            raise InvariantViolation("escrow left after settlement")
        for node in self.nodes.values():
            if node.role is Role.CONSUMER:
                continue
            if node.received - node.paid != node.kept + node.stranded:
                raise InvariantViolation(
                    f"{node.id}: received {node.received} - paid {node.paid} != "
                    f"kept {node.kept} + stranded {node.stranded}")
        spent = sum(n.paid for n in self.nodes.values() if n.role is Role.CONSUMER)
        earned = sum(n.revenue for n in self.nodes.values() if n.role is not Role.CONSUMER)
        if spent != earned:
            raise InvariantViolation(f"consumers spent {spent}u but others earned {earned}u")
        if spent != sum(d.spent for d in self.demands):
            raise InvariantViolation("consumer spend does not match per-path accounting")
        for ch in self.channels:
            if ch.balance_a + ch.balance_b != ch.total or min(ch.balance_a, ch.balance_b) < 0:
                raise InvariantViolation(f"{ch.channel_id} does not conserve its deposits")


def run(scenario: Scenario, seed: Optional[int] = None, ticks: Optional[int] = None) -> RunResult:
    return Simulation(scenario, seed, ticks).run()

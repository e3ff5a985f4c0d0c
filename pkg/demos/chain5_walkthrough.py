"""One paid packet down a five-hop chain, then a full simulated run.

Prices are 1, 3, 4 and 2 tokens at the routers plus 3 at the producer. The
consumer probes once, learns the 13-token path cost from the signed tag, and
pays the first router 13; each router keeps its price and pays the rest on.
"""

from pathlib import Path

from pptp import Name
from pptp.consumer import build_content_interest, launch_probes, register_path
from pptp.forwarding import on_data, on_interest, probe_next_face
from pptp.sim import Simulation, format_summary, parse_scenario

SCENARIO = Path(__file__).resolve().parents[1] / "scenarios" / "chain5.scn"


def deliver(sim, sender, face, pkt, now, show):
    """Hand ``pkt`` hop by hop until it reaches its destination."""
    node = sim.nodes[sender]
    if pkt.is_interest and pkt.key not in node.pit:
        node.originate(pkt, now)
    while True:
        nxt = sim.nodes[node.faces[face]]
        if pkt.envelope is not None and pkt.is_interest:
            nxt.accept_cheque(pkt.envelope, node.id)
            node.paid += pkt.envelope.remaining
        show(node.id, nxt.id, pkt)
        handler = on_interest if pkt.is_interest else on_data
        action = handler(nxt, nxt.face_to(node.id), pkt, now)
        if action.face is None:
            return action.packet
        node, face, pkt = nxt, action.face, action.packet


def main():
    scenario = parse_scenario(SCENARIO.read_text())
    sim = Simulation(scenario)
    dem = sim.demands[0]
    consumer = dem.consumer
    prefix = Name.parse("/video/movie1")

    print("probe:")
    probe = launch_probes(consumer, prefix, 1)[0]
    data = deliver(sim, "C", probe_next_face(sim.nodes["C"], prefix), probe, 0,
                   lambda a, b, p: print(f"  {a:>2} -> {b:<2} {'interest' if p.is_interest else 'data'}"))
    path = register_path(consumer, data, now=0)
    print("tag, consumer side first:")
    for item in path.items:
        print(f"  {item.advertiser:<3} face {item.face}  price {item.price}u  "
              f"bw {item.metric.adv_bandwidth}  latency {item.metric.adv_latency}")
    print(f"path cost {path.total_cost}u\n")

    print("one content packet:")
    pkt = build_content_interest(path, dem.spec.prefix, 1, sim.channels, consumer.identity)
    before = {n: sim.nodes[n].revenue for n in ("R1", "R2", "R3", "R4", "P")}
    deliver(sim, "C", path.first_face, pkt, 1,
            lambda a, b, p: p.is_interest and print(f"  {a:>2} pays {b:<2} {p.envelope.remaining}u"))
    for n, r in before.items():
        print(f"  {n} earned {sim.nodes[n].revenue - r}u")

    print("\nfull run of the scenario file:")
    print(format_summary(Simulation(scenario).run().summary))


if __name__ == "__main__":
    main()

"""Probing a diamond network.

C reaches P through two routers, A and B, each a different price. Probes are
spread round-robin over C's faces, so two probes discover both paths, each
with its own signed price tag.
"""

from pptp.sim import Simulation, parse_scenario

SCENARIO = """\
node C role=consumer balance=10000
node A role=router balance=10000 deposit=20
node B role=router balance=10000 deposit=20
node P role=producer deposit=20
link C A latency=1 bw=8
link C B latency=3 bw=4
link A P latency=2 bw=8
link B P latency=1 bw=2
price A A-P price=6 window=0:5000
price B B-P price=2 window=0:5000
content P prefix=/news price=1
channel C A dep_a=5000 dep_b=0
channel C B dep_a=5000 dep_b=0
channel A P dep_a=5000 dep_b=0
channel B P dep_a=5000 dep_b=0
demand C prefix=/news/today rate=1 model=delay probes=2
run ticks=300
"""


def main():
    sim = Simulation(parse_scenario(SCENARIO))
    result = sim.run()
    consumer = sim.demands[0].consumer
    print("discovered paths:")
    for path in consumer.paths.values():
        arm = consumer.bandit.arms[path.path_id]
        hops = " -> ".join(["C"] + path.nodes)
        print(f"  {path.path_id}  {hops:<12} cost {path.total_cost}u  "
              f"predicted v {path.predicted_v:.2f}  used {arm.sent}x")
    c = result.summary["consumers"][0]
    print(f"sent {c['interests_sent']}, received {c['data_received']}, spent {c['spent']}u")


if __name__ == "__main__":
    main()

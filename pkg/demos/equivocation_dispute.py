"""A router that signs two prices for the same face and time gets caught.

R1 advertises 1u toward R2, then at tick 50 starts signing 9u for an
overlapping window. The consumer keeps every signed item it sees; its next
probe brings back the 9u version, it submits both items to the ledger, and
R1 loses its whole security deposit.
"""

from pptp.sim import Simulation, format_summary, parse_scenario

SCENARIO = """\
node C  role=consumer balance=5000
node R1 role=router   balance=5000 deposit=40
node R2 role=router   balance=5000 deposit=40
node P  role=producer deposit=40
link C R1
link R1 R2
link R2 P
price R1 R1-R2 price=1 window=0:1000
price R2 R2-P  price=2 window=0:1000
content P prefix=/tv price=1
channel C R1 dep_a=4000 dep_b=0
channel R1 R2 dep_a=4000 dep_b=0
channel R2 P dep_a=4000 dep_b=0
demand C prefix=/tv rate=0.5 model=throughput probes=1
fault equivocate R1 R1-R2 price=9 window=40:400 at=50
run ticks=300 reprobe=100 seed=3
"""


def main():
    sim = Simulation(parse_scenario(SCENARIO))
    summary = sim.run().summary
    for d in summary["disputes"]:
        print(f"tick {d['tick']}: {d['submitter']} accused {d['advertiser']} -> {d['verdict']}"
              + (f" ({d['reason']})" if d["reason"] else f", burned {d['burned']}u"))
    print()
    print(format_summary(summary))


if __name__ == "__main__":
    main()

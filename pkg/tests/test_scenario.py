from pathlib import Path

import pytest

from pptp.errors import DanglingReference, DuplicateDirective, ScenarioError, ScenarioSyntaxError
from pptp.model import Name, Window
from pptp.sim.scenario import parse_scenario

CHAIN5 = Path(__file__).resolve().parents[1] / "scenarios" / "chain5.scn"

MINI = """\
node C role=consumer balance=100
node R role=router balance=100 deposit=10
node P role=producer deposit=10
link C R
link R P latency=3 bw=2 loss=0.25
price R R-P price=2 window=0:500
content P prefix=/x price=1
demand C prefix=/x/y rate=0.5 model=throughput probes=2
channel C R dep_a=50 dep_b=0
"""


def test_chain5_file():
    sc = parse_scenario(CHAIN5.read_text())
    assert len(sc.nodes) == 6 and len(sc.links) == 5
    assert [p.price for p in sc.prices] == [1, 3, 4, 2]
    assert [(p.node, p.peer) for p in sc.prices] == [("R1", "R2"), ("R2", "R3"), ("R3", "R4"), ("R4", "P")]
    assert sc.contents[0].price == 3
    assert sum(p.price for p in sc.prices) + sc.contents[0].price == 13
    assert (sc.run.ticks, sc.run.seed) == (1000, 7)


def test_defaults_and_fields():
    sc = parse_scenario(MINI)
    cr, rp = sc.links
    assert (cr.latency, cr.bw, cr.loss) == (1, 10, 0.0)
    assert (rp.latency, rp.bw, rp.loss) == (3, 2, 0.25)
    assert sc.prices[0].window == Window(0, 500)
    d = sc.demands[0]
    assert d.prefix == Name.parse("/x/y") and d.model == "throughput" and d.probes == 2
    assert (d.alpha, d.beta, d.threshold) == (1.0, 100.0, 100)
    assert sc.run.window == 100 and sc.run.pit == 100
    assert sc.link("P", "R") is rp and sc.link("C", "P") is None


def test_comments_and_blank_lines():
    text = "# header\n\n" + MINI.replace("link C R", "link C R   # first hop")
    assert len(parse_scenario(text).links) == 2


def test_empty_file():
    for text in ("", "\n\n", "# only a comment\n"):
        with pytest.raises(ScenarioSyntaxError):
            parse_scenario(text)


def test_price_on_either_face():
    sc = parse_scenario(MINI + "price R R-C price=1 window=0:1\n")
    assert sc.prices[-1].peer == "C"


@pytest.mark.parametrize("bad", [
    "link C ghost latency=1",
    "price R R-X price=1 window=0:5",
    "channel R ghost dep_a=1 dep_b=0",
    "fault equivocate R R-ghost price=3 window=0:9 at=5",
    "channel C P dep_a=1 dep_b=0",
    "price R C-P price=1 window=0:5",
])
def test_dangling(bad):
    text = MINI + bad + "\n"
    with pytest.raises(DanglingReference) as err:
        parse_scenario(text)
    assert err.value.line == len(text.splitlines())


def test_demand_without_producer():
    text = MINI + "demand C prefix=/elsewhere rate=1 model=delay probes=1\n"
    with pytest.raises(DanglingReference) as err:
        parse_scenario(text)
    assert err.value.line == 10


@pytest.mark.parametrize("dup", [
    "node R role=router",
    "link P R",
    "channel C R dep_a=1 dep_b=0",
    "content P prefix=/x price=9",
    "demand C prefix=/x/y rate=1 model=delay probes=1",
])
def test_duplicates(dup):
    text = MINI + dup + "\n"
    with pytest.raises(DuplicateDirective) as err:
        parse_scenario(text)
    assert err.value.line == 10


def test_run_twice():
    with pytest.raises(DuplicateDirective):
        parse_scenario(MINI + "run ticks=5\nrun seed=2\n")


@pytest.mark.parametrize("bad", [
    "node Z role=wizard",
    "node Z",
    "link C C",
    "link C R latency=0",
    "link C R loss=1.5",
    "link C R bw=fast",
    "price R R-P price=1 window=9",
    "price R R-P price=1 window=9:3",
    "price R RP price=1 window=0:3",
    "price R R-P price=-1 window=0:3",
    "demand C prefix=/x rate=1 model=jitter probes=1",
    "demand C prefix=/x rate=1 model=delay probes=0",
    "fault withhold R R-P",
    "teleport C P",
    "run ticks=0",
    "run speed=9",
    "channel C R dep_a=1 dep_a=2 dep_b=0",
])
def test_syntax(bad):
    # placed first so no later directive can trip first
    text = bad + "\n" + MINI
    with pytest.raises(ScenarioSyntaxError) as err:
        parse_scenario(text)
    assert err.value.line == 1
    assert str(err.value).startswith("line 1:")


def test_role_mismatch():
    with pytest.raises(ScenarioError) as err:
        parse_scenario(MINI + "price C C-R price=1 window=0:5\n")
    assert err.value.line == 10
    with pytest.raises(ScenarioError, match="serves no content"):
        parse_scenario(MINI + "node Q role=producer\n")


def test_run_directive():
    sc = parse_scenario(MINI + "run ticks=50 seed=9 window=10 pit=20 reprobe=0\n")
    assert (sc.run.ticks, sc.run.seed, sc.run.window, sc.run.pit, sc.run.reprobe) == (50, 9, 10, 20, 0)

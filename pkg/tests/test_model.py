import hashlib

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pptp.codec import (
    decode_item,
    decode_name,
    decode_tag,
    encode_item,
    encode_item_core,
    encode_name,
    encode_tag,
)
from pptp.errors import TokenOverflow
from pptp.model import (
    MAX_TOKENS,
    Name,
    Packet,
    PacketKind,
    PathTag,
    PerfMetric,
    TagItem,
    Window,
    add_tokens,
    probe_interest,
)
from pptp.payments import CommitmentTx, decode_commitment, encode_commitment
from pptp.signing import Identity, signed

u64 = st.integers(0, 2**64 - 1)
ids = st.text(min_size=1, max_size=12)


@st.composite
def windows(draw):
    a, b = sorted((draw(u64), draw(u64)))
    return Window(a, b)


@st.composite
def items(draw):
    return TagItem(draw(ids), draw(st.integers(0, 2**32 - 1)), draw(u64), draw(windows()),
                   PerfMetric(draw(u64), draw(u64)), draw(st.binary(max_size=80)))


class TestName:
    def test_parse_and_str(self):
        n = Name.parse("/video/movie1")
        assert n.components == (b"video", b"movie1")
        assert str(n) == "/video/movie1"

    def test_prefix_relation(self):
        assert Name.parse("/video").is_prefix_of(Name.parse("/video/movie1/3"))
        assert Name.parse("/video/movie1").is_prefix_of(Name.parse("/video/movie1"))
        assert not Name.parse("/video/movie2").is_prefix_of(Name.parse("/video/movie1/3"))
        assert not Name.parse("/video/movie1/3").is_prefix_of(Name.parse("/video"))

    @pytest.mark.parametrize("bad", ["/", ""])
    def test_needs_a_component(self, bad):
        with pytest.raises(ValueError):
            Name.parse(bad)

    def test_empty_component_rejected(self):
        with pytest.raises(ValueError):
            Name((b"a", b""))

    @given(st.lists(st.binary(min_size=1, max_size=20), min_size=1, max_size=6))
    def test_round_trip(self, comps):
        n = Name(tuple(comps))
        assert decode_name(encode_name(n)) == n


class TestWindow:
    def test_overlap_rule(self):
        assert Window(0, 100).overlaps(Window(50, 150))
        assert Window(0, 100).overlaps(Window(100, 200))
        assert not Window(0, 100).overlaps(Window(101, 200))

    def test_order_enforced(self):
        with pytest.raises(ValueError):
            Window(5, 4)

    @given(windows(), windows())
    def test_overlap_is_interval_intersection(self, a, b):
        expect = max(a.not_before, b.not_before) <= min(a.not_after, b.not_after)
        assert a.overlaps(b) == b.overlaps(a) == expect


class TestTokens:
    def test_sum_is_exact(self):
        assert add_tokens(1, 3, 4, 2, 3) == 13

    def test_overflow_is_an_error(self):
        with pytest.raises(TokenOverflow):
            add_tokens(MAX_TOKENS, 1)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            TagItem("R1", 0, -1, Window(0, 1))


class TestPathTag:
    @given(st.lists(items(), max_size=10))
    def test_stack_discipline(self, pushed):
        tag = PathTag()
        for it in pushed:
            tag = tag.push(it)
        popped = []
        for expected_len in range(len(pushed) - 1, -1, -1):
            it, tag = tag.pop()
            popped.append(it)
            assert len(tag) == expected_len
        assert popped == pushed[::-1]

    def test_pop_empty(self):
        with pytest.raises(IndexError):
            PathTag().pop()

    def test_hops_are_pop_order(self):
        a, b, c = (TagItem(n, 0, 1, Window(0, 9)) for n in "abc")
        tag = PathTag().push(a).push(b).push(c)
        assert tag.hops() == [c, b, a]
        assert PathTag.from_hops([c, b, a]) == tag


class TestPacket:
    def test_probe_carries_nothing(self):
        p = probe_interest(Name.parse("/x"), 7)
        assert p.probe and p.tag is None and p.envelope is None
        with pytest.raises(ValueError):
            Packet(PacketKind.INTEREST, Name.parse("/x"), 1, probe=True, tag=PathTag())

    def test_data_has_no_envelope(self):
        with pytest.raises(ValueError):
            Packet(PacketKind.DATA, Name.parse("/x"), 1, envelope=object())


class TestEncoding:
    GOLDEN_ITEM = TagItem("R1", 2, 5, Window(0, 100), PerfMetric(10, 2))

    def test_core_golden_bytes(self):
        core = encode_item_core(self.GOLDEN_ITEM)
        assert len(core) == 49
        assert core.hex() == (
            "01" "0002" "5231" "00000002" "0000000000000005"
            "0000000000000000" "0000000000000064" "000000000000000a" "0000000000000002")

    def test_signed_item_golden_digest(self):
        full = encode_item(signed(self.GOLDEN_ITEM, Identity.derive("R1")))
        assert len(full) == 115
        assert hashlib.sha256(full).hexdigest() == (
            "0d1df906c20aafa3ce2b6a681e5921418516c10af50a4f453199567d0e80d250")

    def test_commitment_core_golden(self):
        tx = CommitmentTx("C>R1", 1, 87, 13)
        assert tx.core().hex() == (
            "03" "0004" "433e5231" "0000000000000001" "0000000000000057" "000000000000000d")

    def test_deterministic(self):
        assert encode_item_core(self.GOLDEN_ITEM) == encode_item_core(self.GOLDEN_ITEM)

    def test_price_change_changes_bytes(self):
        five = self.GOLDEN_ITEM
        seven = five.with_price(7)
        assert encode_item_core(five) != encode_item_core(seven)

    @given(items())
    def test_item_round_trip(self, it):
        assert decode_item(encode_item(it)) == it

    @given(st.lists(items(), max_size=6))
    def test_tag_round_trip(self, its):
        tag = PathTag(tuple(its))
        assert decode_tag(encode_tag(tag)) == tag

    @given(st.text(min_size=1, max_size=20), u64, u64, u64, st.binary(max_size=70), st.binary(max_size=70))
    def test_commitment_round_trip(self, cid, seq, a, b, sa, sb):
        tx = CommitmentTx(cid, seq, a, b, sa, sb)
        assert decode_commitment(encode_commitment(tx)) == tx

    def test_trailing_bytes_rejected(self):
        with pytest.raises(ValueError):
            decode_item(encode_item(self.GOLDEN_ITEM) + b"\x00")

    def test_truncation_rejected(self):
        with pytest.raises(ValueError):
            decode_item(encode_item(self.GOLDEN_ITEM)[:-1])

"""Pairwise micropayment channels and hop-by-hop cheque splitting.

A channel escrows both parties' deposits on the ledger. Each payment is a
commitment transaction: a snapshot ``(seq, balance_a, balance_b)`` that the
payer signs and the payee countersigns on acceptance. The highest co-signed
commitment is what the ledger settles.

A cheque (:class:`PaymentEnvelope`) rides inside a content Interest. Each hop
keeps its own advertised price and re-issues the rest on its next-hop channel,
so a 13u cheque over hops priced 1, 3, 4, 2 and a 3u producer shrinks as
13, 12, 9, 5, 3.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional

from .codec import KIND_COMMITMENT, Reader, Writer
from .errors import (
    BadSignature,
    ChannelSettled,
    InsufficientChannelBalance,
    NoChannel,
    NonConserving,
    StaleSeq,
    UnderfundedEnvelope,
    WrongDirection,
)
from .model import add_tokens, check_tokens
from .signing import Identity, KeyRegistry, verify_signature

OPEN = "open"
SETTLED = "settled"


@dataclass(frozen=True)
class CommitmentTx:
    channel_id: str
    seq: int
    balance_a: int
    balance_b: int
    sig_a: bytes = b""
    sig_b: bytes = b""

    def core(self) -> bytes:
        """Signed portion: ``0x03 | u16 len | channel id | u64 seq | u64 bal_a | u64 bal_b``."""
        return (Writer().u8(KIND_COMMITMENT).text(self.channel_id).u64(self.seq)
                .u64(self.balance_a).u64(self.balance_b).getvalue())

    @property
    def fully_signed(self) -> bool:
        return bool(self.sig_a) and bool(self.sig_b)


def encode_commitment(tx: CommitmentTx) -> bytes:
    """Core followed by ``u16 len | sig_a | u16 len | sig_b`` (empty when unsigned)."""
    return Writer().raw(tx.core()).blob16(tx.sig_a).blob16(tx.sig_b).getvalue()


def decode_commitment(data: bytes) -> CommitmentTx:
    r = Reader(data)
    r.expect(KIND_COMMITMENT)
    tx = CommitmentTx(r.text(), r.u64(), r.u64(), r.u64(), r.blob16(), r.blob16())
    r.done()
    return tx


def commitment_signatures_valid(tx: CommitmentTx, party_a: str, party_b: str,
                                registry: KeyRegistry) -> bool:
    msg = tx.core()
    return (verify_signature(registry.pubkey_of(party_a), tx.sig_a, msg)
            and verify_signature(registry.pubkey_of(party_b), tx.sig_b, msg))


@dataclass(frozen=True)
class PaymentEnvelope:
    """Cheque carried by a content Interest.

    ``remaining`` is what the enclosed payer-signed commitment transfers to
    the receiving hop.
    """

    remaining: int
    commitment: CommitmentTx


class Channel:
    def __init__(self, channel_id: str, party_a: str, party_b: str,
                 deposit_a: int, deposit_b: int, registry: KeyRegistry):
        self.channel_id = channel_id
        self.party_a = party_a
        self.party_b = party_b
        self.deposit_a = deposit_a
        self.deposit_b = deposit_b
        self.balance_a = deposit_a
        self.balance_b = deposit_b
        self.seq = 0
        self.status = OPEN
        self.latest: Optional[CommitmentTx] = None
        self.registry = registry

    @property
    def total(self) -> int:
        return self.deposit_a + self.deposit_b

    @property
    def settled(self) -> bool:
        return self.status == SETTLED

    def parties(self) -> tuple[str, str]:
        return (self.party_a, self.party_b)

    def peer_of(self, node_id: str) -> str:
        if node_id == self.party_a:
            return self.party_b
        if node_id == self.party_b:
            return self.party_a
        raise ValueError(f"{node_id} is not a party to {self.channel_id}")

    def balance_of(self, node_id: str) -> int:
        if node_id == self.party_a:
            return self.balance_a
        if node_id == self.party_b:
            return self.balance_b
        raise ValueError(f"{node_id} is not a party to {self.channel_id}")

    def deposit_of(self, node_id: str) -> int:
        return self.deposit_a if node_id == self.party_a else self.deposit_b

    def mark_settled(self, final_tx: CommitmentTx) -> None:
        self.status = SETTLED
        self.latest = final_tx

    def __repr__(self):
        return (f"Channel({self.channel_id!r}, seq={self.seq}, "
                f"balances=({self.balance_a}, {self.balance_b}), {self.status})")


def channel_id_for(a: str, b: str) -> str:
    return f"{a}>{b}"


def _sign_as(tx: CommitmentTx, channel: Channel, signer: Identity) -> CommitmentTx:
    sig = signer.sign(tx.core())
    if signer.node_id == channel.party_a:
        return replace(tx, sig_a=sig)
    if signer.node_id == channel.party_b:
        return replace(tx, sig_b=sig)
    raise ValueError(f"{signer.node_id} is not a party to {channel.channel_id}")


def open_channel(a: Identity, b: Identity, deposit_a: int, deposit_b: int,
                 ledger) -> Channel:
    """Escrow both deposits on ``ledger`` and start a channel at seq 0.

    The seq-0 commitment is co-signed immediately so that a channel with no
    traffic can still be settled.
    """
    if a.node_id == b.node_id:
        raise ValueError("a channel needs two distinct parties")
    for ident in (a, b):
        if ledger.pubkey_of(ident.node_id) != ident.pubkey:
            raise BadSignature(f"{ident.node_id}'s key differs from its registration")
    cid = channel_id_for(a.node_id, b.node_id)
    ledger.lock_escrow(cid, {a.node_id: check_tokens(deposit_a), b.node_id: check_tokens(deposit_b)})
    ch = Channel(cid, a.node_id, b.node_id, deposit_a, deposit_b, ledger)
    tx = CommitmentTx(cid, 0, deposit_a, deposit_b)
    ch.latest = _sign_as(_sign_as(tx, ch, a), ch, b)
    return ch


def make_payment(channel: Channel, payer: Identity, amount: int) -> CommitmentTx:
    """Payer-signed commitment at ``seq + 1`` moving ``amount`` to the peer."""
    if channel.settled:
        raise ChannelSettled(f"{channel.channel_id} is settled")
    check_tokens(amount)
    have = channel.balance_of(payer.node_id)
    if have < amount:
        raise InsufficientChannelBalance(
            f"{payer.node_id} holds {have}u in {channel.channel_id}, needs {amount}u")
    if payer.node_id == channel.party_a:
        bal_a, bal_b = channel.balance_a - amount, add_tokens(channel.balance_b, amount)
    else:
        bal_a, bal_b = add_tokens(channel.balance_a, amount), channel.balance_b - amount
    tx = CommitmentTx(channel.channel_id, channel.seq + 1, bal_a, bal_b)
    return _sign_as(tx, channel, payer)


def accept_payment(channel: Channel, tx: CommitmentTx, acceptor: Identity) -> Channel:
    """Validate an inbound commitment, countersign it and advance the channel."""
    if channel.settled:
        raise ChannelSettled(f"{channel.channel_id} is settled")
    if tx.channel_id != channel.channel_id:
        raise WrongDirection(f"commitment for {tx.channel_id} offered on {channel.channel_id}")
    if tx.seq != channel.seq + 1:
        raise StaleSeq(f"{channel.channel_id} is at seq {channel.seq}, got {tx.seq}")
    if tx.balance_a + tx.balance_b != channel.total:
        raise NonConserving(
            f"{tx.balance_a} + {tx.balance_b} != deposits {channel.total}")
    new_mine = tx.balance_a if acceptor.node_id == channel.party_a else tx.balance_b
    if new_mine < channel.balance_of(acceptor.node_id):
        raise WrongDirection(f"commitment would move tokens away from {acceptor.node_id}")
    payer = channel.peer_of(acceptor.node_id)
    payer_sig = tx.sig_a if payer == channel.party_a else tx.sig_b
    if not verify_signature(channel.registry.pubkey_of(payer), payer_sig, tx.core()):
        raise BadSignature(f"payer signature on {channel.channel_id} seq {tx.seq} is invalid")
    full = _sign_as(tx, channel, acceptor)
    channel.balance_a, channel.balance_b = tx.balance_a, tx.balance_b
    channel.seq = tx.seq
    channel.latest = full
    return channel


def transferred(channel: Channel, tx: CommitmentTx, payee: str) -> int:
    """Amount ``tx`` moves to ``payee`` relative to the channel's current state."""
    new = tx.balance_a if payee == channel.party_a else tx.balance_b
    return new - channel.balance_of(payee)


def split_and_forward(node: Identity, envelope_in: PaymentEnvelope, own_price: int,
                      next_hop_channel: Optional[Channel] = None
                      ) -> tuple[int, Optional[PaymentEnvelope]]:
    """Keep ``own_price`` and re-issue the remainder on the next-hop channel.

    With no next hop (the producer) the whole remainder is kept.
    """
    remaining = envelope_in.remaining
    if remaining < own_price:
        raise UnderfundedEnvelope(f"cheque of {remaining}u does not cover price {own_price}u")
    if next_hop_channel is None:
        return remaining, None
    out_amount = remaining - own_price
    tx = make_payment(next_hop_channel, node, out_amount)
    return own_price, PaymentEnvelope(out_amount, tx)


class ChannelBook:
    """All channels of a run, keyed by ordered party pair."""

    def __init__(self):
        self._channels: dict[tuple[str, str], Channel] = {}

    def add(self, channel: Channel) -> Channel:
        self._channels[(channel.party_a, channel.party_b)] = channel
        return channel

    def between(self, payer: str, payee: str) -> Channel:
        """Channel used for ``payer`` paying ``payee``; the payer-opened one wins."""
        ch = self._channels.get((payer, payee)) or self._channels.get((payee, payer))
        if ch is None:
            raise NoChannel(f"no channel between {payer} and {payee}")
        return ch

    def of(self, node_id: str) -> list[Channel]:
        return [c for c in self._channels.values() if node_id in c.parties()]

    def __iter__(self) -> Iterator[Channel]:
        return iter(self._channels.values())

    def __len__(self):
        return len(self._channels)

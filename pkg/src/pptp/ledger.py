"""In-process mock blockchain.

The ledger is a deterministic state machine rather than a consensus network:
it registers identities with a security deposit, escrows channel deposits,
settles co-signed commitments and adjudicates price-equivocation proofs.
Tokens only enter the system through :meth:`Ledger.register` and only leave
it through burns, so ``minted == on_chain + deposits + escrow + burned``
holds after every operation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import (
    AlreadySettled,
    BadSignature,
    DuplicateChannel,
    DuplicateRegistration,
    InsufficientOnChainFunds,
    InvariantViolation,
    MissingSignature,
    NonConserving,
    StaleSeq,
    UnregisteredIdentity,
)
from .model import TagItem, add_tokens, check_tokens
from .pricing import detect_conflict
from .signing import NodeId, verify_item

PUNISHED = "Punished"
REJECTED = "Rejected"


@dataclass
class Account:
    node: NodeId
    balance: int
    security_deposit: int
    flagged: bool = False


@dataclass(frozen=True)
class Verdict:
    status: str
    advertiser: str
    reason: Optional[str] = None
    burned: int = 0

    @property
    def punished(self) -> bool:
        return self.status == PUNISHED


@dataclass(frozen=True)
class DisputeRecord:
    proof: tuple[TagItem, TagItem]
    submitter: Optional[str]
    verdict: Verdict
    height: int


class Ledger:
    def __init__(self):
        self.accounts: dict[str, Account] = {}
        self.escrows: dict[str, int] = {}
        self.settled: dict[str, tuple[int, int]] = {}
        self.dispute_log: list[DisputeRecord] = []
        self.height = 0
        self.minted = 0
        self.burned = 0
        self._submitted_seq: dict[str, int] = {}

    # identities

    def register(self, node_id: str, pubkey: bytes, initial_balance: int = 0,
                 security_deposit: int = 0) -> Account:
        if node_id in self.accounts:
            raise DuplicateRegistration(f"{node_id!r} is already registered")
        check_tokens(initial_balance)
        check_tokens(security_deposit)
        acct = Account(NodeId(node_id, bytes(pubkey)), initial_balance, security_deposit)
        self.accounts[node_id] = acct
        self.minted = add_tokens(self.minted, initial_balance, security_deposit)
        self.height += 1
        return acct

    def account(self, node_id: str) -> Account:
        try:
            return self.accounts[node_id]
        except KeyError:
            raise UnregisteredIdentity(node_id) from None

    def pubkey_of(self, node_id: str) -> bytes:
        return self.account(node_id).node.pubkey

    def balance_of(self, node_id: str) -> int:
        """On-chain balance, excluding channel escrow and the security deposit."""
        return self.account(node_id).balance

    def is_flagged(self, node_id: str) -> bool:
        return self.account(node_id).flagged

    # channels

    def lock_escrow(self, channel_id: str, contributions: dict[str, int]) -> None:
        """Move each party's deposit from its on-chain balance into escrow."""
        if channel_id in self.escrows or channel_id in self.settled:
            raise DuplicateChannel(f"channel {channel_id!r} already exists")
        for node_id, amount in contributions.items():
            acct = self.account(node_id)
            if acct.balance < check_tokens(amount):
                raise InsufficientOnChainFunds(
                    f"{node_id} holds {acct.balance}u on-chain, cannot deposit {amount}u")
        for node_id, amount in contributions.items():
            self.accounts[node_id].balance -= amount
        self.escrows[channel_id] = add_tokens(*contributions.values())
        self.height += 1

    def settle(self, channel, final_tx) -> None:
        """Release a channel's escrow according to a co-signed commitment."""
        from .payments import commitment_signatures_valid

        cid = channel.channel_id
        if cid in self.settled or channel.settled:
            raise AlreadySettled(f"channel {cid!r} is already settled")
        if cid not in self.escrows:
            raise InvariantViolation(f"channel {cid!r} has no escrow")
        if final_tx.channel_id != cid:
            raise ValueError(f"commitment belongs to {final_tx.channel_id!r}, not {cid!r}")
        if not final_tx.sig_a or not final_tx.sig_b:
            raise MissingSignature("settlement needs both parties' signatures")
        if not commitment_signatures_valid(final_tx, channel.party_a, channel.party_b, self):
            raise BadSignature("commitment signature does not verify")
        if final_tx.seq < self._submitted_seq.get(cid, 0):
            raise StaleSeq(f"seq {final_tx.seq} is older than a submitted commitment")
        if final_tx.balance_a + final_tx.balance_b != self.escrows[cid]:
            raise NonConserving("commitment balances do not match the escrow")
        self._submitted_seq[cid] = final_tx.seq
        self.accounts[channel.party_a].balance += final_tx.balance_a
        self.accounts[channel.party_b].balance += final_tx.balance_b
        del self.escrows[cid]
        self.settled[cid] = (final_tx.balance_a, final_tx.balance_b)
        channel.mark_settled(final_tx)
        self.height += 1

    # disputes

    def submit_conflict(self, proof: tuple[TagItem, TagItem],
                        submitter: Optional[str] = None) -> Verdict:
        """Adjudicate two advertisements; punish the advertiser if they conflict."""
        a, b = proof
        verdict = self._judge(a, b)
        if verdict.punished:
            acct = self.accounts[a.advertiser]
            self.burned += acct.security_deposit
            acct.security_deposit = 0
            acct.flagged = True
        self.dispute_log.append(DisputeRecord((a, b), submitter, verdict, self.height))
        self.height += 1
        return verdict

    def _judge(self, a: TagItem, b: TagItem) -> Verdict:
        for item in (a, b):
            try:
                ok = verify_item(item, self)
            except UnregisteredIdentity:
                return Verdict(REJECTED, item.advertiser, "Unregistered")
            if not ok:
                return Verdict(REJECTED, item.advertiser, "BadSignature")
        if not detect_conflict(a, b, self):
            return Verdict(REJECTED, a.advertiser, "NoConflict")
        acct = self.accounts[a.advertiser]
        if acct.flagged:
            return Verdict(REJECTED, a.advertiser, "AlreadyPunished")
        return Verdict(PUNISHED, a.advertiser, None, acct.security_deposit)

    # accounting

    def totals(self) -> dict[str, int]:
        on_chain = sum(a.balance for a in self.accounts.values())
        deposits = sum(a.security_deposit for a in self.accounts.values())
        escrow = sum(self.escrows.values())
        return {
            "minted": self.minted,
            "on_chain": on_chain,
            "unburned_deposits": deposits,
            "escrow": escrow,
            "burned": self.burned,
        }

    def check_conservation(self) -> None:
        t = self.totals()
        held = t["on_chain"] + t["unburned_deposits"] + t["escrow"] + t["burned"]
        if held != t["minted"]:
            raise InvariantViolation(f"ledger holds {held}u but {t['minted']}u were minted")

    def punished(self) -> list[str]:
        return sorted(n for n, a in self.accounts.items() if a.flagged)

"""Exception hierarchy shared by every layer of the stack.

Protocol-level failures (a dropped probe, a stale cheque) derive from
:class:`ProtocolError` so the simulator can count them instead of aborting.
Configuration problems derive from :class:`ScenarioError`.
"""


class PPTPError(Exception):
    """Base class for all errors raised by this package."""


class ProtocolError(PPTPError):
    """A packet- or payment-level failure that a running node survives."""

    reason = "protocol-error"


class UnregisteredIdentity(PPTPError):
    """A node id has no public key on the ledger."""

    def __init__(self, node_id):
        super().__init__(f"identity {node_id!r} is not registered")
        self.node_id = node_id


class TokenOverflow(PPTPError, ArithmeticError):
    pass


class InvariantViolation(PPTPError):
    """An internal consistency check failed; the run cannot be trusted."""


# forwarding

class NoRoute(ProtocolError):
    reason = "no-route"


class TagMismatch(ProtocolError):
    reason = "tag-mismatch"


class PitDuplicate(ProtocolError):
    reason = "pit-duplicate"


class NoPitEntry(ProtocolError):
    reason = "no-pit-entry"


# pricing

class EquivocationRefused(PPTPError):
    pass


class NoActivePrice(ProtocolError):
    reason = "no-active-price"


class FaultInjectionDisabled(PPTPError):
    pass


# consumer

class BadSignature(ProtocolError):
    """A signature failed to verify.

    ``index`` is set when the failure refers to a position in a path tag.
    """

    reason = "bad-signature"

    def __init__(self, message="signature does not verify", index=None):
        super().__init__(message)
        self.index = index


class StalePrice(ProtocolError):
    reason = "stale-price"

    def __init__(self, index, now):
        super().__init__(f"tag item {index} is not valid at tick {now}")
        self.index = index
        self.now = now


class NoSamples(ProtocolError):
    reason = "no-samples"


class UnknownArm(PPTPError, KeyError):
    pass


# payments

class NoChannel(ProtocolError):
    reason = "no-channel"


class InsufficientChannelBalance(ProtocolError):
    reason = "insufficient-channel-balance"


class ChannelSettled(ProtocolError):
    reason = "channel-settled"


class StaleSeq(ProtocolError):
    reason = "stale-seq"


class NonConserving(ProtocolError):
    reason = "non-conserving"


class WrongDirection(ProtocolError):
    reason = "wrong-direction"


class UnderfundedEnvelope(ProtocolError):
    reason = "underfunded-envelope"


class DuplicateChannel(PPTPError):
    pass


class InsufficientOnChainFunds(PPTPError):
    pass


# ledger

class DuplicateRegistration(PPTPError):
    pass


class MissingSignature(PPTPError):
    pass


class AlreadySettled(PPTPError):
    pass


# scenario files

class ScenarioError(PPTPError):
    """Configuration error, optionally tied to a scenario line number."""

    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class ScenarioSyntaxError(ScenarioError):
    pass


class DanglingReference(ScenarioError):
    pass


class DuplicateDirective(ScenarioError):
    pass

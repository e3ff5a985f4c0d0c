"""Node identities and signatures over canonical encodings.

Ed25519 is used because its signatures are deterministic, which keeps whole
simulation runs byte-reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Protocol

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .codec import encode_item_core
from .model import TagItem


class KeyRegistry(Protocol):
    def pubkey_of(self, node_id: str) -> bytes: ...


@dataclass(frozen=True)
class NodeId:
    id: str
    pubkey: bytes


class Identity:
    """A node's signing key together with its id."""

    def __init__(self, node_id: str, key: Ed25519PrivateKey):
        self.node_id = node_id
        self._key = key
        self.pubkey = key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    @classmethod
    def derive(cls, node_id: str, salt: bytes = b"") -> "Identity":
        """Deterministic key for ``node_id``; distinct salts give distinct keys."""
        seed = hashlib.sha256(b"pptp-identity\x00" + salt + b"\x00" + node_id.encode()).digest()
        return cls(node_id, Ed25519PrivateKey.from_private_bytes(seed))

    @property
    def node(self) -> NodeId:
        return NodeId(self.node_id, self.pubkey)

    def sign(self, message: bytes) -> bytes:
        return self._key.sign(message)

    def __repr__(self):
        return f"Identity({self.node_id!r})"


def verify_signature(pubkey: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(pubkey).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True


def sign_item(key: Identity, item: TagItem) -> bytes:
    return key.sign(encode_item_core(item))


def signed(item: TagItem, key: Identity) -> TagItem:
    """Return ``item`` with its signature filled in by ``key``."""
    return replace(item, signature=sign_item(key, item))


def verify_item(item: TagItem, registry: KeyRegistry) -> bool:
    """Check the item signature under the advertiser's registered key.

    An advertiser unknown to ``registry`` raises ``UnregisteredIdentity``
    instead of returning False.
    """
    pubkey = registry.pubkey_of(item.advertiser)
    return verify_signature(pubkey, item.signature, encode_item_core(item))

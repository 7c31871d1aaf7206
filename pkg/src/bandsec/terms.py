"""Message-term algebra with perfect-cryptography semantics.

Terms are immutable, hashable, and compared structurally; they are the
common currency of the protocol engine, the network simulator, and the
bounded verifier.  Hash, Sig and KdfKey are one-way constructors: there
is no operation that recovers their arguments.  Diffie-Hellman shared
values normalize their exponent pair, so the value computed from (x, y)
equals the value computed from (y, x).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator


class AtomKind(str, Enum):
    CONSTANT = "constant"
    NONCE = "nonce"
    TIMESTAMP = "timestamp"
    IDENTITY = "identity"
    PASSWORD = "password"
    PAYLOAD = "payload"
    NUMBER = "number"


class StructuralError(Exception):
    """A destructor was applied to a term of the wrong shape."""


class DecryptionError(Exception):
    """A ciphertext could not be opened with the offered key."""


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Term):
    name: str
    kind: AtomKind = AtomKind.CONSTANT


@dataclass(frozen=True)
class Pair(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Hash(Term):
    body: Term


@dataclass(frozen=True)
class SymEnc(Term):
    body: Term
    key: Term


@dataclass(frozen=True)
class PubKey(Term):
    owner: str


@dataclass(frozen=True)
class PrivKey(Term):
    owner: str


@dataclass(frozen=True)
class AsymEnc(Term):
    body: Term
    pubkey: Term

    def __post_init__(self) -> None:
        if not isinstance(self.pubkey, PubKey):
            raise StructuralError("asymmetric encryption requires a PubKey")


@dataclass(frozen=True)
class Sig(Term):
    body: Term
    signkey: Term

    def __post_init__(self) -> None:
        if not isinstance(self.signkey, PrivKey):
            raise StructuralError("signing requires a PrivKey")


@dataclass(frozen=True)
class DhPub(Term):
    exponent: str


@dataclass(frozen=True)
class DhShared(Term):
    exponents: tuple[str, str]

    def __post_init__(self) -> None:
        # Canonical order makes DhShared((x, y)) == DhShared((y, x)).
        a, b = self.exponents
        if a > b:
            object.__setattr__(self, "exponents", (b, a))


@dataclass(frozen=True)
class KdfKey(Term):
    inputs: tuple[Term, ...]

    def __post_init__(self) -> None:
        if not self.inputs:
            raise StructuralError("kdf requires at least one input")


# ---------------------------------------------------------------------------
# Constructors and destructors
# ---------------------------------------------------------------------------


def pair(a: Term, b: Term) -> Term:
    return Pair(a, b)


def project_left(t: Term) -> Term:
    if not isinstance(t, Pair):
        raise StructuralError(f"not a pair: {t!r}")
    return t.left


def project_right(t: Term) -> Term:
    if not isinstance(t, Pair):
        raise StructuralError(f"not a pair: {t!r}")
    return t.right


def senc(body: Term, key: Term) -> Term:
    return SymEnc(body, key)


def sdec(ct: Term, key: Term) -> Term:
    if not isinstance(ct, SymEnc):
        raise DecryptionError("not a symmetric ciphertext")
    if ct.key != key:
        raise DecryptionError("wrong symmetric key")
    return ct.body


def aenc(body: Term, pub: Term) -> Term:
    if not isinstance(pub, PubKey):
        raise StructuralError("aenc requires a PubKey")
    return AsymEnc(body, pub)


def adec(ct: Term, priv: Term) -> Term:
    if not isinstance(priv, PrivKey):
        raise StructuralError("adec requires a PrivKey")
    if not isinstance(ct, AsymEnc):
        raise DecryptionError("not an asymmetric ciphertext")
    if ct.pubkey != PubKey(priv.owner):
        raise DecryptionError("private key does not match ciphertext owner")
    return ct.body


def sign(body: Term, priv: Term) -> Term:
    if not isinstance(priv, PrivKey):
        raise StructuralError("sign requires a PrivKey")
    return Sig(body, priv)


def verify_sig(sig: Term, body: Term, pub: Term) -> bool:
    """Never raises: any mismatch simply verifies false."""
    if not isinstance(sig, Sig) or not isinstance(pub, PubKey):
        return False
    return sig.body == body and sig.signkey == PrivKey(pub.owner)


def hash_term(t: Term) -> Term:
    return Hash(t)


def dh_pub(x: str) -> Term:
    return DhPub(x)


def dh_combine(pub: Term, x: str) -> Term:
    if not isinstance(pub, DhPub):
        raise StructuralError("dh_combine requires a DhPub")
    return DhShared((pub.exponent, x))


def kdf(inputs: list[Term] | tuple[Term, ...]) -> Term:
    return KdfKey(tuple(inputs))


# ---------------------------------------------------------------------------
# Traversal helpers
# ---------------------------------------------------------------------------


def children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, Pair):
        return (t.left, t.right)
    if isinstance(t, Hash):
        return (t.body,)
    if isinstance(t, SymEnc):
        return (t.body, t.key)
    if isinstance(t, AsymEnc):
        return (t.body, t.pubkey)
    if isinstance(t, Sig):
        return (t.body, t.signkey)
    if isinstance(t, KdfKey):
        return t.inputs
    return ()


def depth(t: Term) -> int:
    kids = children(t)
    if not kids:
        return 1
    return 1 + max(depth(k) for k in kids)


def subterms(t: Term) -> Iterator[Term]:
    """Yields t and every nested subterm, depth first."""
    yield t
    for k in children(t):
        yield from subterms(k)


def atoms_in(t: Term) -> Iterator[Atom]:
    for s in subterms(t):
        if isinstance(s, Atom):
            yield s

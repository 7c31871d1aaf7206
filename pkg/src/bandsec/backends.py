"""Symbolic and concrete crypto backends behind one duck-typed surface.

Protocol code is written once against a backend object.  The symbolic
backend manipulates terms with perfect-cryptography semantics and is
what the simulator and verifier use.  The concrete backend operates on
tagged byte strings with real primitives (AES-GCM, X25519, Ed25519,
HKDF-SHA256): ciphertexts reveal nothing but length, any bit flip makes
decryption fail, and every message uses a fresh nonce.

Concrete values reuse the canonical tag bytes of the wire encoding,
with three extra tags for raw key material:

    0x20 KEY      32-byte symmetric key
    0x21 ENCPUB   X25519 public key (32 bytes)
    0x22 SIGPUB   Ed25519 public key (32 bytes)

Private keys never appear as values; they are opaque handles held by a
principal.
"""

from __future__ import annotations

import hashlib
import random
import struct

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import terms, wire
from .terms import AtomKind, DecryptionError, StructuralError, Term


class SymbolicBackend:
    """Terms in, terms out; equality is structural."""

    name = "symbolic"

    def atom(self, name: str, kind: AtomKind = AtomKind.CONSTANT) -> Term:
        return terms.Atom(name, kind)

    def timestamp(self, t: int) -> Term:
        return terms.Atom(str(t), AtomKind.TIMESTAMP)

    def ts_int(self, v: Term) -> int | None:
        if isinstance(v, terms.Atom) and v.kind is AtomKind.TIMESTAMP:
            try:
                return int(v.name)
            except ValueError:
                return None
        return None

    def is_atom(self, v, kind: AtomKind | None = None) -> bool:
        return isinstance(v, terms.Atom) and (kind is None or v.kind is kind)

    def atom_name(self, v: Term) -> str:
        if not isinstance(v, terms.Atom):
            raise StructuralError("not an atom")
        return v.name

    def pair(self, a: Term, b: Term) -> Term:
        return terms.pair(a, b)

    def unpair(self, v: Term) -> tuple[Term, Term]:
        return terms.project_left(v), terms.project_right(v)

    def is_pair(self, v) -> bool:
        return isinstance(v, terms.Pair)

    def senc(self, body: Term, key: Term) -> Term:
        return terms.senc(body, key)

    def sdec(self, ct: Term, key: Term) -> Term:
        return terms.sdec(ct, key)

    def aenc(self, body: Term, pub: Term) -> Term:
        return terms.aenc(body, pub)

    def adec(self, ct: Term, priv: Term) -> Term:
        return terms.adec(ct, priv)

    def sign(self, body: Term, priv: Term) -> Term:
        return terms.sign(body, priv)

    def verify(self, sig: Term, body: Term, pub: Term) -> bool:
        return terms.verify_sig(sig, body, pub)

    def hash(self, v: Term) -> Term:
        return terms.hash_term(v)

    def kdf(self, inputs: list[Term]) -> Term:
        return terms.kdf(inputs)

    def gen_enc_keys(self, owner: str) -> tuple[Term, Term]:
        return terms.PubKey(owner), terms.PrivKey(owner)

    def gen_sig_keys(self, owner: str) -> tuple[Term, Term]:
        return terms.PubKey(owner), terms.PrivKey(owner)

    def dh_exponent(self, label: str) -> str:
        return label

    def dh_pub(self, exponent: str) -> Term:
        return terms.dh_pub(exponent)

    def dh_shared(self, pub: Term, exponent: str) -> Term:
        return terms.dh_combine(pub, exponent)

    def digest(self, v: Term) -> bytes:
        return hashlib.sha256(wire.encode(v)).digest()


_KEY, _ENCPUB, _SIGPUB = 0x20, 0x21, 0x22


def _tagged(tag: int, payload: bytes) -> bytes:
    return bytes([tag]) + payload


def _lp(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


class ConcreteBackend:
    """Tagged byte values with real AEAD, signatures, and key agreement.

    Key generation draws from a seeded RNG so tests are reproducible;
    per-message AEAD nonces come from a monotonic counter and are never
    reused within a backend instance.
    """

    name = "concrete"

    def __init__(self, seed: int = 0) -> None:
        self._rng = random.Random(seed)
        self._nonce_counter = 0

    def _next_nonce(self) -> bytes:
        self._nonce_counter += 1
        return self._nonce_counter.to_bytes(12, "big")

    def _rand32(self) -> bytes:
        return self._rng.getrandbits(256).to_bytes(32, "big")

    # -- structure ---------------------------------------------------------

    def atom(self, name: str, kind: AtomKind = AtomKind.CONSTANT) -> bytes:
        body = bytes([list(AtomKind).index(kind)]) + _lp(name.encode())
        return _tagged(0x01, body)

    def timestamp(self, t: int) -> bytes:
        return self.atom(str(t), AtomKind.TIMESTAMP)

    def ts_int(self, v: bytes) -> int | None:
        if self.is_atom(v, AtomKind.TIMESTAMP):
            try:
                return int(self.atom_name(v))
            except ValueError:
                return None
        return None

    def is_atom(self, v: bytes, kind: AtomKind | None = None) -> bool:
        if not isinstance(v, bytes) or not v or v[0] != 0x01:
            return False
        if kind is None:
            return True
        return len(v) > 1 and v[1] == list(AtomKind).index(kind)

    def atom_name(self, v: bytes) -> str:
        if not self.is_atom(v):
            raise StructuralError("not an atom value")
        (n,) = struct.unpack(">I", v[2:6])
        return v[6 : 6 + n].decode()

    def pair(self, a: bytes, b: bytes) -> bytes:
        return _tagged(0x02, _lp(a) + _lp(b))

    def unpair(self, v: bytes) -> tuple[bytes, bytes]:
        if not self.is_pair(v):
            raise StructuralError("not a pair value")
        (n,) = struct.unpack(">I", v[1:5])
        a = v[5 : 5 + n]
        (m,) = struct.unpack(">I", v[5 + n : 9 + n])
        b = v[9 + n : 9 + n + m]
        if len(b) != m:
            raise StructuralError("truncated pair")
        return a, b

    def is_pair(self, v: bytes) -> bool:
        return isinstance(v, bytes) and len(v) >= 9 and v[0] == 0x02

    # -- symmetric ---------------------------------------------------------

    def _key_bytes(self, key: bytes) -> bytes:
        if isinstance(key, bytes) and key and key[0] == _KEY and len(key) == 33:
            return key[1:]
        # Any structured value can serve as key material.
        return hashlib.sha256(key).digest()

    def senc(self, body: bytes, key: bytes) -> bytes:
        nonce = self._next_nonce()
        ct = AESGCM(self._key_bytes(key)).encrypt(nonce, body, b"")
        return _tagged(0x04, nonce + ct)

    def sdec(self, ct: bytes, key: bytes) -> bytes:
        if not isinstance(ct, bytes) or not ct or ct[0] != 0x04 or len(ct) < 13:
            raise DecryptionError("not a symmetric ciphertext")
        try:
            return AESGCM(self._key_bytes(key)).decrypt(ct[1:13], ct[13:], b"")
        except InvalidTag as exc:
            raise DecryptionError("authenticated decryption failed") from exc

    # -- asymmetric (ECIES over X25519 + AES-GCM) --------------------------

    def gen_enc_keys(self, owner: str) -> tuple[bytes, X25519PrivateKey]:
        priv = X25519PrivateKey.from_private_bytes(self._rand32())
        pub = priv.public_key().public_bytes_raw()
        return _tagged(_ENCPUB, pub), priv

    def aenc(self, body: bytes, pub: bytes) -> bytes:
        if not isinstance(pub, bytes) or not pub or pub[0] != _ENCPUB:
            raise StructuralError("aenc requires an encryption public key value")
        eph = X25519PrivateKey.from_private_bytes(self._rand32())
        shared = eph.exchange(X25519PublicKey.from_public_bytes(pub[1:]))
        key = hashlib.sha256(shared).digest()
        nonce = self._next_nonce()
        ct = AESGCM(key).encrypt(nonce, body, b"")
        return _tagged(0x05, eph.public_key().public_bytes_raw() + nonce + ct)

    def adec(self, ct: bytes, priv: X25519PrivateKey) -> bytes:
        if not isinstance(ct, bytes) or not ct or ct[0] != 0x05 or len(ct) < 45:
            raise DecryptionError("not an asymmetric ciphertext")
        eph_pub = X25519PublicKey.from_public_bytes(ct[1:33])
        key = hashlib.sha256(priv.exchange(eph_pub)).digest()
        try:
            return AESGCM(key).decrypt(ct[33:45], ct[45:], b"")
        except InvalidTag as exc:
            raise DecryptionError("authenticated decryption failed") from exc

    # -- signatures --------------------------------------------------------

    def gen_sig_keys(self, owner: str) -> tuple[bytes, Ed25519PrivateKey]:
        priv = Ed25519PrivateKey.from_private_bytes(self._rand32())
        return _tagged(_SIGPUB, priv.public_key().public_bytes_raw()), priv

    def sign(self, body: bytes, priv: Ed25519PrivateKey) -> bytes:
        return _tagged(0x06, priv.sign(body))

    def verify(self, sig: bytes, body: bytes, pub: bytes) -> bool:
        if not isinstance(sig, bytes) or not sig or sig[0] != 0x06:
            return False
        if not isinstance(pub, bytes) or not pub or pub[0] != _SIGPUB:
            return False
        try:
            Ed25519PublicKey.from_public_bytes(pub[1:]).verify(sig[1:], body)
            return True
        except InvalidSignature:
            return False

    # -- hashing and key derivation ----------------------------------------

    def hash(self, v: bytes) -> bytes:
        return _tagged(0x03, hashlib.sha256(v).digest())

    def kdf(self, inputs: list[bytes]) -> bytes:
        material = b"".join(_lp(i) for i in inputs)
        return _tagged(_KEY, hashlib.sha256(b"bandsec-kdf" + material).digest())

    # -- Diffie-Hellman ----------------------------------------------------

    def dh_exponent(self, label: str) -> X25519PrivateKey:
        return X25519PrivateKey.from_private_bytes(self._rand32())

    def dh_pub(self, exponent: X25519PrivateKey) -> bytes:
        return _tagged(_ENCPUB, exponent.public_key().public_bytes_raw())

    def dh_shared(self, pub: bytes, exponent: X25519PrivateKey) -> bytes:
        if not isinstance(pub, bytes) or not pub or pub[0] != _ENCPUB:
            raise StructuralError("dh_shared requires a DH public value")
        shared = exponent.exchange(X25519PublicKey.from_public_bytes(pub[1:]))
        return _tagged(_KEY, hashlib.sha256(b"bandsec-dh" + shared).digest())

    def digest(self, v: bytes) -> bytes:
        return hashlib.sha256(v).digest()

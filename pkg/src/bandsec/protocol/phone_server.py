"""Phone/server login, station-to-station key exchange, and the server model.

Login sends {T1, ID, hash(PW)} under the server's public key; the
server checks timestamp validity, replays, and the stored credential
hash, and drops silently on any failure.  The follow-up symmetric key
comes from a station-to-station exchange: signed Diffie-Hellman halves,
with each signature encrypted under the fresh session key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from ..terms import AtomKind, DecryptionError, StructuralError
from .base import (
    DEFAULT_FRESHNESS_WINDOW,
    Principal,
    RejectReason,
    Rejected,
    Role,
    SessionState,
)
from .variants import ConfigurationError


@dataclass
class WebServer(Principal):
    """Stores hash(PW) per user id; records are encrypted at rest."""

    credentials: dict[str, Any] = field(default_factory=dict)
    storage_key: Any = None
    records: dict[str, Any] = field(default_factory=dict)
    storage_encrypted: bool = True
    login_seen: set[tuple[int, bytes]] = field(default_factory=set)
    logins: list[str] = field(default_factory=list)

    def enroll(self, user_id: str, password: str) -> None:
        b = self.backend
        self.credentials[user_id] = b.hash(b.atom(password, AtomKind.PASSWORD))

    def store_record(self, user_id: str, record: Any) -> None:
        if not self.storage_encrypted:
            self.records[user_id] = record
            return
        if self.storage_key is None:
            self.storage_key = self.backend.atom(
                self.fresh_name("storageKey"), AtomKind.NONCE
            )
        self.records[user_id] = self.backend.senc(record, self.storage_key)

    def storage_blob(self) -> list[Any]:
        """What an attacker gets from a physical datastore capture."""
        return list(self.credentials.values()) + list(self.records.values())


@dataclass(frozen=True)
class LoginAccepted:
    user_id: str
    timestamp: int | None


def login_request(phone: Principal, user_id: str, password: str, server_id: str = "W") -> Any:
    """Phone side of the login step; shape follows the active variant."""
    if phone.variant.server_plaintext:
        return plaintext_login(phone, user_id, password)
    b = phone.backend
    id_v = b.atom(user_id, AtomKind.IDENTITY)
    pw_v = b.atom(password, AtomKind.PASSWORD)
    server_keys = phone.peer_keys.get(server_id)
    if not server_keys or "enc_pub" not in server_keys:
        raise ConfigurationError("phone does not hold the server public key")
    body = b.pair(id_v, b.hash(pw_v))
    if phone.variant.timestamps_on("server"):
        body = b.pair(b.timestamp(phone.clock), body)
    return b.aenc(body, server_keys["enc_pub"])


def plaintext_login(phone: Principal, user_id: str, password: str) -> Any:
    """Baseline: raw credentials on the wire."""
    b = phone.backend
    return b.pair(b.atom(user_id, AtomKind.IDENTITY), b.atom(password, AtomKind.PASSWORD))


def login_process(server: WebServer, msg: Any) -> LoginAccepted | Rejected:
    b = server.backend
    if server.variant.server_plaintext:
        return _login_process_plaintext(server, msg)
    try:
        body = b.adec(msg, server.enc_priv)
    except DecryptionError:
        return Rejected(RejectReason.DECRYPT)
    ts: int | None = None
    try:
        if server.variant.timestamps_on("server"):
            ts_v, rest = b.unpair(body)
            ts = b.ts_int(ts_v)
        else:
            rest = body
        id_v, hash_v = b.unpair(rest)
        if not b.is_atom(id_v, AtomKind.IDENTITY):
            return Rejected(RejectReason.FORMAT)
        user_id = b.atom_name(id_v)
    except StructuralError:
        return Rejected(RejectReason.FORMAT)
    if server.variant.timestamps_on("server"):
        if ts is None:
            return Rejected(RejectReason.FORMAT)
        if abs(server.clock - ts) > DEFAULT_FRESHNESS_WINDOW:
            return Rejected(RejectReason.FRESHNESS)
        digest = b.digest(msg)
        if (ts, digest) in server.login_seen:
            return Rejected(RejectReason.REPLAY)
    stored = server.credentials.get(user_id)
    if stored is None or stored != hash_v:
        return Rejected(RejectReason.CREDENTIALS)
    if server.variant.timestamps_on("server"):
        server.login_seen.add((ts, digest))
    server.logins.append(user_id)
    return LoginAccepted(user_id, ts)


def _login_process_plaintext(server: WebServer, msg: Any) -> LoginAccepted | Rejected:
    b = server.backend
    try:
        id_v, pw_v = b.unpair(msg)
        if not b.is_atom(id_v, AtomKind.IDENTITY) or not b.is_atom(pw_v, AtomKind.PASSWORD):
            return Rejected(RejectReason.FORMAT)
        user_id = b.atom_name(id_v)
    except StructuralError:
        return Rejected(RejectReason.FORMAT)
    stored = server.credentials.get(user_id)
    if stored is None or stored != b.hash(pw_v):
        return Rejected(RejectReason.CREDENTIALS)
    server.logins.append(user_id)
    return LoginAccepted(user_id, None)


# ---------------------------------------------------------------------------
# Station-to-station key exchange
# ---------------------------------------------------------------------------


@dataclass
class StsInitiator:
    exponent: Any
    my_pub: Any
    key: Any = None


@dataclass
class StsResponder:
    exponent: Any
    my_pub: Any
    peer_pub: Any
    key: Any


def sts_initiate(phone: Principal) -> tuple[StsInitiator, Any]:
    b = phone.backend
    exp = b.dh_exponent(phone.fresh_name("x"))
    pub = b.dh_pub(exp)
    return StsInitiator(exponent=exp, my_pub=pub), pub


def sts_respond(server: Principal, msg1: Any) -> tuple[StsResponder, Any]:
    """msg2 = (g^y, {sig((g^y, g^x), sk(W))}K) with K = kdf(g^xy)."""
    b = server.backend
    exp = b.dh_exponent(server.fresh_name("y"))
    my_pub = b.dh_pub(exp)
    shared = b.dh_shared(msg1, exp)
    key = b.kdf([shared])
    auth = b.sign(b.pair(my_pub, msg1), server.sig_priv)
    return (
        StsResponder(exponent=exp, my_pub=my_pub, peer_pub=msg1, key=key),
        b.pair(my_pub, b.senc(auth, key)),
    )


def sts_finalize(
    phone: Principal, st: StsInitiator, msg2: Any, server_id: str
) -> tuple[Any, Any] | Rejected:
    """Verify the responder signature; reply with our own. Abort on failure."""
    b = phone.backend
    try:
        peer_pub, enc_auth = b.unpair(msg2)
        shared = b.dh_shared(peer_pub, st.exponent)
        key = b.kdf([shared])
        auth = b.sdec(enc_auth, key)
    except (StructuralError, DecryptionError):
        return Rejected(RejectReason.DECRYPT)
    expected_body = b.pair(peer_pub, st.my_pub)
    server_sig_pub = phone.peer_keys[server_id]["sig_pub"]
    if not b.verify(auth, expected_body, server_sig_pub):
        return Rejected(RejectReason.SIGNATURE)
    st.key = key
    my_auth = b.sign(b.pair(st.my_pub, peer_pub), phone.sig_priv)
    return key, b.senc(my_auth, key)


def sts_complete(server: Principal, st: StsResponder, msg3: Any, phone_id: str) -> Any | Rejected:
    b = server.backend
    try:
        auth = b.sdec(msg3, st.key)
    except DecryptionError:
        return Rejected(RejectReason.DECRYPT)
    expected_body = b.pair(st.peer_pub, st.my_pub)
    phone_sig_pub = server.peer_keys[phone_id]["sig_pub"]
    if not b.verify(auth, expected_body, phone_sig_pub):
        return Rejected(RejectReason.SIGNATURE)
    return st.key


def run_sts(phone: Principal, server: Principal) -> tuple[Any, Any, list[Any]]:
    """Honest in-order exchange; returns both keys and the wire trace."""
    st_p, m1 = sts_initiate(phone)
    st_w, m2 = sts_respond(server, m1)
    out = sts_finalize(phone, st_p, m2, server.id)
    if isinstance(out, Rejected):
        raise ConfigurationError(f"honest STS aborted: {out.reason}")
    key_p, m3 = out
    key_w = sts_complete(server, st_w, m3, phone.id)
    if isinstance(key_w, Rejected):
        raise ConfigurationError(f"honest STS aborted: {key_w.reason}")
    return key_p, key_w, [m1, m2, m3]

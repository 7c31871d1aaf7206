"""Principals, sessions, and the shared data-transport step functions.

Wire values are backend values: terms under the symbolic backend, bytes
under the concrete one.  Receivers reject with a precise local reason
but emit nothing on the wire; the simulator turns every rejection into
a silent drop so the adversary gets no oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from ..terms import AtomKind, DecryptionError, StructuralError
from .variants import SECURED, ConfigurationError, VariantConfig

DEFAULT_FRESHNESS_WINDOW = 30

DISCONNECT_MARKER = "disconnectReq"


class Role(str, Enum):
    SMARTPHONE = "smartphone"
    WEBSERVER = "webserver"
    SMARTBAND = "smartband"
    USER = "user"


class RejectReason(str, Enum):
    DECRYPT = "decrypt"
    FRESHNESS = "freshness"
    REPLAY = "replay"
    CREDENTIALS = "credentials"
    IDENTITY = "identity"
    FORMAT = "format"
    SIGNATURE = "signature"


@dataclass(frozen=True)
class Rejected:
    reason: RejectReason


@dataclass
class Principal:
    """A protocol endpoint holding only its own private key handles."""

    id: str
    role: Role
    backend: Any
    variant: VariantConfig = SECURED
    clock: int = 0
    enc_priv: Any = None
    sig_priv: Any = None
    peer_keys: dict[str, dict[str, Any]] = field(default_factory=dict)
    log: list[str] = field(default_factory=list)
    _counter: itertools.count = field(default_factory=itertools.count)

    def setup_keys(self) -> None:
        enc_pub, self.enc_priv = self.backend.gen_enc_keys(self.id)
        sig_pub, self.sig_priv = self.backend.gen_sig_keys(self.id)
        self.published = {"enc_pub": enc_pub, "sig_pub": sig_pub}

    def learn_peer(self, peer: "Principal") -> None:
        self.peer_keys[peer.id] = dict(peer.published)

    def identity_value(self):
        return self.backend.atom(self.id, AtomKind.IDENTITY)

    def fresh_name(self, prefix: str) -> str:
        return f"{prefix}.{self.id}.{next(self._counter)}"

    def note(self, msg: str) -> None:
        self.log.append(f"t={self.clock} {msg}")


@dataclass
class SessionState:
    """Single-owner per-link session: key, replay cache, step counter."""

    session_id: str
    owner: Principal
    peer_id: str
    link: str  # "server" or "band"
    freshness_window: int = DEFAULT_FRESHNESS_WINDOW
    session_key: Any = None
    step: int = 0
    seen: set[tuple[int, bytes]] = field(default_factory=set)

    def set_key(self, key: Any) -> None:
        if self.session_key is not None:
            raise ConfigurationError("session key is already set")
        self.session_key = key

    def advance(self) -> None:
        self.step += 1

    @property
    def backend(self):
        return self.owner.backend

    @property
    def variant(self):
        return self.owner.variant

    def encrypted(self) -> bool:
        return self.link != "server" or self.variant.server_encrypted

    def timestamps(self) -> bool:
        return self.variant.timestamps_on(self.link)


def check_freshness(state: SessionState, ts: int | None) -> Optional[RejectReason]:
    if ts is None:
        return RejectReason.FORMAT
    if abs(state.owner.clock - ts) > state.freshness_window:
        return RejectReason.FRESHNESS
    return None


def check_replay(state: SessionState, ts: int, digest: bytes) -> Optional[RejectReason]:
    if (ts, digest) in state.seen:
        return RejectReason.REPLAY
    return None


def record_seen(state: SessionState, ts: int, digest: bytes) -> None:
    state.seen.add((ts, digest))


# ---------------------------------------------------------------------------
# Data transport, shared by the phone/server and phone/band links
# ---------------------------------------------------------------------------


def data_send(state: SessionState, payload: Any) -> Any:
    """wire = {T, self, payload} under the session key.

    Timestamps and encryption drop out under the matching baselines.
    """
    b = state.backend
    body = b.pair(state.owner.identity_value(), payload)
    if state.timestamps():
        body = b.pair(b.timestamp(state.owner.clock), body)
    if not state.encrypted():
        state.advance()
        return body
    if state.session_key is None:
        raise ConfigurationError("no session key established")
    state.advance()
    return b.senc(body, state.session_key)


def data_recv(state: SessionState, msg: Any) -> Any | Rejected:
    """Returns the delivered payload, or a Rejected with the local reason."""
    b = state.backend
    if state.encrypted():
        if state.session_key is None:
            return Rejected(RejectReason.DECRYPT)
        try:
            body = b.sdec(msg, state.session_key)
        except DecryptionError:
            return Rejected(RejectReason.DECRYPT)
    else:
        body = msg
    ts = None
    try:
        if state.timestamps():
            ts_v, rest = b.unpair(body)
            ts = b.ts_int(ts_v)
        else:
            rest = body
        sender_v, payload = b.unpair(rest)
        if not b.is_atom(sender_v, AtomKind.IDENTITY):
            return Rejected(RejectReason.FORMAT)
        sender = b.atom_name(sender_v)
    except StructuralError:
        return Rejected(RejectReason.FORMAT)
    if sender != state.peer_id:
        return Rejected(RejectReason.IDENTITY)
    if state.timestamps():
        reason = check_freshness(state, ts)
        if reason:
            return Rejected(reason)
        digest = b.digest(msg)
        reason = check_replay(state, ts, digest)
        if reason:
            return Rejected(reason)
        record_seen(state, ts, digest)
    state.advance()
    return payload


def plaintext_data(state: SessionState, payload: Any) -> Any:
    """Baseline transport: identity and payload on the wire, nothing else."""
    b = state.backend
    state.advance()
    return b.pair(state.owner.identity_value(), payload)

"""Band connection, communication, and disconnection.

The secured band answers only a well-formed, fresh, non-replayed
connection request encrypted under the pairing key; anything else is
dropped with no wire response.  The legacy baseline reproduces the
unpatched behaviour: the band completes a connection with any device
that asks, deriving the session key from an unauthenticated DH
exchange embedded in the request and response.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from ..terms import AtomKind, DecryptionError, StructuralError
from .base import (
    DEFAULT_FRESHNESS_WINDOW,
    DISCONNECT_MARKER,
    Principal,
    RejectReason,
    Rejected,
    SessionState,
    check_freshness,
    check_replay,
    data_recv,
    data_send,
    record_seen,
)
from .variants import ConfigurationError


@dataclass
class Band(Principal):
    """Band-side pairing and connection state, plus DoS-visible counters."""

    paired_peer: str | None = None
    kir: Any = None
    connected: bool = False
    session: SessionState | None = None
    conn_seen: set[tuple[int, bytes]] = field(default_factory=set)
    vibrations: int = 0

    def pair_with(self, peer_id: str, key: Any) -> None:
        self.paired_peer = peer_id
        self.kir = key
        self.connected = False
        self.session = None

    def forget_pairing(self) -> None:
        self.paired_peer = None
        self.kir = None
        self.connected = False
        self.session = None


@dataclass
class PhoneBandLink:
    """Phone-side view of the band connection."""

    phone: Principal
    band_id: str
    kir: Any = None
    connected: bool = False
    session: SessionState | None = None
    conn_seen: set[tuple[int, bytes]] = field(default_factory=set)


def band_connect(link: PhoneBandLink) -> Any:
    """Phone sends {T1, connectionReq} under the pairing key."""
    if link.kir is None:
        raise ConfigurationError("no pairing key; run the ceremony first")
    b = link.phone.backend
    req = b.atom(link.phone.fresh_name("connectionReq"), AtomKind.PAYLOAD)
    body = req
    if link.phone.variant.timestamps_on("band"):
        body = b.pair(b.timestamp(link.phone.clock), req)
    return b.senc(body, link.kir)


def band_connect_process(band: Band, msg: Any) -> Optional[Any]:
    """Secured acceptance: decrypt, format, freshness, replay; else silence."""
    band.vibrations += 1
    if band.variant.legacy_band_connect:
        return legacy_connect_process(band, msg)
    if band.kir is None:
        band.note("connect ignored: unpaired")
        return None
    b = band.backend
    try:
        body = b.sdec(msg, band.kir)
    except DecryptionError:
        band.note("connect ignored: decrypt")
        return None
    ts = None
    try:
        if band.variant.timestamps_on("band"):
            ts_v, req = b.unpair(body)
            ts = b.ts_int(ts_v)
        else:
            req = body
    except StructuralError:
        band.note("connect ignored: format")
        return None
    # Format check: the decrypted content must be a bare request token,
    # not the (identity, payload) shape of a data message.
    if not b.is_atom(req, AtomKind.PAYLOAD):
        band.note("connect ignored: format")
        return None
    if band.variant.timestamps_on("band"):
        if ts is None or abs(band.clock - ts) > DEFAULT_FRESHNESS_WINDOW:
            band.note("connect ignored: freshness")
            return None
        digest = b.digest(msg)
        if (ts, digest) in band.conn_seen:
            band.note("connect ignored: replay")
            return None
        band.conn_seen.add((ts, digest))
    band.connected = True
    band.session = SessionState(
        session_id=band.fresh_name("sess"),
        owner=band,
        peer_id=band.paired_peer,
        link="band",
        session_key=band.kir,
    )
    res = b.atom(band.fresh_name("connectionRes"), AtomKind.PAYLOAD)
    body = res
    if band.variant.timestamps_on("band"):
        body = b.pair(b.timestamp(band.clock), res)
    band.note("connected")
    return b.senc(body, band.kir)


def band_connect_finish(link: PhoneBandLink, resp: Any) -> bool:
    """Phone accepts the response; on failure the link stays down."""
    b = link.phone.backend
    try:
        body = b.sdec(resp, link.kir)
    except DecryptionError:
        return False
    try:
        if link.phone.variant.timestamps_on("band"):
            ts_v, res = b.unpair(body)
            ts = b.ts_int(ts_v)
            if ts is None or abs(link.phone.clock - ts) > DEFAULT_FRESHNESS_WINDOW:
                return False
            digest = b.digest(resp)
            if (ts, digest) in link.conn_seen:
                return False
            link.conn_seen.add((ts, digest))
        else:
            res = body
    except StructuralError:
        return False
    if not b.is_atom(res, AtomKind.PAYLOAD):
        return False
    link.connected = True
    link.session = SessionState(
        session_id=link.phone.fresh_name("sess"),
        owner=link.phone,
        peer_id=link.band_id,
        link="band",
        session_key=link.kir,
    )
    return True


# ---------------------------------------------------------------------------
# Legacy baseline: unauthenticated connect
# ---------------------------------------------------------------------------


def legacy_connect(requester: Principal) -> tuple[Any, Any]:
    """Request = (identity, g^e); the exponent handle stays local."""
    b = requester.backend
    exp = b.dh_exponent(requester.fresh_name("e"))
    return exp, b.pair(requester.identity_value(), b.dh_pub(exp))


def legacy_connect_process(band: Band, msg: Any) -> Optional[Any]:
    """Accepts any syntactically valid request from any principal."""
    b = band.backend
    try:
        who_v, their_pub = b.unpair(msg)
        if not b.is_atom(who_v, AtomKind.IDENTITY):
            band.note("legacy connect ignored: format")
            return None
        who = b.atom_name(who_v)
        exp = b.dh_exponent(band.fresh_name("y"))
        key = b.kdf([b.dh_shared(their_pub, exp)])
    except StructuralError:
        band.note("legacy connect ignored: format")
        return None
    band.paired_peer = who
    band.kir = key
    band.connected = True
    band.session = SessionState(
        session_id=band.fresh_name("sess"),
        owner=band,
        peer_id=who,
        link="band",
        session_key=key,
    )
    band.note(f"legacy connected to {who}")
    return b.pair(band.identity_value(), b.dh_pub(exp))


def legacy_connect_finish(requester: Principal, link: PhoneBandLink, exp: Any, resp: Any) -> bool:
    b = requester.backend
    try:
        _band_v, band_pub = b.unpair(resp)
        key = b.kdf([b.dh_shared(band_pub, exp)])
    except StructuralError:
        return False
    link.kir = key
    link.connected = True
    link.session = SessionState(
        session_id=requester.fresh_name("sess"),
        owner=requester,
        peer_id=link.band_id,
        link="band",
        session_key=key,
    )
    return True


# ---------------------------------------------------------------------------
# Data and disconnection
# ---------------------------------------------------------------------------


def band_data_send(session: SessionState, payload: Any) -> Any:
    return data_send(session, payload)


def band_data_recv(band: Band, msg: Any) -> Any | Rejected:
    """Band-side receive; every rejection is a silent drop on the wire."""
    band.vibrations += 1
    if band.session is None or not band.connected:
        band.note("data ignored: not connected")
        return Rejected(RejectReason.DECRYPT)
    result = data_recv(band.session, msg)
    if isinstance(result, Rejected):
        band.note(f"data ignored: {result.reason.value}")
        return result
    if band.backend.is_atom(result, AtomKind.CONSTANT) and (
        band.backend.atom_name(result) == DISCONNECT_MARKER
    ):
        band.note("disconnect accepted")
        band.forget_pairing()
        return result
    band.note("data accepted")
    return result


def disconnect(session: SessionState) -> Any:
    """The old phone puts the disconnection marker in the data field."""
    marker = session.backend.atom(DISCONNECT_MARKER, AtomKind.CONSTANT)
    return data_send(session, marker)

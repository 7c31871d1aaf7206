"""Simulation world: principals, network routing, and bookkeeping.

Every wire message is routed through the adversary position before
delivery (one topology, many adversaries); capability flags bound what
the adversary may do with what it sees.  Honest workloads are scheduled
action closures; receivers are dispatch handlers that feed the protocol
engine and translate every rejection into a silent drop plus a local
trace entry.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..backends import SymbolicBackend
from ..dolev_yao import derives
from ..protocol import (
    ConfigurationError,
    Principal,
    Rejected,
    Role,
    SessionState,
    data_recv,
    data_send,
    get_variant,
)
from ..protocol.band import (
    Band,
    PhoneBandLink,
    band_connect,
    band_connect_finish,
    band_connect_process,
    band_data_recv,
    band_data_send,
    disconnect,
    legacy_connect,
    legacy_connect_finish,
)
from ..protocol.pairing import (
    BandCeremony,
    CeremonyError,
    PhoneCeremony,
    ceremony_confirm_band,
    ceremony_display,
    ceremony_enter_phone,
    ceremony_receive_response,
    ceremony_request,
)
from ..protocol.phone_server import (
    LoginAccepted,
    WebServer,
    login_process,
    login_request,
    sts_complete,
    sts_finalize,
    sts_initiate,
    sts_respond,
)
from ..terms import Atom, AtomKind, PrivKey, StructuralError, Term, atoms_in
from ..wire import show
from .adversary import Adversary, Capability
from .core import EventLoop, ServiceMetrics, TraceEntry
from .ratelimit import PerSourceLimiter

USER_ID = "u1"
USER_PW = "pw1"

SECRET_LABELS = (
    "PW",
    "ID",
    "kir",
    "PhoneData",
    "ServerData",
    "BandData",
    "connectionReq",
    "connectionRes",
    "T",
)


@dataclass
class ScenarioConfig:
    seed: int = 0
    limiter_enabled: bool = True
    limiter_capacity: int = 20
    limiter_refill: int = 5
    flood_rate: int = 100
    flood_duration: int = 20
    dos_threshold: int = 300
    grant_credentials: bool = False
    storage_encrypted: bool = True

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        limiter = data.get("limiter", {})
        grants = data.get("grants", {})
        return cls(
            seed=data.get("seed", 0),
            limiter_enabled=limiter.get("enabled", True),
            limiter_capacity=limiter.get("capacity", 20),
            limiter_refill=limiter.get("refill", 5),
            flood_rate=data.get("flood_rate", 100),
            flood_duration=data.get("flood_duration", 20),
            dos_threshold=data.get("dos_threshold", 300),
            grant_credentials=grants.get("credentials", False),
            storage_encrypted=data.get("storage_encrypted", True),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "limiter": {
                "enabled": self.limiter_enabled,
                "capacity": self.limiter_capacity,
                "refill": self.limiter_refill,
            },
            "flood_rate": self.flood_rate,
            "flood_duration": self.flood_duration,
            "dos_threshold": self.dos_threshold,
            "grants": {"credentials": self.grant_credentials},
            "storage_encrypted": self.storage_encrypted,
        }


@dataclass
class ScenarioReport:
    scenario_id: str
    protocol: str
    seed: int
    goal_achieved: bool
    status: str
    adversary_learned: list[str]
    service_metrics: ServiceMetrics
    evidence: list[TraceEntry]
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario_id,
            "protocol": self.protocol,
            "seed": self.seed,
            "goal_achieved": self.goal_achieved,
            "status": self.status,
            "adversary_learned": self.adversary_learned,
            "service_metrics": self.service_metrics.to_dict(),
            "detail": self.detail,
            "evidence": [e.to_dict() for e in self.evidence],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class World:
    def __init__(self, variant_name: str, config: ScenarioConfig, capability: Capability):
        self.variant = get_variant(variant_name)
        self.config = config
        self.backend = SymbolicBackend()
        self.rng = random.Random(config.seed)
        self.loop = EventLoop()
        self.trace: list[TraceEntry] = []

        b = self.backend
        self.phone = Principal(id="P", role=Role.SMARTPHONE, backend=b, variant=self.variant)
        self.server = WebServer(
            id="W",
            role=Role.WEBSERVER,
            backend=b,
            variant=self.variant,
            storage_encrypted=config.storage_encrypted,
        )
        self.band = Band(id="B", role=Role.SMARTBAND, backend=b, variant=self.variant)
        self.eve = Principal(id="E", role=Role.SMARTPHONE, backend=b, variant=self.variant)
        for p in (self.phone, self.server, self.band, self.eve):
            p.setup_keys()
        self.phone.learn_peer(self.server)
        self.server.learn_peer(self.phone)
        self.server.enroll(USER_ID, USER_PW)
        self.record = b.atom("HealthRecord." + USER_ID, AtomKind.PAYLOAD)
        self.server.store_record(USER_ID, self.record)

        self.adversary = Adversary(capability)
        self.adversary.grant(
            b.atom("P", AtomKind.IDENTITY),
            b.atom("W", AtomKind.IDENTITY),
            b.atom("B", AtomKind.IDENTITY),
            b.atom("E", AtomKind.IDENTITY),
            b.atom("junkPayload.E", AtomKind.PAYLOAD),
            b.atom("junkNonce.E", AtomKind.NONCE),
            b.atom("junkNumber.E", AtomKind.NUMBER),
            b.atom("junkPw.E", AtomKind.PASSWORD),
            PrivKey("E"),
            self.eve.published["enc_pub"],
            self.eve.published["sig_pub"],
            self.phone.published["enc_pub"],
            self.phone.published["sig_pub"],
            self.server.published["enc_pub"],
            self.server.published["sig_pub"],
            self.band.published["enc_pub"],
            self.band.published["sig_pub"],
        )

        self.limiter: Optional[PerSourceLimiter] = None
        if config.limiter_enabled:
            self.limiter = PerSourceLimiter(config.limiter_capacity, config.limiter_refill)

        self.band_metrics = ServiceMetrics()
        self.server_metrics = ServiceMetrics()
        self.secrets: dict[str, set[Term]] = {label: set() for label in SECRET_LABELS}
        self.secrets["PW"].add(b.atom(USER_PW, AtomKind.PASSWORD))
        self.secrets["ID"].add(b.atom(USER_ID, AtomKind.IDENTITY))

        self.link = PhoneBandLink(phone=self.phone, band_id="B")
        self.phone_server_session: SessionState | None = None
        self.server_phone_session: SessionState | None = None
        self._sts_state: Any = None
        self._sts_responder: Any = None
        self._legacy_exp: Any = None
        self._ceremony_phone: PhoneCeremony | None = None
        self._ceremony_band: BandCeremony | None = None
        self._displayed_number: str | None = None

        self.sent_log: list[tuple[str, str, str, Term]] = []
        self.injected_accepted: dict[str, int] = {}
        self.band_injected_delivered = 0
        self.honest_band_sent = 0
        self.honest_band_accepted = 0
        self.adversary_login_accepted = False
        self.honest_ticks: set[int] = set()
        self.intercept: Optional[Callable[[str, str, str, Term], Optional[list]]] = None

    # -- plumbing ------------------------------------------------------------

    def note(self, event: str, **detail: Any) -> None:
        self.trace.append(TraceEntry(self.loop.now, event, detail))

    def set_clocks(self) -> None:
        now = self.loop.now
        for p in (self.phone, self.server, self.band, self.eve):
            p.clock = now

    def at(self, time: int, fn: Callable[[], None]) -> None:
        def wrapped():
            self.set_clocks()
            fn()

        self.loop.schedule(time, wrapped)

    def transmit(self, frm: str, to: str, tag: str, wire: Term) -> None:
        """Honest send: observed by the adversary, possibly intercepted."""
        self.note("send", frm=frm, to=to, tag=tag, wire=show(wire))
        self.honest_ticks.add(self.loop.now)
        self.sent_log.append((tag, frm, to, wire))
        self.adversary.observe(wire)
        deliveries = None
        if self.intercept is not None:
            deliveries = self.intercept(tag, frm, to, wire)
        if deliveries is None:
            deliveries = [(frm, to, tag, wire, False)]
        for d_frm, d_to, d_tag, d_wire, injected in deliveries:
            if injected:
                self.adversary.check_emission(d_wire)
                self.note("inject", frm=d_frm, to=d_to, tag=d_tag, wire=show(d_wire))
            self.schedule_delivery(d_frm, d_to, d_tag, d_wire, injected)

    def inject(self, frm: str, to: str, tag: str, wire: Term, delay: int = 1) -> None:
        """Adversary emission, validated against its capability."""
        self.adversary.check_emission(wire)
        self.note("inject", frm=frm, to=to, tag=tag, wire=show(wire))
        self.schedule_delivery(frm, to, tag, wire, injected=True, delay=delay)

    def try_inject(self, frm: str, to: str, tag: str, wire: Term, delay: int = 1) -> bool:
        if not self.adversary.can_emit(wire):
            self.note("inject-failed", to=to, tag=tag, wire=show(wire))
            return False
        self.inject(frm, to, tag, wire, delay)
        return True

    def schedule_delivery(
        self, frm: str, to: str, tag: str, wire: Term, injected: bool, delay: int = 1
    ) -> None:
        def do_deliver():
            self.set_clocks()
            self.deliver(frm, to, tag, wire, injected)

        self.loop.schedule(self.loop.now + delay, do_deliver)

    def deliver(self, frm: str, to: str, tag: str, wire: Term, injected: bool) -> None:
        if to == "B" and self.limiter is not None:
            if not self.limiter.allow(frm, self.loop.now):
                self.band_metrics.messages_dropped += 1
                self.note("rate-limited", frm=frm, to=to, tag=tag)
                return
        if to == "B" and injected:
            self.band_injected_delivered += 1
        self.note("deliver", frm=frm, to=to, tag=tag, injected=injected)
        handler = {
            "B": self._band_handler,
            "W": self._server_handler,
            "P": self._phone_handler,
        }.get(to)
        if handler is None:
            self.note("eve-received", frm=frm, tag=tag)
            return
        handler(frm, tag, wire, injected)

    def _mark_injected_accept(self, tag: str) -> None:
        self.injected_accepted[tag] = self.injected_accepted.get(tag, 0) + 1

    # -- receivers -------------------------------------------------------------

    def _band_handler(self, frm: str, tag: str, wire: Term, injected: bool) -> None:
        if tag == "pair-req":
            if self._ceremony_band is None:
                self.band_metrics.messages_dropped += 1
                self.note("band-silent-drop", tag=tag, reason="no-ceremony")
                return
            try:
                resp, number = ceremony_display(self._ceremony_band, wire)
            except CeremonyError:
                self.band_metrics.messages_dropped += 1
                self.note("band-silent-drop", tag=tag, reason="ceremony-phase")
                return
            self._displayed_number = number
            self.note("band-displays-number")
            self.transmit("B", frm, "pair-resp", resp)
            return
        if tag == "connect":
            resp = band_connect_process(self.band, wire)
            if resp is None:
                self.band_metrics.messages_dropped += 1
                self.note("band-silent-drop", tag=tag)
                return
            self.band_metrics.messages_accepted += 1
            if injected:
                self._mark_injected_accept(tag)
            self._register_ts(resp)
            for atom in _payload_atoms_inside(self.backend, resp, self.band.kir):
                self.secrets["connectionRes"].add(atom)
            self.transmit("B", self.band.paired_peer, "connect-resp", resp)
            return
        if tag == "band-data":
            result = band_data_recv(self.band, wire)
            if isinstance(result, Rejected):
                self.band_metrics.messages_dropped += 1
                self.note("band-silent-drop", tag=tag, reason=result.reason.value)
                return
            self.band_metrics.messages_accepted += 1
            if injected:
                self._mark_injected_accept(tag)
            elif frm == "P":
                self.honest_band_accepted += 1
            if self.band.session is not None and self.band.connected:
                reply = self.backend.atom(self.band.fresh_name("BandData"), AtomKind.PAYLOAD)
                self.secrets["BandData"].add(reply)
                wire_out = band_data_send(self.band.session, reply)
                self._register_ts(wire_out)
                self.transmit("B", self.band.session.peer_id, "band-data", wire_out)
            return
        self.band_metrics.messages_dropped += 1
        self.note("band-silent-drop", tag=tag, reason="unknown-tag")

    def _server_handler(self, frm: str, tag: str, wire: Term, injected: bool) -> None:
        if tag == "login":
            result = login_process(self.server, wire)
            if isinstance(result, LoginAccepted):
                self.server_metrics.messages_accepted += 1
                self.note("login-accepted", user=result.user_id, injected=injected)
                if injected:
                    self._mark_injected_accept(tag)
                    self.adversary_login_accepted = True
            else:
                self.server_metrics.messages_dropped += 1
                self.note("login-rejected", reason=result.reason.value, injected=injected)
            return
        if tag == "sts1":
            try:
                self._sts_responder, msg2 = sts_respond(self.server, wire)
            except StructuralError:
                self.server_metrics.messages_dropped += 1
                self.note("server-drop", reason="malformed-sts1")
                return
            self.transmit("W", frm, "sts2", msg2)
            return
        if tag == "sts3":
            if self._sts_responder is None:
                self.note("server-drop", reason="no-sts-state")
                return
            key = sts_complete(self.server, self._sts_responder, wire, "P")
            if isinstance(key, Rejected):
                self.note("sts-aborted", side="server", reason=key.reason.value)
                return
            self.secrets["kir"].add(key)
            self.server_phone_session = SessionState(
                "w-p", self.server, "P", "server", session_key=key
            )
            self.note("sts-complete", side="server")
            return
        if tag == "data":
            if self.server_phone_session is None:
                self.server_metrics.messages_dropped += 1
                self.note("server-drop", reason="no-session")
                return
            result = data_recv(self.server_phone_session, wire)
            if isinstance(result, Rejected):
                self.server_metrics.messages_dropped += 1
                self.note("server-drop", reason=result.reason.value, injected=injected)
                return
            self.server_metrics.messages_accepted += 1
            if injected:
                self._mark_injected_accept(tag)
            reply = self.backend.atom(self.server.fresh_name("ServerData"), AtomKind.PAYLOAD)
            self.secrets["ServerData"].add(reply)
            wire_out = data_send(self.server_phone_session, reply)
            self._register_ts(wire_out)
            self.transmit("W", "P", "data", wire_out)
            return
        self.note("server-drop", reason="unknown-tag")

    def _phone_handler(self, frm: str, tag: str, wire: Term, injected: bool) -> None:
        if tag == "pair-resp":
            if self._ceremony_phone is None:
                return
            try:
                ceremony_receive_response(self._ceremony_phone, wire)
            except CeremonyError:
                self.note("phone-drop", reason="ceremony-phase")
            return
        if tag == "sts2":
            if self._sts_state is None:
                self.note("phone-drop", reason="no-sts-state")
                return
            out = sts_finalize(self.phone, self._sts_state, wire, "W")
            if isinstance(out, Rejected):
                self.note("sts-aborted", side="phone", reason=out.reason.value)
                return
            key, msg3 = out
            self.secrets["kir"].add(key)
            self.phone_server_session = SessionState(
                "p-w", self.phone, "W", "server", session_key=key
            )
            self.note("sts-complete", side="phone")
            self.transmit("P", "W", "sts3", msg3)
            return
        if tag == "connect-resp":
            if self.variant.legacy_band_connect:
                if self._legacy_exp is not None and legacy_connect_finish(
                    self.phone, self.link, self._legacy_exp, wire
                ):
                    self.note("phone-connected", mode="legacy")
                return
            if self.link.kir is not None and band_connect_finish(self.link, wire):
                self.note("phone-connected")
            return
        if tag == "data":
            if self.phone_server_session is not None:
                result = data_recv(self.phone_server_session, wire)
                if isinstance(result, Rejected):
                    self.note("phone-drop", reason=result.reason.value)
            return
        if tag == "band-data":
            if self.link.session is not None:
                result = data_recv(self.link.session, wire)
                if isinstance(result, Rejected):
                    self.note("phone-drop", reason=result.reason.value)
            return
        self.note("phone-drop", reason="unknown-tag")

    # -- honest workloads ------------------------------------------------------

    def _register_ts(self, wire_msg: Term) -> None:
        for atom in atoms_in(wire_msg):
            if atom.kind is AtomKind.TIMESTAMP:
                self.secrets["T"].add(atom)

    def schedule_login(self, t: int) -> None:
        def do_login():
            msg = login_request(self.phone, USER_ID, USER_PW)
            self._register_ts(msg)
            self.transmit("P", "W", "login", msg)

        self.at(t, do_login)

    def schedule_sts(self, t: int) -> None:
        def do_sts():
            self._sts_state, msg1 = sts_initiate(self.phone)
            self.transmit("P", "W", "sts1", msg1)

        self.at(t, do_sts)

    def schedule_phone_server_data(self, t: int) -> None:
        def do_data():
            if self.phone_server_session is None:
                raise ConfigurationError("phone/server session missing; schedule STS first")
            payload = self.backend.atom(self.phone.fresh_name("PhoneData"), AtomKind.PAYLOAD)
            self.secrets["PhoneData"].add(payload)
            msg = data_send(self.phone_server_session, payload)
            self._register_ts(msg)
            self.transmit("P", "W", "data", msg)

        self.at(t, do_data)

    def schedule_ceremony(self, t: int) -> None:
        def start():
            self._ceremony_phone = PhoneCeremony(self.phone)
            self._ceremony_band = BandCeremony(self.band, self.rng)
            req = ceremony_request(self._ceremony_phone)
            self.transmit("P", "B", "pair-req", req)

        def band_confirm():
            key = ceremony_confirm_band(self._ceremony_band)
            self.band.pair_with("P", key)
            self.secrets["kir"].add(key)
            self.note("band-key-established")

        def phone_enter():
            key = ceremony_enter_phone(self._ceremony_phone, self._displayed_number)
            self.link.kir = key
            self.note("phone-key-established")

        self.at(t, start)
        self.at(t + 4, band_confirm)
        self.at(t + 5, phone_enter)

    def schedule_connect(self, t: int) -> None:
        def do_connect():
            msg = band_connect(self.link)
            self._register_ts(msg)
            for atom in _payload_atoms_inside(self.backend, msg, self.link.kir):
                self.secrets["connectionReq"].add(atom)
            self.transmit("P", "B", "connect", msg)

        self.at(t, do_connect)

    def schedule_legacy_connect(self, t: int) -> None:
        def do_connect():
            self._legacy_exp, msg = legacy_connect(self.phone)
            self.transmit("P", "B", "connect", msg)

        self.at(t, do_connect)

    def schedule_phone_band_data(self, t: int) -> None:
        def do_data():
            if self.link.session is None:
                raise ConfigurationError("band link not connected")
            payload = self.backend.atom(self.phone.fresh_name("PhoneData"), AtomKind.PAYLOAD)
            self.secrets["PhoneData"].add(payload)
            msg = band_data_send(self.link.session, payload)
            self._register_ts(msg)
            self.honest_band_sent += 1
            self.transmit("P", "B", "band-data", msg)

        self.at(t, do_data)

    def schedule_disconnect(self, t: int) -> None:
        def do_disconnect():
            msg = disconnect(self.link.session)
            self._register_ts(msg)
            self.transmit("P", "B", "band-data", msg)

        self.at(t, do_disconnect)

    def standard_band_setup(self, t0: int = 0, connect: bool = True) -> None:
        if self.variant.legacy_band_connect:
            if connect:
                self.schedule_legacy_connect(t0)
            return
        self.schedule_ceremony(t0)
        if connect:
            self.schedule_connect(t0 + 7)

    def standard_server_setup(self, t0: int = 0) -> None:
        self.schedule_login(t0)
        self.schedule_sts(t0 + 2)

    # -- results ---------------------------------------------------------------

    def run(self) -> None:
        self.loop.run()

    def learned_labels(self) -> list[str]:
        learned = []
        for label in SECRET_LABELS:
            if any(derives(self.adversary.knowledge, t) for t in self.secrets[label]):
                learned.append(label)
        return learned

    def metrics(self) -> ServiceMetrics:
        return ServiceMetrics(
            messages_accepted=self.band_metrics.messages_accepted
            + self.server_metrics.messages_accepted,
            messages_dropped=self.band_metrics.messages_dropped
            + self.server_metrics.messages_dropped,
            victim_vibrations=self.band.vibrations,
        )


def _payload_atoms_inside(backend, wire_msg: Term, key: Term | None) -> list[Atom]:
    """Payload atoms inside a possibly encrypted connect message."""
    body = wire_msg
    if key is not None:
        try:
            body = backend.sdec(wire_msg, key)
        except Exception:
            body = wire_msg
    return [a for a in atoms_in(body) if a.kind is AtomKind.PAYLOAD]

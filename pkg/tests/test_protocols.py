"""Login, STS, and data-transport behaviour under both backends."""

import random

import pytest

from bandsec.backends import ConcreteBackend, SymbolicBackend
from bandsec.protocol import (
    ConfigurationError,
    Principal,
    RejectReason,
    Rejected,
    Role,
    SessionState,
    data_recv,
    data_send,
    get_variant,
)
from bandsec.protocol.phone_server import (
    LoginAccepted,
    WebServer,
    login_process,
    login_request,
    plaintext_login,
    run_sts,
    sts_complete,
    sts_finalize,
    sts_initiate,
    sts_respond,
)
from bandsec.terms import Atom, AtomKind, AsymEnc, Hash, Pair, PubKey


def make_pair(backend=None, variant="secured"):
    b = backend or SymbolicBackend()
    v = get_variant(variant)
    phone = Principal(id="P", role=Role.SMARTPHONE, backend=b, variant=v)
    server = WebServer(id="W", role=Role.WEBSERVER, backend=b, variant=v)
    phone.setup_keys()
    server.setup_keys()
    phone.learn_peer(server)
    server.learn_peer(phone)
    server.enroll("u1", "pw1")
    return phone, server


def test_login_request_shape_symbolic():
    phone, server = make_pair()
    phone.clock = 100
    wire = login_request(phone, "u1", "pw1")
    expected = AsymEnc(
        Pair(
            Atom("100", AtomKind.TIMESTAMP),
            Pair(Atom("u1", AtomKind.IDENTITY), Hash(Atom("pw1", AtomKind.PASSWORD))),
        ),
        PubKey("W"),
    )
    assert wire == expected


def test_login_request_deterministic_at_same_clock():
    phone, _ = make_pair()
    phone.clock = 7
    assert login_request(phone, "u1", "pw1") == login_request(phone, "u1", "pw1")


def test_login_requires_server_key():
    b = SymbolicBackend()
    phone = Principal(id="P", role=Role.SMARTPHONE, backend=b)
    phone.setup_keys()
    with pytest.raises(ConfigurationError):
        login_request(phone, "u1", "pw1")


def test_honest_login_accepted():
    phone, server = make_pair()
    phone.clock = server.clock = 50
    out = login_process(server, login_request(phone, "u1", "pw1"))
    assert out == LoginAccepted("u1", 50)


def test_login_replay_rejected():
    phone, server = make_pair()
    phone.clock = server.clock = 50
    wire = login_request(phone, "u1", "pw1")
    assert isinstance(login_process(server, wire), LoginAccepted)
    assert login_process(server, wire) == Rejected(RejectReason.REPLAY)


def test_login_stale_timestamp_rejected():
    phone, server = make_pair()
    phone.clock = 10
    wire = login_request(phone, "u1", "pw1")
    server.clock = 100
    assert login_process(server, wire) == Rejected(RejectReason.FRESHNESS)


@pytest.mark.parametrize("window_excess", [1, 5, 100])
def test_login_freshness_window_boundary(window_excess):
    phone, server = make_pair()
    phone.clock = 0
    wire = login_request(phone, "u1", "pw1")
    server.clock = 30 + window_excess
    assert login_process(server, wire) == Rejected(RejectReason.FRESHNESS)


def test_login_wrong_password_rejected():
    phone, server = make_pair()
    phone.clock = server.clock = 5
    wire = login_request(phone, "u1", "wrong")
    assert login_process(server, wire) == Rejected(RejectReason.CREDENTIALS)


def test_login_garbage_rejected_as_decrypt():
    _, server = make_pair()
    junk = server.backend.atom("junk")
    assert login_process(server, junk) == Rejected(RejectReason.DECRYPT)


def test_plaintext_login_exposes_credentials():
    phone, server = make_pair(variant="baseline-plaintext")
    wire = plaintext_login(phone, "u1", "pw1")
    b = phone.backend
    id_v, pw_v = b.unpair(wire)
    assert b.atom_name(pw_v) == "pw1"
    assert isinstance(login_process(server, wire), LoginAccepted)
    # No replay protection in the baseline.
    assert isinstance(login_process(server, wire), LoginAccepted)


def test_no_timestamp_variant_accepts_replays():
    phone, server = make_pair(variant="baseline-no-timestamp")
    wire = login_request(phone, "u1", "pw1")
    assert isinstance(login_process(server, wire), LoginAccepted)
    assert isinstance(login_process(server, wire), LoginAccepted)


# ---------------------------------------------------------------------------
# Station-to-station
# ---------------------------------------------------------------------------


def test_sts_honest_run_agrees():
    phone, server = make_pair()
    key_p, key_w, _wire = run_sts(phone, server)
    assert key_p == key_w


def test_sts_rejects_wrong_signer():
    phone, server = make_pair()
    b = phone.backend
    intruder = Principal(id="E", role=Role.SMARTPHONE, backend=b)
    intruder.setup_keys()
    st_p, m1 = sts_initiate(phone)
    exp = b.dh_exponent("eE")
    my_pub = b.dh_pub(exp)
    shared = b.dh_shared(m1, exp)
    key = b.kdf([shared])
    forged = b.sign(b.pair(my_pub, m1), intruder.sig_priv)
    msg2 = b.pair(my_pub, b.senc(forged, key))
    assert sts_finalize(phone, st_p, msg2, server.id) == Rejected(RejectReason.SIGNATURE)
    assert st_p.key is None


def test_sts_responder_rejects_tampered_msg3():
    phone, server = make_pair()
    st_p, m1 = sts_initiate(phone)
    st_w, m2 = sts_respond(server, m1)
    key_p, _m3 = sts_finalize(phone, st_p, m2, server.id)
    b = phone.backend
    wrong = b.senc(b.sign(b.pair(st_p.my_pub, st_p.my_pub), phone.sig_priv), key_p)
    assert sts_complete(server, st_w, wrong, phone.id) == Rejected(RejectReason.SIGNATURE)


def test_sts_all_interleavings_of_two_sessions():
    """Key agreement holds in every honest schedule of two sessions."""
    import itertools

    agreements = 0
    for order in set(itertools.permutations(["a"] * 4 + ["b"] * 4)):
        phone, server = make_pair()
        states = {}

        def step(tag):
            st = states.setdefault(tag, {"stage": 0})
            stage = st["stage"]
            if stage == 0:
                st["init"], st["m1"] = sts_initiate(phone)
            elif stage == 1:
                st["resp"], st["m2"] = sts_respond(server, st["m1"])
            elif stage == 2:
                st["key_p"], st["m3"] = sts_finalize(phone, st["init"], st["m2"], server.id)
            elif stage == 3:
                st["key_w"] = sts_complete(server, st["resp"], st["m3"], phone.id)
            st["stage"] += 1

        for tag in order:
            step(tag)
        for st in states.values():
            assert st["key_p"] == st["key_w"]
            agreements += 1
    # 8 choose 4 distinct schedules, two sessions each.
    assert agreements == 140


# ---------------------------------------------------------------------------
# Data transport
# ---------------------------------------------------------------------------


def make_session(backend=None, variant="secured"):
    phone, server = make_pair(backend, variant)
    key_p, key_w, _ = run_sts(phone, server)
    sp = SessionState("s1", phone, "W", "server", session_key=key_p)
    sw = SessionState("s2", server, "P", "server", session_key=key_w)
    return phone, server, sp, sw


def test_data_round_trip():
    phone, server, sp, sw = make_session()
    payload = phone.backend.atom("PhoneData", AtomKind.PAYLOAD)
    wire = data_send(sp, payload)
    assert data_recv(sw, wire) == payload


def test_data_replay_rejected():
    phone, server, sp, sw = make_session()
    wire = data_send(sp, phone.backend.atom("PhoneData", AtomKind.PAYLOAD))
    data_recv(sw, wire)
    assert data_recv(sw, wire) == Rejected(RejectReason.REPLAY)


def test_data_wrong_identity_rejected():
    phone, server, sp, sw = make_session()
    sw.peer_id = "Q"
    wire = data_send(sp, phone.backend.atom("PhoneData", AtomKind.PAYLOAD))
    assert data_recv(sw, wire) == Rejected(RejectReason.IDENTITY)


def test_data_stale_rejected_for_any_window():
    for window in [0, 1, 10, 30]:
        phone, server, sp, sw = make_session()
        sw.freshness_window = window
        wire = data_send(sp, phone.backend.atom("d", AtomKind.PAYLOAD))
        server.clock = window + 1
        assert data_recv(sw, wire) == Rejected(RejectReason.FRESHNESS)


def test_data_garbage_rejected():
    _, _, _, sw = make_session()
    assert data_recv(sw, sw.backend.atom("junk")) == Rejected(RejectReason.DECRYPT)


def test_session_key_set_once():
    phone, _ = make_pair()
    s = SessionState("s", phone, "W", "server")
    s.set_key(phone.backend.atom("k", AtomKind.NONCE))
    with pytest.raises(ConfigurationError):
        s.set_key(phone.backend.atom("k2", AtomKind.NONCE))


# ---------------------------------------------------------------------------
# Backend parity: identical accept/reject decisions, symbolic vs concrete
# ---------------------------------------------------------------------------


def drive_decisions(backend):
    """One scripted run with honest steps and injected faults."""
    decisions = []
    phone, server = make_pair(backend)
    phone.clock = server.clock = 10
    wire = login_request(phone, "u1", "pw1")
    decisions.append(type(login_process(server, wire)).__name__)
    decisions.append(repr(login_process(server, wire)))  # replay
    stale = login_request(phone, "u1", "pw1")
    server.clock = 99
    decisions.append(repr(login_process(server, stale)))
    server.clock = 10
    decisions.append(repr(login_process(server, login_request(phone, "u1", "bad"))))

    key_p, key_w, _ = run_sts(phone, server)
    sp = SessionState("s1", phone, "W", "server", session_key=key_p)
    sw = SessionState("s2", server, "P", "server", session_key=key_w)
    payload = phone.backend.atom("PhoneData", AtomKind.PAYLOAD)
    wire = data_send(sp, payload)
    decisions.append(data_recv(sw, wire) == payload)
    decisions.append(repr(data_recv(sw, wire)))
    sw.peer_id = "Q"
    decisions.append(repr(data_recv(sw, data_send(sp, payload))))
    return decisions


def test_backend_parity_login_and_data():
    assert drive_decisions(SymbolicBackend()) == drive_decisions(ConcreteBackend(seed=1))


def test_concrete_login_round_trip():
    b = ConcreteBackend(seed=2)
    phone, server = make_pair(b)
    phone.clock = 100
    wire = login_request(phone, "u1", "pw1")
    body = b.adec(wire, server.enc_priv)
    ts_v, rest = b.unpair(body)
    assert b.ts_int(ts_v) == 100
    id_v, hash_v = b.unpair(rest)
    assert b.atom_name(id_v) == "u1"
    assert hash_v == b.hash(b.atom("pw1", AtomKind.PASSWORD))


def test_concrete_ciphertext_bitflip_fails():
    b = ConcreteBackend(seed=3)
    key = b.kdf([b.atom("k", AtomKind.NONCE)])
    ct = b.senc(b.atom("m", AtomKind.PAYLOAD), key)
    flipped = bytes([ct[0]]) + ct[1:-1] + bytes([ct[-1] ^ 1])
    from bandsec.terms import DecryptionError

    with pytest.raises(DecryptionError):
        b.sdec(flipped, key)
    assert b.sdec(ct, key) == b.atom("m", AtomKind.PAYLOAD)


def test_concrete_nonces_unique_per_message():
    b = ConcreteBackend(seed=4)
    key = b.kdf([b.atom("k", AtomKind.NONCE)])
    m = b.atom("m", AtomKind.PAYLOAD)
    assert b.senc(m, key) != b.senc(m, key)

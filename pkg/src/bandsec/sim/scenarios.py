"""The nine attack scenarios A1..A9, the matrix runner, and the flood op.

A1 and A2 target the phone/band link (their parent goal is feeding the
user bad information); each also carries the phone/server leg of the
same attack as a `detail` sub-result.  A5 is network account theft:
sniff the login exchange, then authenticate as the victim, which only
works when the wire leaks credentials.  A8 is the out-of-band twin of
A5, driven purely by a credential grant in the config, and A6 hands
the adversary the server storage blob.  A3 reports `mitigated` rather
than a binary pass when the rate limiter bounds junk while honest
traffic flows untouched.
"""

from __future__ import annotations

from typing import Any

from ..protocol import get_variant
from ..terms import AtomKind, DhPub, Term
from .adversary import Capability
from .core import ServiceMetrics
from .ratelimit import PerSourceLimiter
from .world import (
    SECRET_LABELS,
    USER_ID,
    USER_PW,
    ScenarioConfig,
    ScenarioReport,
    World,
)

SCENARIO_IDS = ("A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9")

SCENARIO_TITLES = {
    "A1": "Replay previously transmitted information",
    "A2": "Modify data and insert it",
    "A3": "Excessive data transmission",
    "A4": "Connect the smart band to the attacker's device",
    "A5": "Steal the normal user account",
    "A6": "Obtain data from the datastore",
    "A7": "Bypass the login procedure",
    "A8": "Steal the authorized user account",
    "A9": "Sniff the transmitted network traffic",
}

SCENARIO_CAPABILITIES = {
    "A1": Capability.REPLAYER,
    "A2": Capability.DOLEV_YAO,
    "A3": Capability.FLOODER,
    "A4": Capability.DOLEV_YAO,
    "A5": Capability.DOLEV_YAO,
    "A6": Capability.PASSIVE_SNIFFER,
    "A7": Capability.DOLEV_YAO,
    "A8": Capability.DOLEV_YAO,
    "A9": Capability.PASSIVE_SNIFFER,
}


def _fresh_eve_timestamp(world: World) -> Term:
    """The adversary's own clock reading for acting as participant E.

    Scheduled attack ticks are kept disjoint from honest send ticks so
    the labeled honest timestamp atoms stay meaningful.
    """
    now = world.loop.now
    assert now not in world.honest_ticks, "adversary participant tick collides with honest send"
    ts = world.backend.timestamp(now)
    world.adversary.grant(ts)
    return ts


# ---------------------------------------------------------------------------
# Scenario drivers
# ---------------------------------------------------------------------------


def _drive_a1(world: World) -> dict[str, Any]:
    world.standard_band_setup(0)
    world.schedule_phone_band_data(13)
    world.standard_server_setup(20)

    def replay_band_data():
        wires = [w for (tag, frm, to, w) in world.sent_log if tag == "band-data" and to == "B"]
        if wires:
            world.inject("P", "B", "band-data", wires[0])

    def replay_login():
        wires = [w for (tag, frm, to, w) in world.sent_log if tag == "login"]
        if wires:
            world.inject("P", "W", "login", wires[0])

    world.at(16, replay_band_data)
    world.at(26, replay_login)
    world.run()
    return {
        "goal": world.injected_accepted.get("band-data", 0) > 0,
        "detail": {
            "band_replay_accepted": world.injected_accepted.get("band-data", 0) > 0,
            "server_login_replay_accepted": world.injected_accepted.get("login", 0) > 0,
        },
    }


def _drive_a2(world: World) -> dict[str, Any]:
    b = world.backend
    state = {"band_done": False, "server_done": False}

    def forged_message(session_encrypted: bool, timestamps: bool) -> Term:
        junk = b.atom("junkPayload.E", AtomKind.PAYLOAD)
        body = b.pair(b.atom("P", AtomKind.IDENTITY), junk)
        if timestamps:
            body = b.pair(b.atom("junkNonce.E", AtomKind.NONCE), body)
        if session_encrypted:
            return b.senc(body, b.kdf([b.atom("junkNonce.E", AtomKind.NONCE)]))
        return body

    def intercept(tag: str, frm: str, to: str, wire: Term):
        if tag == "band-data" and frm == "P" and not state["band_done"]:
            state["band_done"] = True
            forged = forged_message(True, world.variant.timestamps_on("band"))
            return [("P", "B", tag, forged, True)]
        if tag == "data" and frm == "P" and not state["server_done"]:
            state["server_done"] = True
            forged = forged_message(
                world.variant.server_encrypted, world.variant.timestamps_on("server")
            )
            return [("P", "W", tag, forged, True)]
        return None

    world.intercept = intercept
    world.standard_band_setup(0)
    world.schedule_phone_band_data(13)
    world.standard_server_setup(20)
    world.schedule_phone_server_data(28)
    world.run()
    return {
        "goal": world.injected_accepted.get("band-data", 0) > 0,
        "detail": {
            "band_modified_accepted": world.injected_accepted.get("band-data", 0) > 0,
            "server_modified_accepted": world.injected_accepted.get("data", 0) > 0,
        },
    }


def _drive_a3(world: World) -> dict[str, Any]:
    b = world.backend
    cfg = world.config
    world.standard_band_setup(0)
    for i in range(6):
        world.schedule_phone_band_data(13 + 4 * i)

    junk = b.pair(b.atom("E", AtomKind.IDENTITY), b.atom("junkPayload.E", AtomKind.PAYLOAD))

    def flood_tick():
        for _ in range(cfg.flood_rate):
            world.inject("E", "B", "band-data", junk)

    for t in range(14, 14 + cfg.flood_duration):
        world.at(t, flood_tick)
    world.run()
    degraded = world.band_injected_delivered > cfg.dos_threshold
    honest_ok = world.honest_band_accepted == world.honest_band_sent
    return {
        "goal": degraded,
        "status": "mitigated" if (not degraded and cfg.limiter_enabled and honest_ok) else None,
        "detail": {
            "junk_sent": cfg.flood_rate * cfg.flood_duration,
            "junk_delivered": world.band_injected_delivered,
            "junk_rate_limited": cfg.flood_rate * cfg.flood_duration
            - world.band_injected_delivered,
            "honest_sent": world.honest_band_sent,
            "honest_accepted": world.honest_band_accepted,
            "limiter_enabled": cfg.limiter_enabled,
            "dos_threshold": cfg.dos_threshold,
        },
    }


def _drive_a4(world: World) -> dict[str, Any]:
    b = world.backend
    # Band is paired with the owner's phone but not currently connected;
    # under the legacy variant it is simply unpaired, as shipped.
    world.standard_band_setup(0, connect=False)

    def attempt_connect():
        legacy_req = b.pair(b.atom("E", AtomKind.IDENTITY), b.dh_pub("junkNonce.E"))
        world.inject("E", "B", "connect", legacy_req)
        bogus = b.senc(
            b.atom("junkPayload.E", AtomKind.PAYLOAD),
            b.kdf([b.atom("junkNonce.E", AtomKind.NONCE)]),
        )
        world.inject("E", "B", "connect", bogus)

    def follow_up():
        # If the band answered, finish the unauthenticated DH and ask for data.
        resps = [
            w for (tag, frm, to, w) in world.sent_log if tag == "connect-resp" and to == "E"
        ]
        if not resps:
            return
        _band_id, band_pub = b.unpair(resps[0])
        if not isinstance(band_pub, DhPub):
            return
        key = b.kdf([b.dh_shared(band_pub, "junkNonce.E")])
        ts = _fresh_eve_timestamp(world)
        body = b.pair(
            b.atom("E", AtomKind.IDENTITY), b.atom("junkPayload.E", AtomKind.PAYLOAD)
        )
        if world.variant.timestamps_on("band"):
            body = b.pair(ts, body)
        world.try_inject("E", "B", "band-data", b.senc(body, key))

    world.at(10, attempt_connect)
    world.at(15, follow_up)
    world.run()
    return {
        "goal": world.band.connected and world.band.paired_peer == "E",
        "detail": {
            "band_connected_to_adversary": world.band.connected
            and world.band.paired_peer == "E",
            "band_paired_peer": world.band.paired_peer,
        },
    }


def _craft_login_as_victim(world: World, ts: Term | None) -> Term | None:
    """A login message built from derived credentials, or None.

    Account theft requires the credential pieces themselves; replaying
    an observed login blob verbatim is scenario A1's replay attack, not
    theft, so it does not count here.
    """
    from ..dolev_yao import derives

    b = world.backend
    id_v = b.atom(USER_ID, AtomKind.IDENTITY)
    pw_v = b.atom(USER_PW, AtomKind.PASSWORD)
    if world.variant.server_plaintext:
        pieces = [id_v, pw_v]
        message = b.pair(id_v, pw_v)
    else:
        pieces = [id_v, b.hash(pw_v)]
        body = b.pair(id_v, b.hash(pw_v))
        if world.variant.timestamps_on("server") and ts is not None:
            body = b.pair(ts, body)
        message = b.aenc(body, world.server.published["enc_pub"])
    if all(derives(world.adversary.knowledge, p) for p in pieces):
        return message
    return None


def _drive_a5(world: World) -> dict[str, Any]:
    world.standard_server_setup(0)
    world.schedule_phone_server_data(8)

    def attempt_theft():
        if world.config.grant_credentials:
            b = world.backend
            world.adversary.grant(
                b.atom(USER_ID, AtomKind.IDENTITY), b.atom(USER_PW, AtomKind.PASSWORD)
            )
        ts = _fresh_eve_timestamp(world) if world.variant.timestamps_on("server") else None
        crafted = _craft_login_as_victim(world, ts)
        if crafted is None:
            world.note("inject-failed", to="W", tag="login", wire="<credentials not derivable>")
        else:
            world.try_inject("E", "W", "login", crafted)

    world.at(21, attempt_theft)
    world.run()
    return {
        "goal": world.adversary_login_accepted,
        "status": None if world.adversary_login_accepted else "out-of-band",
        "detail": {
            "credentials_derived": [
                lbl for lbl in ("PW", "ID") if lbl in world.learned_labels()
            ],
            "grant_credentials": world.config.grant_credentials,
        },
    }


def _drive_a6(world: World) -> dict[str, Any]:
    # Physical datastore capture is a capability grant, not a network event.
    blob = world.server.storage_blob()
    world.adversary.grant(*blob)
    world.run()
    from ..dolev_yao import derives

    record_leaked = derives(world.adversary.knowledge, world.record)
    pw_leaked = "PW" in world.learned_labels()
    return {
        "goal": record_leaked,
        "detail": {
            "storage_encrypted": world.config.storage_encrypted,
            "record_leaked": record_leaked,
            "password_recovered_from_hash": pw_leaked,
            "blob_terms": len(blob),
        },
    }


def _drive_a7(world: World) -> dict[str, Any]:
    b = world.backend

    def attempt_bypass():
        # No credential knowledge at all: junk, malformed, guessed hash.
        world.try_inject("E", "W", "login", b.atom("junkPayload.E", AtomKind.PAYLOAD))
        enc_pub = world.server.published["enc_pub"]
        world.try_inject(
            "E", "W", "login", b.aenc(b.atom("junkPayload.E", AtomKind.PAYLOAD), enc_pub)
        )
        ts = _fresh_eve_timestamp(world)
        guess_body = b.pair(
            b.atom("E", AtomKind.IDENTITY), b.hash(b.atom("junkPw.E", AtomKind.PASSWORD))
        )
        if world.variant.timestamps_on("server"):
            guess_body = b.pair(ts, guess_body)
        if world.variant.server_plaintext:
            world.try_inject(
                "E",
                "W",
                "login",
                b.pair(b.atom("E", AtomKind.IDENTITY), b.atom("junkPw.E", AtomKind.PASSWORD)),
            )
        else:
            world.try_inject("E", "W", "login", b.aenc(guess_body, enc_pub))

    world.at(2, attempt_bypass)
    world.run()
    return {
        "goal": world.adversary_login_accepted,
        "detail": {"login_attempts_accepted": world.injected_accepted.get("login", 0)},
    }


def _drive_a8(world: World) -> dict[str, Any]:
    # Out-of-band account theft: only a config grant makes it possible.
    if world.config.grant_credentials:

        def use_granted():
            b = world.backend
            world.adversary.grant(
                b.atom(USER_ID, AtomKind.IDENTITY), b.atom(USER_PW, AtomKind.PASSWORD)
            )
            ts = _fresh_eve_timestamp(world) if world.variant.timestamps_on("server") else None
            crafted = _craft_login_as_victim(world, ts)
            if crafted is not None:
                world.try_inject("E", "W", "login", crafted)

        world.at(5, use_granted)
    world.run()
    return {
        "goal": world.adversary_login_accepted,
        "status": None if world.adversary_login_accepted else "out-of-band",
        "detail": {"grant_credentials": world.config.grant_credentials},
    }


def _drive_a9(world: World) -> dict[str, Any]:
    world.standard_server_setup(0)
    world.schedule_phone_server_data(8)
    world.standard_band_setup(12)
    world.schedule_phone_band_data(25)
    world.schedule_disconnect(30)
    world.run()
    learned = world.learned_labels()
    return {"goal": bool(learned), "detail": {"labels": learned}}


_DRIVERS = {
    "A1": _drive_a1,
    "A2": _drive_a2,
    "A3": _drive_a3,
    "A4": _drive_a4,
    "A5": _drive_a5,
    "A6": _drive_a6,
    "A7": _drive_a7,
    "A8": _drive_a8,
    "A9": _drive_a9,
}


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def run_scenario(
    scenario_id: str,
    variant_name: str = "secured",
    seed: int = 0,
    config: ScenarioConfig | None = None,
) -> ScenarioReport:
    if scenario_id not in _DRIVERS:
        from ..protocol import ConfigurationError

        raise ConfigurationError(f"unknown scenario {scenario_id!r}")
    get_variant(variant_name)  # raises early on unknown variant
    cfg = config or ScenarioConfig()
    cfg.seed = seed
    world = World(variant_name, cfg, SCENARIO_CAPABILITIES[scenario_id])
    outcome = _DRIVERS[scenario_id](world)
    goal = outcome["goal"]
    status = outcome.get("status")
    if status is None:
        status = "achieved" if goal else "safe"
    return ScenarioReport(
        scenario_id=scenario_id,
        protocol=variant_name,
        seed=seed,
        goal_achieved=goal,
        status=status,
        adversary_learned=world.learned_labels(),
        service_metrics=world.metrics(),
        evidence=world.trace,
        detail=outcome.get("detail", {}),
    )


def run_matrix(
    scenario_ids: list[str],
    variant_names: list[str],
    seed: int = 0,
    config: ScenarioConfig | None = None,
) -> dict[str, Any]:
    """Cross product of run_scenario results, deterministic per seed."""
    if not variant_names:
        from ..protocol import ConfigurationError

        raise ConfigurationError("variant list must not be empty")
    cells: dict[str, dict[str, Any]] = {}
    for variant in variant_names:
        row: dict[str, Any] = {}
        for sid in scenario_ids:
            report = run_scenario(sid, variant, seed=seed, config=config)
            row[sid] = {
                "goal_achieved": report.goal_achieved,
                "status": report.status,
                "adversary_learned": report.adversary_learned,
            }
        cells[variant] = row
    return {
        "seed": seed,
        "scenarios": list(scenario_ids),
        "variants": list(variant_names),
        "cells": cells,
    }


def flood(
    rate: int,
    duration: int,
    limiter: tuple[int, int] | None = (20, 5),
    honest_interval: int = 4,
) -> dict[str, int]:
    """Standalone flooding measurement against the band, with or without
    the per-source rate limiter."""
    if rate < 0:
        from ..protocol import ConfigurationError

        raise ConfigurationError("flood rate must be non-negative")
    cfg = ScenarioConfig(
        limiter_enabled=limiter is not None,
        limiter_capacity=limiter[0] if limiter else 20,
        limiter_refill=limiter[1] if limiter else 5,
        flood_rate=rate,
        flood_duration=duration,
    )
    world = World("secured", cfg, Capability.FLOODER)
    b = world.backend
    if rate == 0:
        return {
            "junk_sent": 0,
            "junk_delivered": 0,
            "junk_rate_limited": 0,
            "honest_sent": 0,
            "honest_accepted": 0,
            "victim_vibrations": 0,
        }
    world.standard_band_setup(0)
    for i in range(max(0, duration // honest_interval)):
        world.schedule_phone_band_data(13 + honest_interval * i)
    junk = b.pair(b.atom("E", AtomKind.IDENTITY), b.atom("junkPayload.E", AtomKind.PAYLOAD))

    def flood_tick():
        for _ in range(rate):
            world.inject("E", "B", "band-data", junk)

    for t in range(14, 14 + duration):
        world.at(t, flood_tick)
    world.run()
    return {
        "junk_sent": rate * duration,
        "junk_delivered": world.band_injected_delivered,
        "junk_rate_limited": rate * duration - world.band_injected_delivered,
        "honest_sent": world.honest_band_sent,
        "honest_accepted": world.honest_band_accepted,
        "victim_vibrations": world.band.vibrations,
    }

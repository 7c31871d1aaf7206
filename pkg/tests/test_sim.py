"""Simulator: scenario outcomes, capability containment, determinism."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bandsec.protocol import ConfigurationError
from bandsec.sim import (
    Capability,
    CapabilityViolation,
    ScenarioConfig,
    SCENARIO_IDS,
    flood,
    run_matrix,
    run_scenario,
)
from bandsec.sim.ratelimit import PerSourceLimiter, TokenBucket

ALL_VARIANTS = [
    "secured",
    "baseline-plaintext",
    "baseline-no-timestamp",
    "baseline-legacy-connect",
]

LABELED = {"PW", "ID", "kir", "PhoneData", "ServerData", "BandData", "connectionReq", "connectionRes", "T"}


def test_a4_legacy_connect_achieved():
    r = run_scenario("A4", "baseline-legacy-connect")
    assert r.goal_achieved
    assert r.detail["band_connected_to_adversary"]
    assert "BandData" in r.adversary_learned


def test_a4_secured_safe():
    r = run_scenario("A4", "secured")
    assert not r.goal_achieved
    assert r.status == "safe"


def test_a9_plaintext_leaks_phone_data():
    r = run_scenario("A9", "baseline-plaintext")
    assert r.goal_achieved
    assert "PhoneData" in r.adversary_learned
    assert "PW" in r.adversary_learned


def test_a9_secured_leaks_nothing():
    r = run_scenario("A9", "secured")
    assert not r.goal_achieved
    assert r.adversary_learned == []


def test_a1_no_timestamp_vs_secured():
    assert run_scenario("A1", "baseline-no-timestamp").goal_achieved
    assert not run_scenario("A1", "secured").goal_achieved


def test_a2_reports_both_links():
    r = run_scenario("A2", "baseline-plaintext")
    assert not r.goal_achieved  # band link stays intact
    assert r.detail["server_modified_accepted"]
    assert not r.detail["band_modified_accepted"]


def test_a3_mitigated_with_limiter():
    r = run_scenario("A3", "secured")
    assert not r.goal_achieved
    assert r.status == "mitigated"
    assert r.detail["honest_accepted"] == r.detail["honest_sent"]


def test_a3_degrades_without_limiter():
    cfg = ScenarioConfig(limiter_enabled=False)
    r = run_scenario("A3", "secured", config=cfg)
    assert r.goal_achieved


def test_a5_sniffing_steals_account_only_in_plaintext():
    assert run_scenario("A5", "baseline-plaintext").goal_achieved
    for variant in ("secured", "baseline-no-timestamp", "baseline-legacy-connect"):
        assert not run_scenario("A5", variant).goal_achieved


def test_a5_grant_models_weak_hygiene():
    cfg = ScenarioConfig(grant_credentials=True)
    assert run_scenario("A5", "secured", config=cfg).goal_achieved


def test_a6_defended_by_storage_encryption():
    assert not run_scenario("A6", "secured").goal_achieved
    cfg = ScenarioConfig(storage_encrypted=False)
    r = run_scenario("A6", "secured", config=cfg)
    assert r.goal_achieved
    assert not r.detail["password_recovered_from_hash"]


def test_a7_no_bypass_under_any_variant():
    for variant in ALL_VARIANTS:
        assert not run_scenario("A7", variant).goal_achieved


def test_a8_out_of_band_by_default():
    r = run_scenario("A8", "secured")
    assert not r.goal_achieved
    assert r.status == "out-of-band"
    cfg = ScenarioConfig(grant_credentials=True)
    assert run_scenario("A8", "secured", config=cfg).goal_achieved


def test_unknown_scenario_and_variant_rejected():
    with pytest.raises(ConfigurationError):
        run_scenario("A10", "secured")
    with pytest.raises(ConfigurationError):
        run_scenario("A1", "no-such-variant")
    with pytest.raises(ConfigurationError):
        run_matrix(["A1"], [])


def test_matrix_empty_scenarios_gives_empty_rows():
    m = run_matrix([], ["secured"])
    assert m["cells"] == {"secured": {}}


def test_secured_never_leaks_any_label():
    for sid in SCENARIO_IDS:
        r = run_scenario(sid, "secured")
        assert set(r.adversary_learned) & LABELED == set(), (sid, r.adversary_learned)


def test_each_baseline_fails_exactly_its_target():
    expected = {
        "secured": set(),
        "baseline-plaintext": {"A5", "A9"},
        "baseline-no-timestamp": {"A1"},
        "baseline-legacy-connect": {"A4"},
    }
    m = run_matrix(list(SCENARIO_IDS), ALL_VARIANTS)
    for variant, row in m["cells"].items():
        achieved = {sid for sid, cell in row.items() if cell["goal_achieved"]}
        assert achieved == expected[variant], (variant, achieved)


def test_passive_sniffer_never_emits():
    r = run_scenario("A9", "baseline-plaintext")
    assert not any(e.event == "inject" for e in r.evidence)


def test_replayer_emissions_are_verbatim():
    r = run_scenario("A1", "baseline-no-timestamp")
    injected = [e for e in r.evidence if e.event == "inject"]
    sends = {e.detail["wire"] for e in r.evidence if e.event == "send"}
    assert injected
    assert all(e.detail["wire"] in sends for e in injected)


def test_determinism_byte_identical_reports():
    a = run_scenario("A9", "baseline-plaintext", seed=7).to_json()
    b = run_scenario("A9", "baseline-plaintext", seed=7).to_json()
    assert a == b
    m1 = json.dumps(run_matrix(list(SCENARIO_IDS), ALL_VARIANTS, seed=3), sort_keys=True)
    m2 = json.dumps(run_matrix(list(SCENARIO_IDS), ALL_VARIANTS, seed=3), sort_keys=True)
    assert m1 == m2


# ---------------------------------------------------------------------------
# Flood and token bucket
# ---------------------------------------------------------------------------


def test_flood_without_limiter_floods():
    m = flood(100, 50, limiter=None)
    assert m["junk_delivered"] == 5000
    assert m["honest_accepted"] == m["honest_sent"]


def test_flood_with_limiter_bounded_by_bucket_arithmetic():
    m = flood(100, 50, limiter=(20, 5))
    assert m["junk_delivered"] <= 20 + 5 * 50
    assert m["junk_delivered"] > 0
    assert m["honest_accepted"] == m["honest_sent"] > 0


def test_flood_rate_zero_all_metrics_zero():
    m = flood(0, 50)
    assert all(v == 0 for v in m.values())


@settings(max_examples=500, deadline=None)
@given(
    st.integers(min_value=1, max_value=40),
    st.integers(min_value=0, max_value=10),
    st.lists(st.tuples(st.integers(min_value=0, max_value=50), st.booleans()), max_size=60),
)
def test_token_bucket_conservation(capacity, refill, events):
    bucket = TokenBucket(capacity, refill)
    now = 0
    for dt, spend in events:
        now += dt
        if spend:
            bucket.allow(now)
        else:
            bucket._refill(now)
        assert 0 <= bucket.tokens <= capacity


@settings(max_examples=500, deadline=None)
@given(
    st.integers(min_value=1, max_value=30),
    st.integers(min_value=0, max_value=8),
    st.integers(min_value=1, max_value=60),
    st.integers(min_value=1, max_value=120),
)
def test_flood_bound_burst_plus_refill(capacity, refill, ticks, rate):
    limiter = PerSourceLimiter(capacity, refill)
    accepted = 0
    for t in range(ticks):
        for _ in range(rate):
            if limiter.allow("E", t):
                accepted += 1
    assert accepted <= capacity + refill * ticks


def test_rate_limited_messages_do_not_reach_band():
    limited = flood(100, 20, limiter=(20, 5))
    assert limited["victim_vibrations"] < 100 * 20

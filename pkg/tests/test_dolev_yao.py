"""Deduction engine checked against a brute-force saturation oracle.

The oracle saturates the set of derivable terms over the subterm
universe of (facts, goal) by blindly applying every rule until nothing
changes.  It shares no code with the goal-directed engine.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bandsec.dolev_yao import AdversaryKnowledge, analyze, closure, derives
from bandsec.terms import (
    AsymEnc,
    Atom,
    AtomKind,
    DhPub,
    DhShared,
    Hash,
    KdfKey,
    Pair,
    PrivKey,
    PubKey,
    Sig,
    SymEnc,
    Term,
    aenc,
    hash_term,
    pair,
    senc,
    subterms,
)

M = Atom("m", AtomKind.PAYLOAD)
K = Atom("k", AtomKind.NONCE)
PW = Atom("pw", AtomKind.PASSWORD)
ID = Atom("u1", AtomKind.IDENTITY)
T1 = Atom("100", AtomKind.TIMESTAMP)


def K_(*facts: Term) -> AdversaryKnowledge:
    return AdversaryKnowledge(frozenset(facts))


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def oracle_derivable(facts: frozenset[Term], goal: Term) -> bool:
    universe: set[Term] = set()
    for f in facts:
        universe.update(subterms(f))
    universe.update(subterms(goal))
    # Exponent atoms can always produce their DH public value.
    for t in list(universe):
        if isinstance(t, DhPub):
            universe.add(Atom(t.exponent, AtomKind.NONCE))
        if isinstance(t, DhShared):
            for e in t.exponents:
                universe.add(Atom(e, AtomKind.NONCE))
                universe.add(DhPub(e))

    derivable = set(facts)
    changed = True
    while changed:
        changed = False
        for t in list(derivable):
            if isinstance(t, Pair):
                for part in (t.left, t.right):
                    if part not in derivable:
                        derivable.add(part)
                        changed = True
            if isinstance(t, SymEnc) and t.key in derivable and t.body not in derivable:
                derivable.add(t.body)
                changed = True
            if isinstance(t, AsymEnc) and PrivKey(t.pubkey.owner) in derivable and t.body not in derivable:
                derivable.add(t.body)
                changed = True
        for t in universe:
            if t in derivable:
                continue
            ok = False
            if isinstance(t, Pair):
                ok = t.left in derivable and t.right in derivable
            elif isinstance(t, SymEnc):
                ok = t.body in derivable and t.key in derivable
            elif isinstance(t, AsymEnc):
                ok = t.body in derivable and t.pubkey in derivable
            elif isinstance(t, Hash):
                ok = t.body in derivable
            elif isinstance(t, Sig):
                ok = t.body in derivable and t.signkey in derivable
            elif isinstance(t, KdfKey):
                ok = all(i in derivable for i in t.inputs)
            elif isinstance(t, DhPub):
                ok = Atom(t.exponent, AtomKind.NONCE) in derivable
            elif isinstance(t, DhShared):
                x, y = t.exponents
                xk = Atom(x, AtomKind.NONCE) in derivable
                yk = Atom(y, AtomKind.NONCE) in derivable
                ok = (xk and (DhPub(y) in derivable or yk)) or (yk and DhPub(x) in derivable)
            if ok:
                derivable.add(t)
                changed = True
    return goal in derivable


# ---------------------------------------------------------------------------
# Pinned examples
# ---------------------------------------------------------------------------


def test_decryption_rule():
    assert derives(K_(senc(M, K), K), M)


def test_perfect_cryptography():
    assert not derives(K_(senc(M, K)), M)


def test_hash_one_way():
    assert not derives(K_(hash_term(PW)), PW)


def test_login_blob_hides_id():
    blob = aenc(pair(T1, pair(ID, Hash(PW))), PubKey("W"))
    assert not derives(K_(blob, PubKey("W")), ID)
    assert derives(K_(blob, PubKey("W"), PrivKey("W")), ID)


def test_dh_shared_from_pub_and_exponent():
    e = Atom("e", AtomKind.NONCE)
    assert derives(K_(DhPub("y"), e), DhShared(("e", "y")))
    assert derives(K_(DhPub("y"), e), KdfKey((DhShared(("y", "e")),)))
    assert not derives(K_(DhPub("y"), DhPub("x")), DhShared(("x", "y")))


def test_kdf_keyed_ciphertext_opens_when_inputs_known():
    key = KdfKey((Atom("n1", AtomKind.NONCE), Atom("n2", AtomKind.NONCE)))
    ct = senc(M, key)
    assert not derives(K_(ct, Atom("n1", AtomKind.NONCE)), M)
    assert derives(K_(ct, Atom("n1", AtomKind.NONCE), Atom("n2", AtomKind.NONCE)), M)


def test_signature_does_not_leak_body():
    assert not derives(K_(Sig(M, PrivKey("P"))), M)


# ---------------------------------------------------------------------------
# Oracle agreement and closure laws
# ---------------------------------------------------------------------------

pool_atoms = [
    Atom("a"),
    Atom("n1", AtomKind.NONCE),
    Atom("n2", AtomKind.NONCE),
    Atom("pw", AtomKind.PASSWORD),
    Atom("d", AtomKind.PAYLOAD),
    PubKey("W"),
    PrivKey("W"),
    DhPub("x"),
]


def small_terms(max_leaves: int = 4):
    return st.recursive(
        st.sampled_from(pool_atoms),
        lambda inner: st.one_of(
            st.builds(Pair, inner, inner),
            st.builds(SymEnc, inner, inner),
            st.builds(lambda b: AsymEnc(b, PubKey("W")), inner),
            st.builds(Hash, inner),
            st.builds(lambda b: Sig(b, PrivKey("W")), inner),
            st.builds(lambda a: KdfKey((a,)), inner),
            st.builds(lambda a, b: KdfKey((a, b)), inner, inner),
        ),
        max_leaves=max_leaves,
    )


@settings(max_examples=500, deadline=None)
@given(st.sets(small_terms(), min_size=0, max_size=5), small_terms())
def test_derives_matches_oracle(facts, goal):
    k = AdversaryKnowledge(frozenset(facts))
    assert derives(k, goal) == oracle_derivable(k.facts, goal)


@settings(max_examples=60, deadline=None)
@given(st.sets(st.sampled_from(pool_atoms[:5]) | small_terms(max_leaves=2), min_size=0, max_size=3))
def test_closure_laws(facts):
    k = AdversaryKnowledge(frozenset(facts))
    c1 = closure(k, depth_limit=2)
    assert k.facts <= c1
    assert closure(AdversaryKnowledge(c1), depth_limit=2) == c1
    with_extra = closure(k.with_facts(Atom("extra")), depth_limit=2)
    assert c1 <= with_extra


def test_closure_laws_depth_three():
    k = K_(senc(M, K), K)
    c1 = closure(k, depth_limit=3)
    assert k.facts <= c1
    assert M in c1
    assert Pair(M, K) in c1
    assert closure(AdversaryKnowledge(c1), depth_limit=3) == c1


def test_analyze_is_monotone_and_idempotent():
    facts = frozenset({senc(M, K), K, pair(ID, T1)})
    a1 = analyze(facts)
    assert facts <= a1
    assert analyze(a1) == a1

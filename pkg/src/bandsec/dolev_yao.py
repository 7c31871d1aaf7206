"""Intruder message deduction: analysis, synthesis, and bounded closure.

The adversary can open pairs, decrypt with keys it can derive, and build
new terms by pairing, encrypting, hashing, signing with known private
keys, deriving kdf keys, and exponentiating with known fresh values.
Hash, Sig and KdfKey never invert.  Exponent knowledge is carried by
nonce atoms: knowing Atom(x, NONCE) lets the adversary form g^x and
combine it with any known g^y into the shared value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import (
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
    depth,
)

DEFAULT_DEPTH_LIMIT = 8


@dataclass(frozen=True)
class AdversaryKnowledge:
    facts: frozenset[Term] = frozenset()

    def with_facts(self, *more: Term) -> "AdversaryKnowledge":
        return AdversaryKnowledge(self.facts | frozenset(more))

    def derives(self, goal: Term, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> bool:
        return derives(self, goal, depth_limit)


def _exponent_names(analyzed: frozenset[Term]) -> frozenset[str]:
    return frozenset(t.name for t in analyzed if isinstance(t, Atom) and t.kind is AtomKind.NONCE)


def analyze(facts: frozenset[Term]) -> frozenset[Term]:
    """Decomposition fixpoint: everything extractable from the facts.

    Decryption keys are themselves checked for derivability against the
    current set, so nested and kdf-keyed ciphertexts open once their key
    material becomes available.
    """
    known = set(facts)
    changed = True
    while changed:
        changed = False
        snapshot = frozenset(known)
        for t in list(known):
            extracted: list[Term] = []
            if isinstance(t, Pair):
                extracted = [t.left, t.right]
            elif isinstance(t, SymEnc) and _can_synthesize(t.key, snapshot):
                extracted = [t.body]
            elif isinstance(t, AsymEnc) and PrivKey(t.pubkey.owner) in known:
                extracted = [t.body]
            for e in extracted:
                if e not in known:
                    known.add(e)
                    changed = True
    return frozenset(known)


def _can_synthesize(goal: Term, analyzed: frozenset[Term], depth_limit: int | None = None) -> bool:
    if goal in analyzed:
        return True
    if depth_limit is not None and depth(goal) > depth_limit:
        return False
    if isinstance(goal, Pair):
        return _can_synthesize(goal.left, analyzed, depth_limit) and _can_synthesize(
            goal.right, analyzed, depth_limit
        )
    if isinstance(goal, SymEnc):
        return _can_synthesize(goal.body, analyzed, depth_limit) and _can_synthesize(
            goal.key, analyzed, depth_limit
        )
    if isinstance(goal, AsymEnc):
        return _can_synthesize(goal.body, analyzed, depth_limit) and _can_synthesize(
            goal.pubkey, analyzed, depth_limit
        )
    if isinstance(goal, Hash):
        return _can_synthesize(goal.body, analyzed, depth_limit)
    if isinstance(goal, Sig):
        return _can_synthesize(goal.body, analyzed, depth_limit) and goal.signkey in analyzed
    if isinstance(goal, KdfKey):
        return all(_can_synthesize(i, analyzed, depth_limit) for i in goal.inputs)
    if isinstance(goal, DhPub):
        return Atom(goal.exponent, AtomKind.NONCE) in analyzed
    if isinstance(goal, DhShared):
        x, y = goal.exponents
        exps = _exponent_names(analyzed)
        if x in exps and (DhPub(y) in analyzed or y in exps):
            return True
        if y in exps and DhPub(x) in analyzed:
            return True
        return False
    # Atoms, PubKey, PrivKey: only derivable when already known.
    return False


def derives(k: AdversaryKnowledge, goal: Term, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> bool:
    """True iff goal is in the Dolev-Yao closure of k.facts."""
    return _can_synthesize(goal, analyze(k.facts), depth_limit)


def can_synthesize(goal: Term, analyzed: frozenset[Term], depth_limit: int | None = None) -> bool:
    """Synthesis check over an already analyzed knowledge set."""
    return _can_synthesize(goal, analyzed, depth_limit)


def exponent_names(analyzed: frozenset[Term]) -> frozenset[str]:
    """Exponents the owner of this knowledge can raise g to."""
    return _exponent_names(analyzed)


def closure(k: AdversaryKnowledge, depth_limit: int = 3, kdf_arity: int = 2) -> frozenset[Term]:
    """Bounded enumerated closure, for property tests and small models.

    Contains the analysis fixpoint plus every synthesizable term whose
    depth stays within depth_limit.  Enumeration limits kdf inputs to
    kdf_arity terms; intended for small knowledge sets only.
    """
    # One analysis pass suffices: synthesized terms decompose back into
    # parts that are already in the set, so saturation cannot enable any
    # further extraction.
    known = set(analyze(k.facts))
    depths = {t: depth(t) for t in known}
    changed = True
    while changed:
        changed = False
        base = [t for t in known if depths[t] < depth_limit]
        new: set[Term] = set()
        for a in base:
            new.add(Hash(a))
            new.add(KdfKey((a,)))
            if isinstance(a, Atom) and a.kind is AtomKind.NONCE:
                new.add(DhPub(a.name))
            for b in base:
                new.add(Pair(a, b))
                new.add(SymEnc(a, b))
                if kdf_arity >= 2:
                    new.add(KdfKey((a, b)))
                if isinstance(b, PubKey):
                    new.add(AsymEnc(a, b))
                if isinstance(b, PrivKey):
                    new.add(Sig(a, b))
        exps = _exponent_names(frozenset(known))
        for t in known:
            if isinstance(t, DhPub):
                for x in exps:
                    new.add(DhShared((t.exponent, x)))
        for t in new:
            if t not in known:
                d = depth(t)
                if d <= depth_limit:
                    known.add(t)
                    depths[t] = d
                    changed = True
    return frozenset(known)

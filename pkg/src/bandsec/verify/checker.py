"""Bounded Dolev-Yao secrecy checker over role scripts.

The intruder is the network: every sent term lands in its knowledge and
it may deliver to any pending receive any derivable term that unifies
with the receive pattern.  Matching is typed: a pattern variable binds
only atoms carrying its declared script type, and the intruder owns one
junk atom per type so it can always speak the protocol's vocabulary.
The search is breadth first over trace length with canonical-state
memoization, so the first counterexample found for a claim is a
shortest one.  A claim is Falsified if some reachable state lets the
intruder derive that claim's secret instance for a completed honest
session; otherwise it is Verified within the explored bounds, and the
verdict says so explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from ..dolev_yao import analyze, can_synthesize, exponent_names
from ..protocol.scripts import (
    Claim,
    Decl,
    Event,
    ProtocolSuite,
    EXPONENT_TYPE,
    TYPE_KINDS,
    Var,
)
from ..terms import (
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
)
from ..wire import show

INTRUDER = "E"


class BoundsError(ValueError):
    pass


def _secret_name(secret: Term) -> str:
    if isinstance(secret, (Var, Atom)):
        return secret.name
    return show(secret)


@dataclass(frozen=True)
class Bounds:
    sessions_per_role: int = 2
    max_trace_length: int = 24
    intruder_term_depth: int = 8

    def __post_init__(self) -> None:
        if min(self.sessions_per_role, self.max_trace_length, self.intruder_term_depth) <= 0:
            raise BoundsError("all bounds must be strictly positive")


@dataclass(frozen=True)
class TraceEvent:
    action: str  # "send" | "recv"
    role: str
    session: int
    step: int
    term: Term

    def to_dict(self) -> dict[str, Any]:
        return {
            "action": self.action,
            "role": self.role,
            "session": self.session,
            "step": self.step,
            "term": show(self.term),
        }


@dataclass
class Verdict:
    claim: Claim
    status: str  # "verified" | "falsified"
    secret_instance: Term | None = None
    trace: tuple[TraceEvent, ...] | None = None

    @property
    def falsified(self) -> bool:
        return self.status == "falsified"


@dataclass
class VerdictTable:
    suite: str
    bounds: Bounds
    rows: list[Verdict]
    states_explored: int
    truncated: bool

    @property
    def all_verified(self) -> bool:
        return all(not v.falsified for v in self.rows)

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "bounds": {
                "sessions_per_role": self.bounds.sessions_per_role,
                "max_trace_length": self.bounds.max_trace_length,
                "intruder_term_depth": self.bounds.intruder_term_depth,
            },
            "states_explored": self.states_explored,
            "search_truncated": self.truncated,
            "claims": [
                {
                    "label": v.claim.label,
                    "role": v.claim.role,
                    "secret": _secret_name(v.claim.secret),
                    "status": ("Falsified" if v.falsified else "Verified (within bounds)"),
                    "comment": (
                        f"Attack trace of {len(v.trace)} events."
                        if v.falsified
                        else "No attack within bounds."
                    ),
                    "trace": [e.to_dict() for e in v.trace] if v.trace else [],
                }
                for v in self.rows
            ],
        }

    def to_text(self) -> str:
        head = f"suite {self.suite}: sessions_per_role={self.bounds.sessions_per_role}, "
        head += f"max_trace_length={self.bounds.max_trace_length}, "
        head += f"intruder_term_depth={self.bounds.intruder_term_depth}"
        lines = [head, f"states explored: {self.states_explored}", ""]
        width = max(len(v.claim.label) for v in self.rows) if self.rows else 2
        for v in self.rows:
            status = "Falsified" if v.falsified else "Ok Verified (within bounds)"
            comment = (
                f"Attack trace of {len(v.trace)} events."
                if v.falsified
                else "No attack within bounds."
            )
            lines.append(
                f"{v.claim.role}  {v.claim.label:<{width}}  Secret {_secret_name(v.claim.secret):<14}  {status:<28}  {comment}"
            )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Session instantiation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Session:
    role: str
    index: int
    events: tuple[Event, ...]
    name_map: dict[str, str] = field(compare=False, hash=False, default_factory=dict)


def _kind_of(typename: str) -> AtomKind:
    return TYPE_KINDS[typename]


def build_sessions(
    suite: ProtocolSuite, sessions_per_role: int
) -> tuple[list[Session], dict[str, str]]:
    """Instantiate per-session fresh names and the global typemap."""
    typemap = suite.static_typemap()
    sessions: list[Session] = []
    for role, script in suite.roles.items():
        for i in range(sessions_per_role):
            name_map: dict[str, str] = {}
            for d in script.decls:
                if d.flavor != "fresh":
                    continue
                fresh_name = f"{d.name}#{role}{i}"
                name_map[d.name] = fresh_name
                if d.typename != EXPONENT_TYPE:
                    typemap[fresh_name] = d.typename
            sessions.append(Session(role, i, script.events, name_map))
    return sessions, typemap


def instantiate(t: Term, name_map: dict[str, str], binds: dict[str, Any]) -> Term:
    """Rename fresh values and substitute bindings; may stay partial."""
    if isinstance(t, Var):
        return binds.get(t.name, t)
    if isinstance(t, Atom):
        new = name_map.get(t.name)
        return Atom(new, t.kind) if new else t
    if isinstance(t, Pair):
        return Pair(instantiate(t.left, name_map, binds), instantiate(t.right, name_map, binds))
    if isinstance(t, Hash):
        return Hash(instantiate(t.body, name_map, binds))
    if isinstance(t, SymEnc):
        return SymEnc(
            instantiate(t.body, name_map, binds), instantiate(t.key, name_map, binds)
        )
    if isinstance(t, AsymEnc):
        return AsymEnc(instantiate(t.body, name_map, binds), t.pubkey)
    if isinstance(t, Sig):
        return Sig(instantiate(t.body, name_map, binds), t.signkey)
    if isinstance(t, KdfKey):
        return KdfKey(tuple(instantiate(i, name_map, binds) for i in t.inputs))
    if isinstance(t, DhPub):
        return DhPub(_subst_exponent(t.exponent, name_map, binds))
    if isinstance(t, DhShared):
        a, b = t.exponents
        return DhShared(
            (_subst_exponent(a, name_map, binds), _subst_exponent(b, name_map, binds))
        )
    return t


def _subst_exponent(e: str, name_map: dict[str, str], binds: dict[str, Any]) -> str:
    if e.startswith("?"):
        bound = binds.get(e)
        return bound if isinstance(bound, str) else e
    return name_map.get(e, e)


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, DhPub):
        return not t.exponent.startswith("?")
    if isinstance(t, DhShared):
        return not any(e.startswith("?") for e in t.exponents)
    if isinstance(t, Pair):
        return is_ground(t.left) and is_ground(t.right)
    if isinstance(t, Hash):
        return is_ground(t.body)
    if isinstance(t, SymEnc):
        return is_ground(t.body) and is_ground(t.key)
    if isinstance(t, AsymEnc):
        return is_ground(t.body)
    if isinstance(t, Sig):
        return is_ground(t.body)
    if isinstance(t, KdfKey):
        return all(is_ground(i) for i in t.inputs)
    return True


# ---------------------------------------------------------------------------
# Typed unification
# ---------------------------------------------------------------------------


def unify(pattern: Term, ground: Term, typemap: dict[str, str], binds: dict[str, Any] | None = None) -> Optional[dict[str, Any]]:
    """Match a pattern against a ground term; typed variables bind atoms."""
    binds = dict(binds or {})
    if _unify(pattern, ground, typemap, binds):
        return binds
    return None


def _unify(p: Term, g: Term, typemap: dict[str, str], binds: dict[str, Any]) -> bool:
    if isinstance(p, Var):
        prev = binds.get(p.name)
        if prev is not None:
            return prev == g
        if not isinstance(g, Atom) or g.kind is not p.kind:
            return False
        if typemap.get(g.name) != p.typename:
            return False
        binds[p.name] = g
        return True
    if isinstance(p, DhPub):
        if not isinstance(g, DhPub):
            return False
        return _unify_exponent(p.exponent, g.exponent, binds)
    if isinstance(p, DhShared):
        if not isinstance(g, DhShared):
            return False
        (pa, pb), (ga, gb) = p.exponents, g.exponents
        snapshot = dict(binds)
        if _unify_exponent(pa, ga, binds) and _unify_exponent(pb, gb, binds):
            return True
        binds.clear()
        binds.update(snapshot)
        return _unify_exponent(pa, gb, binds) and _unify_exponent(pb, ga, binds)
    if isinstance(p, Atom):
        return p == g
    if isinstance(p, Pair) and isinstance(g, Pair):
        return _unify(p.left, g.left, typemap, binds) and _unify(p.right, g.right, typemap, binds)
    if isinstance(p, Hash) and isinstance(g, Hash):
        return _unify(p.body, g.body, typemap, binds)
    if isinstance(p, SymEnc) and isinstance(g, SymEnc):
        return _unify(p.body, g.body, typemap, binds) and _unify(p.key, g.key, typemap, binds)
    if isinstance(p, AsymEnc) and isinstance(g, AsymEnc):
        return p.pubkey == g.pubkey and _unify(p.body, g.body, typemap, binds)
    if isinstance(p, Sig) and isinstance(g, Sig):
        return p.signkey == g.signkey and _unify(p.body, g.body, typemap, binds)
    if isinstance(p, KdfKey) and isinstance(g, KdfKey):
        if len(p.inputs) != len(g.inputs):
            return False
        return all(_unify(pi, gi, typemap, binds) for pi, gi in zip(p.inputs, g.inputs))
    return p == g


def _unify_exponent(p: str, g: str, binds: dict[str, Any]) -> bool:
    if p.startswith("?"):
        prev = binds.get(p)
        if prev is not None:
            return prev == g
        binds[p] = g
        return True
    return p == g


# ---------------------------------------------------------------------------
# Deliverable message enumeration
# ---------------------------------------------------------------------------


def deliverable(
    pattern: Term,
    analyzed: frozenset[Term],
    typemap: dict[str, str],
    depth_limit: int,
) -> list[tuple[dict[str, Any], Term]]:
    """All (bindings, term) the intruder can deliver against a pattern.

    Two routes per constructor: replay a term from the analyzed
    knowledge that unifies whole, or compose the constructor from
    deliverable parts when the key material is derivable.
    """
    out: dict[tuple, tuple[dict[str, Any], Term]] = {}

    def add(binds: dict[str, Any], term: Term) -> None:
        key = (tuple(sorted(binds.items(), key=repr)), term)
        out.setdefault(key, (binds, term))

    if is_ground(pattern):
        if can_synthesize(pattern, analyzed, depth_limit):
            add({}, pattern)
        return list(out.values())

    if isinstance(pattern, Var):
        for t in analyzed:
            if (
                isinstance(t, Atom)
                and t.kind is pattern.kind
                and typemap.get(t.name) == pattern.typename
            ):
                add({pattern.name: t}, t)
        return list(out.values())

    if isinstance(pattern, Pair):
        for binds1, left in deliverable(pattern.left, analyzed, typemap, depth_limit):
            right_pat = instantiate(pattern.right, {}, binds1)
            for binds2, right in deliverable(right_pat, analyzed, typemap, depth_limit):
                add({**binds1, **binds2}, Pair(left, right))
        return list(out.values())

    if isinstance(pattern, (SymEnc, AsymEnc, Hash, Sig, KdfKey, DhPub)):
        # Route 1: replay any analyzed term that unifies whole.
        for t in analyzed:
            if type(t) is type(pattern):
                binds = unify(pattern, t, typemap)
                if binds is not None:
                    add(binds, t)
        # Route 2: compose, when construction material is derivable.
        if isinstance(pattern, SymEnc) and is_ground(pattern.key):
            if can_synthesize(pattern.key, analyzed, depth_limit):
                for binds, body in deliverable(pattern.body, analyzed, typemap, depth_limit):
                    add(binds, SymEnc(body, pattern.key))
        elif isinstance(pattern, AsymEnc):
            if can_synthesize(pattern.pubkey, analyzed, depth_limit):
                for binds, body in deliverable(pattern.body, analyzed, typemap, depth_limit):
                    add(binds, AsymEnc(body, pattern.pubkey))
        elif isinstance(pattern, Hash):
            for binds, body in deliverable(pattern.body, analyzed, typemap, depth_limit):
                add(binds, Hash(body))
        elif isinstance(pattern, Sig):
            if pattern.signkey in analyzed:
                for binds, body in deliverable(pattern.body, analyzed, typemap, depth_limit):
                    add(binds, Sig(body, pattern.signkey))
        elif isinstance(pattern, DhPub):
            for name in sorted(exponent_names(analyzed)):
                binds = unify(pattern, DhPub(name), typemap)
                if binds is not None:
                    add(binds, DhPub(name))
        return list(out.values())

    return list(out.values())


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def initial_knowledge(
    suite: ProtocolSuite, typemap: dict[str, str], grants: Iterable[Term] = ()
) -> frozenset[Term]:
    """Public constants, everyone's public keys, the intruder's own
    identity and keys, and one typed junk atom per script type."""
    facts: set[Term] = set()
    for role in suite.roles:
        facts.add(Atom(role, AtomKind.IDENTITY))
        facts.add(PubKey(role))
    facts.add(Atom(INTRUDER, AtomKind.IDENTITY))
    facts.add(PubKey(INTRUDER))
    facts.add(PrivKey(INTRUDER))
    typemap[INTRUDER] = "Agent"
    typenames = {d.typename for d in suite.public}
    for script in suite.roles.values():
        typenames |= {d.typename for d in script.decls}
    for typename in sorted(typenames):
        if typename == EXPONENT_TYPE:
            name = f"exp{INTRUDER}"
            facts.add(Atom(name, AtomKind.NONCE))
            typemap[name] = "Nonce"
            continue
        name = f"{typename}{INTRUDER}"
        facts.add(Atom(name, _kind_of(typename)))
        typemap[name] = typename
    for d in suite.public:
        facts.add(Atom(d.name, d.kind))
    facts.update(grants)
    return frozenset(facts)


def verify(
    suite: ProtocolSuite,
    claims: list[Claim],
    bounds: Bounds = Bounds(),
    memoize: bool = True,
    grants: Iterable[Term] = (),
) -> VerdictTable:
    for c in claims:
        if c.role not in suite.roles:
            raise BoundsError(f"claim {c.label} references unknown role {c.role!r}")
    sessions, typemap = build_sessions(suite, bounds.sessions_per_role)
    base_knowledge = initial_knowledge(suite, typemap, grants)

    analyze_memo: dict[frozenset, frozenset] = {}

    def analyzed_for(knowledge: frozenset) -> frozenset:
        hit = analyze_memo.get(knowledge)
        if hit is None:
            hit = analyze_memo[knowledge] = analyze(knowledge)
        return hit

    derive_memo: dict[tuple, bool] = {}

    def secret_derivable(knowledge: frozenset, term: Term) -> bool:
        key = (knowledge, term)
        hit = derive_memo.get(key)
        if hit is None:
            hit = derive_memo[key] = can_synthesize(
                term, analyzed_for(knowledge), bounds.intruder_term_depth
            )
        return hit

    # State: per-session (step, sorted bindings tuple); knowledge is a
    # function of the state but carried alongside for speed.
    start = tuple((0, ()) for _ in sessions)
    knowledge_of: dict[tuple, frozenset] = {start: base_knowledge}
    parent: dict[tuple, tuple | None] = {start: None}
    parent_event: dict[tuple, TraceEvent] = {}

    falsified: dict[str, Verdict] = {}
    states_explored = 0
    truncated = False

    def check_claims(state: tuple) -> None:
        knowledge = knowledge_of[state]
        for claim in claims:
            if claim.label in falsified:
                continue
            for si, session in enumerate(sessions):
                if session.role != claim.role:
                    continue
                step, binds_t = state[si]
                if step < len(session.events):
                    continue
                binds = dict(binds_t)
                instance = instantiate(claim.secret, session.name_map, binds)
                if not is_ground(instance):
                    continue
                if secret_derivable(knowledge, instance):
                    falsified[claim.label] = Verdict(
                        claim,
                        "falsified",
                        secret_instance=instance,
                        trace=_rebuild_trace(state, parent, parent_event),
                    )
                    break

    check_claims(start)
    frontier = [start]
    depth = 0
    while frontier and len(falsified) < len(claims):
        if depth >= bounds.max_trace_length:
            truncated = True
            break
        depth += 1
        next_frontier: list[tuple] = []
        for state in frontier:
            states_explored += 1
            knowledge = knowledge_of[state]
            for si, session in enumerate(sessions):
                step, binds_t = state[si]
                if step >= len(session.events):
                    continue
                event = session.events[step]
                binds = dict(binds_t)
                if event.action == "send":
                    term = instantiate(event.pattern, session.name_map, binds)
                    successors = [(binds, term, knowledge | {term})]
                else:
                    pattern = instantiate(event.pattern, session.name_map, binds)
                    successors = []
                    for delta, term in deliverable(
                        pattern, analyzed_for(knowledge), typemap, bounds.intruder_term_depth
                    ):
                        merged = {**binds, **delta}
                        successors.append((merged, term, knowledge))
                for new_binds, term, new_knowledge in successors:
                    new_state = list(state)
                    new_state[si] = (step + 1, tuple(sorted(new_binds.items(), key=repr)))
                    child = tuple(new_state)
                    if child in knowledge_of:
                        if not memoize:
                            # Re-expand revisited states; bookkeeping keeps
                            # the first (shortest) parent for traces.
                            next_frontier.append(child)
                        continue
                    knowledge_of[child] = new_knowledge
                    parent[child] = state
                    parent_event[child] = TraceEvent(
                        event.action, session.role, session.index, event.index, term
                    )
                    check_claims(child)
                    next_frontier.append(child)
        frontier = next_frontier

    rows = []
    for claim in claims:
        if claim.label in falsified:
            rows.append(falsified[claim.label])
        else:
            rows.append(Verdict(claim, "verified"))
    return VerdictTable(suite.name, bounds, rows, states_explored, truncated)


def _rebuild_trace(
    state: tuple,
    parent: dict[tuple, tuple | None],
    parent_event: dict[tuple, TraceEvent],
) -> tuple[TraceEvent, ...]:
    events: list[TraceEvent] = []
    cur = state
    while parent.get(cur) is not None:
        events.append(parent_event[cur])
        cur = parent[cur]
    return tuple(reversed(events))

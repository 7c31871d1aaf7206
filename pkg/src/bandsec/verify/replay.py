"""Independent re-execution of checker traces.

Replaying a trace validates a Falsified verdict from the outside: every
send is recomputed from session state and must equal the recorded term,
every delivered receive must have been derivable from the intruder's
knowledge at that point and must unify with the receive pattern.  At
the end the caller checks that the claimed secret really is derivable.
Any mismatch means a checker bug, reported as a ValidationError rather
than a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from ..dolev_yao import AdversaryKnowledge, analyze, can_synthesize
from ..protocol.scripts import ProtocolSuite
from ..terms import Term
from ..wire import show
from .checker import (
    Bounds,
    TraceEvent,
    build_sessions,
    initial_knowledge,
    instantiate,
    is_ground,
    unify,
)


class ValidationError(Exception):
    """The trace does not re-execute against the scripts."""


@dataclass
class ReplayResult:
    knowledge: AdversaryKnowledge
    steps: list[dict[str, Any]]

    def derives(self, secret: Term, depth_limit: int = 8) -> bool:
        return can_synthesize(secret, analyze(self.knowledge.facts), depth_limit)


def replay_trace(
    suite: ProtocolSuite,
    trace: Iterable[TraceEvent],
    bounds: Bounds = Bounds(),
    grants: Iterable[Term] = (),
) -> ReplayResult:
    sessions, typemap = build_sessions(suite, bounds.sessions_per_role)
    by_key = {(s.role, s.index): i for i, s in enumerate(sessions)}
    steps_done = [0] * len(sessions)
    bindings: list[dict[str, Any]] = [dict() for _ in sessions]
    knowledge = set(initial_knowledge(suite, typemap, grants))
    log: list[dict[str, Any]] = []

    for n, ev in enumerate(trace):
        key = (ev.role, ev.session)
        if key not in by_key:
            raise ValidationError(f"event {n}: unknown session {key}")
        si = by_key[key]
        session = sessions[si]
        if steps_done[si] >= len(session.events):
            raise ValidationError(f"event {n}: session {key} already finished")
        script_event = session.events[steps_done[si]]
        if script_event.action != ev.action:
            raise ValidationError(
                f"event {n}: expected {script_event.action}, trace has {ev.action}"
            )
        if ev.action == "send":
            expected = instantiate(script_event.pattern, session.name_map, bindings[si])
            if expected != ev.term:
                raise ValidationError(
                    f"event {n}: send mismatch: expected {show(expected)}, got {show(ev.term)}"
                )
            knowledge.add(ev.term)
        else:
            if not is_ground(ev.term):
                raise ValidationError(f"event {n}: delivered term is not ground")
            if not can_synthesize(ev.term, analyze(frozenset(knowledge)), None):
                raise ValidationError(
                    f"event {n}: delivered term not derivable: {show(ev.term)}"
                )
            pattern = instantiate(script_event.pattern, session.name_map, bindings[si])
            binds = unify(pattern, ev.term, typemap)
            if binds is None:
                raise ValidationError(
                    f"event {n}: delivery does not match the receive pattern"
                )
            bindings[si].update(binds)
        steps_done[si] += 1
        log.append(
            {
                "n": n,
                "action": ev.action,
                "role": ev.role,
                "session": ev.session,
                "term": show(ev.term),
                "knowledge_size": len(knowledge),
            }
        )
    return ReplayResult(AdversaryKnowledge(frozenset(knowledge)), log)

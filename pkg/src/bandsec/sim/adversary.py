"""Adversary models sitting at the network position.

Every wire message passes the adversary; what it may do back is gated
by capability.  A PassiveSniffer never emits.  A Replayer re-emits only
messages it recorded verbatim.  A DolevYao adversary emits only terms
derivable from its accumulated knowledge, checked at emission time.  A
Flooder emits well-formed junk at a configured rate.  Violations are
bugs, not attack outcomes, so they raise immediately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from ..dolev_yao import AdversaryKnowledge, derives
from ..terms import Term


class Capability(str, Enum):
    NONE = "none"
    PASSIVE_SNIFFER = "passive-sniffer"
    REPLAYER = "replayer"
    INJECTOR = "injector"
    DOLEV_YAO = "dolev-yao"
    FLOODER = "flooder"


class CapabilityViolation(AssertionError):
    """An adversary tried to act beyond its declared capability."""


@dataclass
class Adversary:
    capability: Capability
    knowledge: AdversaryKnowledge = field(default_factory=AdversaryKnowledge)
    observed: list[Term] = field(default_factory=list)
    emitted: list[Term] = field(default_factory=list)

    def observe(self, wire: Term) -> None:
        self.observed.append(wire)
        self.knowledge = self.knowledge.with_facts(wire)

    def grant(self, *facts: Term) -> None:
        self.knowledge = self.knowledge.with_facts(*facts)

    def can_emit(self, wire: Term) -> bool:
        if self.capability in (Capability.NONE, Capability.PASSIVE_SNIFFER):
            return False
        if self.capability is Capability.REPLAYER:
            return wire in self.observed
        if self.capability in (Capability.DOLEV_YAO, Capability.INJECTOR):
            return derives(self.knowledge, wire)
        if self.capability is Capability.FLOODER:
            return derives(self.knowledge, wire)
        return False

    def check_emission(self, wire: Term) -> None:
        if self.capability in (Capability.NONE, Capability.PASSIVE_SNIFFER):
            raise CapabilityViolation(f"{self.capability.value} adversary tried to emit")
        if self.capability is Capability.REPLAYER and wire not in self.observed:
            raise CapabilityViolation("replayer emitted a never-observed term")
        if self.capability in (Capability.DOLEV_YAO, Capability.INJECTOR, Capability.FLOODER):
            if not derives(self.knowledge, wire):
                raise CapabilityViolation("emission not derivable from adversary knowledge")
        self.emitted.append(wire)

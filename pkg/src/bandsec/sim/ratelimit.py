"""Per-source token buckets guarding a victim's inbound queue.

Traffic-analysis mitigation for the flooding attack: a flood source
burns through its own bucket while honest low-rate senders keep theirs
topped up, so honest traffic is never dropped at honest rates.  Refill
is computed lazily from elapsed ticks, which suits a sparse event
queue; tokens never go negative and never exceed capacity.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class TokenBucket:
    capacity: int
    refill: int
    tokens: int = -1  # -1 means "start full"
    last_tick: int = 0

    def __post_init__(self) -> None:
        if self.capacity <= 0 or self.refill < 0:
            raise ValueError("capacity must be positive, refill non-negative")
        if self.tokens < 0:
            self.tokens = self.capacity

    def _refill(self, now: int) -> None:
        if now > self.last_tick:
            self.tokens = min(self.capacity, self.tokens + self.refill * (now - self.last_tick))
            self.last_tick = now

    def allow(self, now: int) -> bool:
        self._refill(now)
        if self.tokens >= 1:
            self.tokens -= 1
            return True
        return False


@dataclass
class PerSourceLimiter:
    capacity: int = 20
    refill: int = 5
    buckets: dict[str, TokenBucket] = field(default_factory=dict)

    def allow(self, source: str, now: int) -> bool:
        bucket = self.buckets.get(source)
        if bucket is None:
            bucket = self.buckets[source] = TokenBucket(self.capacity, self.refill, last_tick=now)
        return bucket.allow(now)

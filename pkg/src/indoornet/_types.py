"""Record types shared across the pipeline stages."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple

MINUTES_PER_DAY = 1440
SECONDS_PER_DAY = 86400

# Time unit tag -> units per calendar day.
UNITS_PER_DAY = {"minute": MINUTES_PER_DAY, "second": SECONDS_PER_DAY}

# RFID triples carry no room/WAP field, so every contact is placed here.
RFID_LOCATION = "l0"


class InvariantViolation(AssertionError):
    """A structural guarantee of the pipeline did not hold."""


@dataclass(frozen=True, order=True)
class Session:
    """One device's contiguous online interval at one access point."""

    device_id: str
    wap_id: str
    t_on: int
    t_off: int

    @property
    def duration(self) -> int:
        return self.t_off - self.t_on


@dataclass(frozen=True, order=True)
class ContactRecord:
    """One 20-second proximity slot; the contact is active during ``[t - 20, t]``."""

    t: int
    i: str
    j: str


@dataclass(frozen=True)
class EventInteraction:
    """A maximal interval of constant co-presence membership at one location."""

    ei_id: int
    wap_id: str
    members: FrozenSet[str]
    t_begin: int
    t_end: int

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def duration(self) -> int:
        return self.t_end - self.t_begin

    @property
    def identity(self) -> Tuple[str, FrozenSet[str]]:
        return (self.wap_id, self.members)


@dataclass(frozen=True)
class TransmissionEdge:
    source: int
    sink: int
    shared: FrozenSet[str]
    delta: int
    t_observed: int


@dataclass(frozen=True, order=True)
class TemporalInteraction:
    """A maximal pairwise co-presence interval; ``u < v`` always."""

    u: str
    v: str
    wap_id: str
    t_started: int
    t_finished: int

    def __post_init__(self):
        if self.u > self.v:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)

    @property
    def duration(self) -> int:
        return self.t_finished - self.t_started

    @property
    def pair(self) -> Tuple[str, str]:
        return (self.u, self.v)


@dataclass
class DyadSeries:
    u: str
    v: str
    tis: list = field(default_factory=list)
    inter_event: list = field(default_factory=list)
    entropy: Optional[float] = None

    @property
    def n_ti(self) -> int:
        return len(self.tis)

    @property
    def locations(self) -> list:
        return [ti.wap_id for ti in self.tis]


def members_key(members) -> str:
    """Canonical ``|``-joined rendering of a member set."""
    return "|".join(sorted(members))


def day_index(t: int, units_per_day: int = MINUTES_PER_DAY, tz_offset: int = 0) -> int:
    """Calendar day of timestamp ``t``; ``tz_offset`` is in the same unit as ``t``."""
    return (t + tz_offset) // units_per_day

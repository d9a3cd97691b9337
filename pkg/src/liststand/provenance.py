"""Facts wrapped in attribution chains: who knew what, when, via whom.

A fact is a subject/predicate/object triple with an optional event time.
Every assertion carries a chain of attributions ordered from the innermost
source (closest to the event) to the outermost observer, with times that
never decrease along the chain.  The event time itself is unconstrained
relative to the chain: an article from 2006 may report a 2001 event or
announce a future one.

Bulk entry uses JSON lines, one object per line:

    {"fact": {"subject": ..., "predicate": ..., "object": ..., "event_time": ...},
     "chain": [{"agent": ..., "kind": ..., "time": ...}, ...]}

The bulk path additionally requires the outermost attribution kind to be
"learned" or "observed": a hand-entered assertion records what somebody
came to know, never what they published.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable

from liststand.errors import ListstandError
from liststand.ingest.model import format_timestamp, parse_timestamp

ATTRIBUTION_KINDS = ("published", "learned", "observed")
INGEST_OUTER_KINDS = ("learned", "observed")


class ProvenanceError(ListstandError):
    pass


def _as_utc(value: datetime) -> datetime:
    # naive timestamps are taken to be UTC, as elsewhere in the package
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


@dataclass(frozen=True)
class Fact:
    subject: str
    predicate: str
    object: str
    event_time: datetime | None = None

    def __post_init__(self) -> None:
        if not (self.subject and self.predicate and self.object):
            raise ProvenanceError("fact fields must be non-empty")
        if self.event_time is not None:
            object.__setattr__(self, "event_time", _as_utc(self.event_time))

    def to_json_dict(self) -> dict:
        return {
            "subject": self.subject,
            "predicate": self.predicate,
            "object": self.object,
            "event_time": format_timestamp(self.event_time) if self.event_time else None,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Fact":
        raw = data.get("event_time")
        return cls(
            subject=data["subject"],
            predicate=data["predicate"],
            object=data["object"],
            event_time=parse_timestamp(raw) if raw else None,
        )


@dataclass(frozen=True)
class Attribution:
    agent: str
    kind: str
    time: datetime

    def __post_init__(self) -> None:
        if not self.agent:
            raise ProvenanceError("attribution agent must be non-empty")
        if self.kind not in ATTRIBUTION_KINDS:
            raise ProvenanceError(f"unknown attribution kind: {self.kind!r}")
        object.__setattr__(self, "time", _as_utc(self.time))

    def to_json_dict(self) -> dict:
        return {"agent": self.agent, "kind": self.kind, "time": format_timestamp(self.time)}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Attribution":
        return cls(agent=data["agent"], kind=data["kind"], time=parse_timestamp(data["time"]))


@dataclass(frozen=True)
class SourcedFact:
    fact_id: int
    fact: Fact
    chain: tuple[Attribution, ...]

    @property
    def innermost(self) -> Attribution:
        return self.chain[0]

    @property
    def outermost(self) -> Attribution:
        return self.chain[-1]

    def to_json_dict(self) -> dict:
        return {
            "fact_id": self.fact_id,
            "fact": self.fact.to_json_dict(),
            "chain": [att.to_json_dict() for att in self.chain],
        }


def check_chain(chain: tuple[Attribution, ...]) -> None:
    """Reject chains the model cannot accept."""
    if not chain:
        raise ProvenanceError("attribution chain must be non-empty")
    for earlier, later in zip(chain, chain[1:]):
        if later.time < earlier.time:
            raise ProvenanceError("non-monotone attribution chain")


def parse_assertion(data: dict) -> tuple[Fact, tuple[Attribution, ...]]:
    """One JSON object of the bulk format into a fact and its chain."""
    try:
        fact = Fact.from_json_dict(data["fact"])
        chain = tuple(Attribution.from_json_dict(att) for att in data["chain"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProvenanceError(f"malformed assertion: {exc}") from None
    return fact, chain


class FactStore:
    """Append-only store of sourced facts."""

    def __init__(self) -> None:
        self._facts: list[SourcedFact] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._facts)

    def all(self) -> list[SourcedFact]:
        with self._lock:
            return list(self._facts)

    def assert_fact(self, fact: Fact, chain: Iterable[Attribution]) -> int:
        chain = tuple(chain)
        check_chain(chain)
        with self._lock:
            fact_id = len(self._facts)
            self._facts.append(SourcedFact(fact_id, fact, chain))
        return fact_id

    def assert_bulk(self, lines: Iterable[str]) -> list[int]:
        """Assert one JSON-lines batch; nothing is stored unless every line is good."""
        parsed: list[tuple[Fact, tuple[Attribution, ...]]] = []
        for lineno, line in enumerate(lines, 1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProvenanceError(f"line {lineno}: {exc}") from None
            fact, chain = parse_assertion(data)
            check_chain(chain)
            if chain[-1].kind not in INGEST_OUTER_KINDS:
                raise ProvenanceError(
                    f"line {lineno}: outermost attribution must be learned or observed"
                )
            parsed.append((fact, chain))
        return [self.assert_fact(fact, chain) for fact, chain in parsed]

    def known_by(self, agent: str, as_of: datetime) -> list[SourcedFact]:
        """Facts whose outermost attribution names the agent at or before as_of."""
        as_of = _as_utc(as_of)
        return [
            sf for sf in self.all()
            if sf.outermost.agent == agent and sf.outermost.time <= as_of
        ]

    def via_source(self, agent: str) -> list[SourcedFact]:
        """Facts with the agent anywhere in the chain."""
        return [sf for sf in self.all() if any(att.agent == agent for att in sf.chain)]

    def events_between(self, t1: datetime, t2: datetime) -> list[SourcedFact]:
        """Facts whose event time falls in [t1, t2]; facts without one never match."""
        t1, t2 = _as_utc(t1), _as_utc(t2)
        if t1 > t2:
            raise ProvenanceError("empty interval: t1 is after t2")
        return [
            sf for sf in self.all()
            if sf.fact.event_time is not None and t1 <= sf.fact.event_time <= t2
        ]

"""Entity resolution: group addresses into physical-person entities.

Addresses seed one entity each; merge rules then unite them:

* R1: identical (local, domain) pair. Implicit in the seeding.
* R2: the same normalized display name, at least two tokens and seven
  characters long, observed on both addresses. On by default.
* R3: identical local part of length >= 5 across domains that map to the
  same institution. Off by default; needs an institution map.

The guards on R2/R3 favor precision: a shared "Mike" must never merge
two strangers. Resolution is deterministic: merges run in sorted address
order and entity ids are assigned by each entity's smallest address, so
permuting the input corpus changes nothing.
"""

from __future__ import annotations

import json
import string
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from email.utils import parseaddr
from typing import IO, Iterable

from liststand.errors import ListstandError
from liststand.ingest.model import Message


class IdentityError(ListstandError):
    pass


_PUNCT_TABLE = str.maketrans("", "", string.punctuation)

R2_MIN_TOKENS = 2
R2_MIN_LENGTH = 7
R3_MIN_LOCAL_LENGTH = 5


@dataclass(frozen=True)
class Address:
    """A normalized mailbox; display_norm does not affect identity."""

    local: str
    domain: str
    display_norm: str | None = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"{self.local}@{self.domain}"


def normalize_display(raw: str | None) -> str | None:
    """Lowercase, strip punctuation, collapse whitespace; None if empty."""
    if not raw:
        return None
    cleaned = " ".join(raw.translate(_PUNCT_TABLE).split()).lower()
    return cleaned or None


def normalize_address(raw: str, strip_plus_tag: bool = True) -> Address:
    """Parse one addr-spec, with optional display name and comments.

    The local part is lowercased and loses a trailing "+tag" suffix
    (subscription alias collapsing, toggleable); the domain is lowercased
    and loses a trailing dot.
    """
    display, addr = parseaddr(raw)
    if "@" not in addr:
        raise IdentityError(f"unparseable address: {raw!r}")
    local, _, domain = addr.rpartition("@")
    local = local.strip().lower()
    domain = domain.strip().lower().rstrip(".")
    if not local or not domain:
        raise IdentityError(f"unparseable address: {raw!r}")
    if strip_plus_tag and "+" in local:
        local = local.split("+", 1)[0] or local
    return Address(local=local, domain=domain, display_norm=normalize_display(display))


def extract_domain(addr: Address) -> str:
    """The full mail domain, verbatim; never collapsed to a public suffix."""
    return addr.domain


@dataclass
class InstitutionMap:
    """Ordered domain-pattern rules; first match wins.

    A "*.ibm.com" pattern matches proper subdomains only; "ibm.com"
    itself needs its own exact rule. Unmatched domains map to themselves.
    """

    rules: list[tuple[str, str]] = field(default_factory=list)

    @classmethod
    def from_csv(cls, fp: IO[str]) -> "InstitutionMap":
        """Read "pattern,institution" lines; '#' starts a comment."""
        rules = []
        for lineno, line in enumerate(fp, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "," not in line:
                raise IdentityError(f"institution map line {lineno}: expected pattern,institution")
            pattern, institution = line.split(",", 1)
            rules.append((pattern.strip().lower(), institution.strip()))
        return cls(rules=rules)


def map_institution(domain: str, imap: InstitutionMap | None) -> str:
    if imap is not None:
        for pattern, institution in imap.rules:
            if pattern.startswith("*."):
                if domain.endswith(pattern[1:]) and domain != pattern[2:]:
                    return institution
            elif domain == pattern:
                return institution
    return domain


@dataclass
class Entity:
    entity_id: int
    addresses: set[Address]
    canonical_name: str | None
    evidence: list[tuple[str, tuple[str, str]]] = field(default_factory=list)


@dataclass
class ResolveConfig:
    r2: bool = True
    r3: bool = False
    strip_plus_tag: bool = True
    institution_map: InstitutionMap | None = None

    @classmethod
    def from_rule_names(cls, names: Iterable[str], **kwargs) -> "ResolveConfig":
        wanted = {name.strip().lower() for name in names if name.strip()}
        unknown = wanted - {"r1", "r2", "r3"}
        if unknown:
            raise IdentityError(f"unknown rule(s): {sorted(unknown)}")
        return cls(r2="r2" in wanted, r3="r3" in wanted, **kwargs)


class _UnionFind:
    def __init__(self, keys: Iterable[tuple[str, str]]):
        self.parent = {key: key for key in keys}

    def find(self, key):
        root = key
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[key] != root:
            self.parent[key], key = root, self.parent[key]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        # smaller root wins so the partition is order-independent
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


class EntityCatalog:
    """The resolved partition of addresses, with an address lookup."""

    def __init__(self, entities: list[Entity], config: ResolveConfig | None = None):
        self.entities = entities
        self.config = config or ResolveConfig()
        self._by_address: dict[tuple[str, str], int] = {}
        for entity in entities:
            for addr in entity.addresses:
                self._by_address[(addr.local, addr.domain)] = entity.entity_id

    def __len__(self) -> int:
        return len(self.entities)

    def entity_for_address(self, raw: str) -> int:
        addr = normalize_address(raw, strip_plus_tag=self.config.strip_plus_tag)
        try:
            return self._by_address[(addr.local, addr.domain)]
        except KeyError:
            raise IdentityError(f"address not in catalog: {raw!r}") from None

    def entity_of_message(self, msg: Message) -> int:
        return self.entity_for_address(msg.from_address)

    def entity(self, entity_id: int) -> Entity:
        try:
            return self.entities[entity_id]
        except IndexError:
            raise IdentityError(f"unknown entity id: {entity_id}") from None

    def label(self, entity_id: int) -> str:
        entity = self.entity(entity_id)
        if entity.canonical_name:
            return entity.canonical_name
        return str(min(entity.addresses, key=lambda a: (a.local, a.domain)))

    def to_json_dict(self) -> dict:
        rules = ["r1"] + (["r2"] if self.config.r2 else []) + (["r3"] if self.config.r3 else [])
        return {
            "rules": rules,
            "entities": [
                {
                    "entity_id": e.entity_id,
                    "addresses": sorted(str(a) for a in e.addresses),
                    "canonical_name": e.canonical_name,
                    "evidence": [
                        {"rule": rule, "pair": list(pair)} for rule, pair in e.evidence
                    ],
                }
                for e in self.entities
            ],
        }

    def dump(self, fp: IO[str]) -> None:
        json.dump(self.to_json_dict(), fp, indent=2, ensure_ascii=False)
        fp.write("\n")

    @classmethod
    def from_json_dict(cls, data: dict) -> "EntityCatalog":
        rules = set(data.get("rules") or ["r1", "r2"])
        config = ResolveConfig(r2="r2" in rules, r3="r3" in rules)
        entities = []
        for item in data["entities"]:
            addresses = set()
            for text in item["addresses"]:
                local, _, domain = text.rpartition("@")
                addresses.add(Address(local=local, domain=domain))
            entities.append(
                Entity(
                    entity_id=item["entity_id"],
                    addresses=addresses,
                    canonical_name=item.get("canonical_name"),
                    evidence=[
                        (ev["rule"], (ev["pair"][0], ev["pair"][1]))
                        for ev in item.get("evidence", [])
                    ],
                )
            )
        return cls(entities, config)

    @classmethod
    def load(cls, fp: IO[str]) -> "EntityCatalog":
        return cls.from_json_dict(json.load(fp))


def resolve_entities(messages: list[Message], config: ResolveConfig | None = None) -> EntityCatalog:
    """Partition the observed addresses into entities under the rule toggles."""
    config = config or ResolveConfig()

    display_names: dict[tuple[str, str], Counter] = defaultdict(Counter)
    for msg in messages:
        try:
            addr = normalize_address(msg.from_address, strip_plus_tag=config.strip_plus_tag)
        except IdentityError:
            continue
        key = (addr.local, addr.domain)
        display = normalize_display(msg.from_display)
        display_names[key].update([display] if display else [])

    keys = sorted(display_names)
    uf = _UnionFind(keys)
    evidence_log: list[tuple[str, tuple[str, str], tuple[tuple[str, str], tuple[str, str]]]] = []

    def unite(rule: str, a: tuple[str, str], b: tuple[str, str]) -> None:
        if uf.union(a, b):
            evidence_log.append((rule, (f"{a[0]}@{a[1]}", f"{b[0]}@{b[1]}"), (a, b)))

    if config.r2:
        by_display: dict[str, list[tuple[str, str]]] = defaultdict(list)
        for key in keys:
            for display in display_names[key]:
                if len(display.split()) >= R2_MIN_TOKENS and len(display) >= R2_MIN_LENGTH:
                    by_display[display].append(key)
        for display in sorted(by_display):
            group = sorted(by_display[display])
            for other in group[1:]:
                unite("R2", group[0], other)

    if config.r3:
        by_local: dict[tuple[str, str], list[tuple[str, str]]] = defaultdict(list)
        for local, domain in keys:
            if len(local) >= R3_MIN_LOCAL_LENGTH:
                institution = map_institution(domain, config.institution_map)
                by_local[(local, institution)].append((local, domain))
        for group_key in sorted(by_local):
            group = sorted(by_local[group_key])
            for other in group[1:]:
                unite("R3", group[0], other)

    members: dict[tuple[str, str], list[tuple[str, str]]] = defaultdict(list)
    for key in keys:
        members[uf.find(key)].append(key)

    entities: list[Entity] = []
    root_to_id: dict[tuple[str, str], int] = {}
    for entity_id, root in enumerate(sorted(members, key=lambda r: min(members[r]))):
        root_to_id[root] = entity_id
        addresses = set()
        name_votes: Counter = Counter()
        for local, domain in members[root]:
            addresses.add(Address(local=local, domain=domain))
            name_votes.update(display_names[(local, domain)])
        canonical = None
        if name_votes:
            top = max(name_votes.values())
            canonical = min(name for name, n in name_votes.items() if n == top)
        entities.append(
            Entity(entity_id=entity_id, addresses=addresses, canonical_name=canonical)
        )

    for rule, pair, (a, _b) in evidence_log:
        entities[root_to_id[uf.find(a)]].evidence.append((rule, pair))

    return EntityCatalog(entities, config)

"""Corpus statistics and social graphs over resolved mailing lists.

Every operation is a pure function over prebuilt inputs: message lists,
forests from threads.build_threads, catalogs from identity.resolve_entities,
and provenance fact stores. Results are small immutable tables and graphs
ready for CSV or graph-format export.

Counting rules worth knowing:

* posts_per_entity tallies messages per resolved entity and refuses to
  run when any sender is missing from the catalog.
* posts_per_domain keys rows by the sender's mail domain folded through
  an institution map; posters_per_domain keys by the bare domain and
  reports (distinct posters, messages) per row.
* coparticipation_graph links two entities once per distinct thread in
  which both posted at least one message; the optional "pairs" weighting
  counts cross message pairs instead.
* answering_profile tabulates reply edges touching one entity, split by
  direction, heaviest correspondents first.
* recommendation_table cross-references authorship facts with
  affiliations.  It reads three predicates: "authored" with an object of
  the form "REC:<title>", "NOTE:<title>" or "WD:<title>";
  "affiliated_with" mapping a person to an institution (or a domain,
  folded through the institution map); and "institution_type".  Authors
  without an affiliation fall into "Unknown", institutions without a
  type fact get "n.a.", and only institutions with at least one
  recommendation make the table.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Callable

from liststand.errors import ListstandError
from liststand.identity import (
    EntityCatalog,
    IdentityError,
    InstitutionMap,
    extract_domain,
    map_institution,
    normalize_address,
)
from liststand.ingest.model import Message
from liststand.provenance import FactStore
from liststand.threads import ThreadForest, reply_edges

__all__ = [
    "AnalyticsError",
    "AnsweringProfile",
    "RankedTable",
    "RecommendationRow",
    "SocialGraph",
    "answering_profile",
    "coparticipation_graph",
    "posts_per_domain",
    "posts_per_entity",
    "posters_per_domain",
    "recommendation_table",
]

AUTHORED = "authored"
AFFILIATED_WITH = "affiliated_with"
INSTITUTION_TYPE = "institution_type"

# document-kind tag -> output column, in column order
DOCUMENT_KINDS = (("REC", "rec"), ("NOTE", "notes"), ("WD", "drafts"))


class AnalyticsError(ListstandError):
    """A statistics operation was asked to run on unusable inputs."""


@dataclass(frozen=True)
class RankedTable:
    """Rows of (label, counts), already sorted heaviest-first.

    value_names names the count columns; every row carries one
    non-negative integer per column.
    """

    rows: tuple[tuple[str, tuple[int, ...]], ...]
    value_names: tuple[str, ...]

    def __post_init__(self) -> None:
        for key, values in self.rows:
            if len(values) != len(self.value_names):
                raise AnalyticsError(f"row {key!r} has {len(values)} values, expected {len(self.value_names)}")
            if any(v < 0 for v in values):
                raise AnalyticsError(f"row {key!r} has a negative count")

    def top(self, k: int) -> "RankedTable":
        return RankedTable(self.rows[:k], self.value_names)

    def anonymize(self) -> "RankedTable":
        """The same counts with labels replaced by rank ordinals."""
        rows = tuple((f"{i}.", values) for i, (_, values) in enumerate(self.rows, start=1))
        return RankedTable(rows, self.value_names)


@dataclass(frozen=True)
class SocialGraph:
    """Undirected weighted graph over entities.

    Nodes are (entity_id, label, institution) sorted by id; edges are
    (a, b, weight) with a < b, sorted by endpoints. Institution is None
    when no institution map was supplied.
    """

    nodes: tuple[tuple[int, str, str | None], ...]
    edges: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        ids = {eid for eid, _, _ in self.nodes}
        if len(ids) != len(self.nodes):
            raise AnalyticsError("duplicate graph node")
        for a, b, weight in self.edges:
            if a >= b:
                raise AnalyticsError(f"edge ({a}, {b}) must have a < b")
            if weight < 1:
                raise AnalyticsError(f"edge ({a}, {b}) has weight {weight}")
            if a not in ids or b not in ids:
                raise AnalyticsError(f"edge ({a}, {b}) touches a missing node")


@dataclass(frozen=True)
class AnsweringProfile:
    """Reply traffic between one entity and everyone it exchanged with.

    Each row is (other, replies_to_other, replies_from_other): messages
    the subject wrote answering the other, and the reverse. Rows come
    heaviest total first, ties by the other entity's id.
    """

    subject: int
    rows: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class RecommendationRow:
    institution: str
    type: str
    individuals: int
    rec: int
    notes: int
    drafts: int


def _sorted_rows(counts: dict[str, tuple[int, ...]]) -> tuple:
    # first column descending, then label ascending
    return tuple(sorted(counts.items(), key=lambda item: (-item[1][0], item[0])))


def _entity_of_message(catalog: EntityCatalog, msg: Message) -> int:
    try:
        return catalog.entity_of_message(msg)
    except IdentityError as exc:
        raise AnalyticsError(f"{exc}; run identity resolution over this corpus first") from exc


def _domain_of(msg: Message) -> str:
    try:
        return extract_domain(normalize_address(msg.from_address))
    except IdentityError as exc:
        raise AnalyticsError(f"message {msg.message_id!r}: {exc}") from exc


def posts_per_entity(messages: list[Message], catalog: EntityCatalog) -> RankedTable:
    """Messages per resolved sender, heaviest poster first.

    Every sender address must already be in the catalog.
    """
    counts: Counter[int] = Counter()
    for msg in messages:
        counts[_entity_of_message(catalog, msg)] += 1
    # two entities sharing a canonical name stay separate rows; id breaks the tie
    order = sorted(counts.items(), key=lambda item: (-item[1], catalog.label(item[0]), item[0]))
    rows = tuple((catalog.label(eid), (n,)) for eid, n in order)
    return RankedTable(rows, ("posts",))


def posts_per_domain(messages: list[Message], institution_map: InstitutionMap | None = None) -> RankedTable:
    """Messages per sending institution (or bare domain without a map)."""
    counts: Counter[str] = Counter()
    for msg in messages:
        counts[map_institution(_domain_of(msg), institution_map)] += 1
    return RankedTable(_sorted_rows({k: (n,) for k, n in counts.items()}), ("posts",))


def posters_per_domain(messages: list[Message], catalog: EntityCatalog) -> RankedTable:
    """Distinct posters and message volume per mail domain.

    Sorted by distinct posters; an entity writing from two domains
    counts once in each.
    """
    posters: dict[str, set[int]] = defaultdict(set)
    volume: Counter[str] = Counter()
    for msg in messages:
        domain = _domain_of(msg)
        posters[domain].add(_entity_of_message(catalog, msg))
        volume[domain] += 1
    counts = {domain: (len(entities), volume[domain]) for domain, entities in posters.items()}
    return RankedTable(_sorted_rows(counts), ("posters", "posts"))


def _entity_institution(catalog: EntityCatalog, eid: int, imap: InstitutionMap | None) -> str | None:
    if imap is None:
        return None
    addr = min(catalog.entity(eid).addresses, key=lambda a: (a.local, a.domain))
    return map_institution(addr.domain, imap)


def coparticipation_graph(
    forest: ThreadForest,
    catalog: EntityCatalog,
    min_weight: int = 1,
    institution_map: InstitutionMap | None = None,
    weighting: str = "threads",
) -> SocialGraph:
    """Who posted in the same threads as whom.

    Nodes cover every entity with at least one message in the forest.
    With the default "threads" weighting an edge weight is the number of
    distinct threads both endpoints posted in; "pairs" counts cross
    message pairs instead, so busy threads weigh more. Edges lighter
    than min_weight are dropped; nodes always stay.
    """
    if weighting not in ("threads", "pairs"):
        raise AnalyticsError(f"unknown weighting {weighting!r}")
    per_thread: dict[str, Counter[int]] = defaultdict(Counter)
    for mid, node in forest.nodes.items():
        eid = _entity_of_message(catalog, node.message)
        per_thread[forest.thread_of[mid]][eid] += 1
    weights: Counter[tuple[int, int]] = Counter()
    for tally in per_thread.values():
        participants = sorted(tally)
        for i, a in enumerate(participants):
            for b in participants[i + 1:]:
                weights[(a, b)] += 1 if weighting == "threads" else tally[a] * tally[b]
    seen = sorted({eid for tally in per_thread.values() for eid in tally})
    nodes = tuple(
        (eid, catalog.label(eid), _entity_institution(catalog, eid, institution_map)) for eid in seen
    )
    edges = tuple(
        (a, b, w) for (a, b), w in sorted(weights.items()) if w >= min_weight
    )
    return SocialGraph(nodes, edges)


def answering_profile(entity: int, forest: ThreadForest, catalog: EntityCatalog) -> AnsweringProfile:
    """Reply counts between one entity and each of its correspondents."""
    try:
        catalog.entity(entity)
    except IdentityError as exc:
        raise AnalyticsError(str(exc)) from exc

    def entity_of(mid: str) -> int:
        return _entity_of_message(catalog, forest.nodes[mid].message)

    to_other: Counter[int] = Counter()
    from_other: Counter[int] = Counter()
    for edge in reply_edges(forest, entity_of):
        if edge.child_entity == entity and edge.parent_entity != entity:
            to_other[edge.parent_entity] += 1
        elif edge.parent_entity == entity and edge.child_entity != entity:
            from_other[edge.child_entity] += 1
    others = sorted(
        set(to_other) | set(from_other),
        key=lambda o: (-(to_other[o] + from_other[o]), o),
    )
    rows = tuple((o, to_other[o], from_other[o]) for o in others)
    return AnsweringProfile(entity, rows)


def _parse_document(obj: str) -> tuple[str, str]:
    kind, sep, title = obj.partition(":")
    if not sep or kind not in dict(DOCUMENT_KINDS) or not title:
        tags = "/".join(tag for tag, _ in DOCUMENT_KINDS)
        raise AnalyticsError(f"authored object {obj!r} must look like {tags}:<title>")
    return kind, title


def recommendation_table(
    store: FactStore, institution_map: InstitutionMap | None = None
) -> list[RecommendationRow]:
    """Standardization output per institution, from hand-entered facts.

    Rows carry distinct authoring individuals and, per document kind,
    the number of distinct documents with at least one author from the
    institution; a document with authors at two institutions counts for
    both. Only institutions with at least one recommendation appear.
    Sorted by recommendations, then notes, drafts and individuals, all
    descending, with the institution name breaking final ties.
    """
    fold: Callable[[str], str] = lambda name: map_institution(name, institution_map)
    affiliation: dict[str, str] = {}
    inst_type: dict[str, str] = {}
    authored: list[tuple[str, str, str]] = []
    for sourced in store.all():
        fact = sourced.fact
        if fact.predicate == AFFILIATED_WITH:
            affiliation[fact.subject] = fold(fact.object)
        elif fact.predicate == INSTITUTION_TYPE:
            inst_type[fold(fact.subject)] = fact.object
        elif fact.predicate == AUTHORED:
            kind, title = _parse_document(fact.object)
            authored.append((fact.subject, kind, title))

    individuals: dict[str, set[str]] = defaultdict(set)
    documents: dict[str, dict[str, set[str]]] = defaultdict(lambda: defaultdict(set))
    for person, kind, title in authored:
        institution = affiliation.get(person, "Unknown")
        individuals[institution].add(person)
        documents[institution][kind].add(title)

    rows = []
    for institution in individuals:
        kinds = documents[institution]
        counts = {column: len(kinds[tag]) for tag, column in DOCUMENT_KINDS}
        if counts["rec"] == 0:
            continue
        rows.append(
            RecommendationRow(
                institution=institution,
                type=inst_type.get(institution, "n.a."),
                individuals=len(individuals[institution]),
                **counts,
            )
        )
    rows.sort(key=lambda r: (-r.rec, -r.notes, -r.drafts, -r.individuals, r.institution))
    return rows

"""Reply forests, thread depth, and discussion detection.

A message's parent is chosen by precedence: its In-Reply-To id when that
message exists in the corpus, else the last id in References that exists,
else (when subject fallback is enabled) the earliest strictly earlier
message with the same non-empty normalized subject, else none.  Parent
choice depends only on corpus content, so input order never changes the
forest.  Any link that closes a cycle is discarded: every member of the
cycle becomes a flagged root.

Two entities are in discussion when each has replied to the other at
least `threshold` times (default 2).  Scope per_thread requires both legs
inside one shared thread and records the qualifying threads; scope corpus
sums counts across all threads.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable

from liststand.errors import ListstandError
from liststand.ingest.model import Message, format_timestamp
from liststand.warehouse.schema import ElementDef, SchemaDef
from liststand.warehouse.tree import TreeNode, sanitize_text


class ThreadsError(ListstandError):
    pass


@dataclass
class ThreadNode:
    message: Message
    parent: str | None
    children: list[str]


@dataclass
class ThreadForest:
    nodes: dict[str, ThreadNode]
    roots: list[str]
    flagged: set[str]
    thread_of: dict[str, str]

    def thread_members(self, thread_id: str) -> list[str]:
        """Message ids of one thread in preorder."""
        if thread_id not in self.nodes or self.nodes[thread_id].parent is not None:
            raise ThreadsError(f"unknown thread: {thread_id!r}")
        members = []
        stack = [thread_id]
        while stack:
            mid = stack.pop()
            members.append(mid)
            stack.extend(reversed(self.nodes[mid].children))
        return members

    def to_json_dict(self) -> dict:
        threads = [
            {
                "thread_id": root,
                "size": len(self.thread_members(root)),
                "depth": thread_depth(self, root),
            }
            for root in self.roots
        ]
        return {
            "roots": list(self.roots),
            "flagged": sorted(self.flagged),
            "threads": threads,
            "nodes": {
                mid: {
                    "parent": node.parent,
                    "children": list(node.children),
                    "thread": self.thread_of[mid],
                }
                for mid, node in sorted(self.nodes.items())
            },
        }


def build_threads(messages: Iterable[Message], subject_fallback: bool = False) -> ThreadForest:
    messages = list(messages)
    by_id = {message.message_id: message for message in messages}
    if len(by_id) != len(messages):
        raise ThreadsError("duplicate message ids; deduplicate before threading")

    by_subject: dict[str, tuple] = {}
    if subject_fallback:
        grouped: dict[str, list] = defaultdict(list)
        for message in messages:
            if message.subject_norm:
                grouped[message.subject_norm].append((message.date, message.message_id))
        by_subject = {subject: min(entries) for subject, entries in grouped.items()}

    parent: dict[str, str | None] = {}
    for message in messages:
        pid = None
        if message.in_reply_to and message.in_reply_to in by_id:
            pid = message.in_reply_to
        else:
            for ref in reversed(message.references):
                if ref in by_id:
                    pid = ref
                    break
        if pid is None and subject_fallback and message.subject_norm:
            first_date, first_id = by_subject[message.subject_norm]
            if first_date < message.date:
                pid = first_id
        parent[message.message_id] = pid

    # break cycles in the functional parent graph; members become flagged roots
    flagged: set[str] = set()
    state: dict[str, int] = {}
    for start in by_id:
        if state.get(start, 0):
            continue
        walk: list[str] = []
        current: str | None = start
        while current is not None and state.get(current, 0) == 0:
            state[current] = 1
            walk.append(current)
            current = parent[current]
        if current is not None and state[current] == 1:
            for mid in walk[walk.index(current):]:
                parent[mid] = None
                flagged.add(mid)
        for mid in walk:
            state[mid] = 2

    children: dict[str, list[str]] = {mid: [] for mid in by_id}
    for message in messages:
        pid = parent[message.message_id]
        if pid is not None:
            children[pid].append(message.message_id)

    def order_key(mid: str):
        return (by_id[mid].date, mid)

    for kids in children.values():
        kids.sort(key=order_key)
    roots = sorted((mid for mid in by_id if parent[mid] is None), key=order_key)

    thread_of: dict[str, str] = {}
    for root in roots:
        stack = [root]
        while stack:
            mid = stack.pop()
            thread_of[mid] = root
            stack.extend(children[mid])

    nodes = {
        mid: ThreadNode(by_id[mid], parent[mid], children[mid]) for mid in by_id
    }
    return ThreadForest(nodes=nodes, roots=roots, flagged=flagged, thread_of=thread_of)


def thread_depth(forest: ThreadForest, thread_id: str) -> int:
    """Maximum number of nodes on any root-to-leaf path of the thread."""
    if thread_id not in forest.nodes or forest.nodes[thread_id].parent is not None:
        raise ThreadsError(f"unknown thread: {thread_id!r}")
    deepest = 0
    stack = [(thread_id, 1)]
    while stack:
        mid, depth = stack.pop()
        deepest = max(deepest, depth)
        for kid in forest.nodes[mid].children:
            stack.append((kid, depth + 1))
    return deepest


@dataclass(frozen=True)
class ReplyEdge:
    thread_id: str
    parent_msg: str
    child_msg: str
    parent_entity: int
    child_entity: int


def reply_edges(forest: ThreadForest, entity_of: Callable[[str], int]) -> list[ReplyEdge]:
    """One edge per non-root message, ordered by thread, then child date."""

    def resolve(mid: str) -> int:
        try:
            return entity_of(mid)
        except KeyError:
            raise ThreadsError(f"no entity mapping for message {mid!r}") from None

    edges = []
    for mid, node in forest.nodes.items():
        if node.parent is None:
            continue
        edges.append(
            ReplyEdge(
                thread_id=forest.thread_of[mid],
                parent_msg=node.parent,
                child_msg=mid,
                parent_entity=resolve(node.parent),
                child_entity=resolve(mid),
            )
        )
    edges.sort(key=lambda e: (e.thread_id, forest.nodes[e.child_msg].message.date, e.child_msg))
    return edges


@dataclass(frozen=True)
class DiscussionPair:
    a: int
    b: int
    edges_ab: int
    edges_ba: int
    threads: frozenset[str]


DISCUSSION_SCOPES = ("per_thread", "corpus")


def discussions(
    forest: ThreadForest,
    entity_of: Callable[[str], int],
    threshold: int = 2,
    scope: str = "per_thread",
) -> list[DiscussionPair]:
    if threshold < 1:
        raise ThreadsError("threshold must be at least 1")
    if scope not in DISCUSSION_SCOPES:
        raise ThreadsError(f"unknown scope: {scope!r}")
    per_thread: dict[tuple[int, int, str], list[int]] = defaultdict(lambda: [0, 0])
    for edge in reply_edges(forest, entity_of):
        if edge.parent_entity == edge.child_entity:
            continue
        a, b = sorted((edge.parent_entity, edge.child_entity))
        leg = 0 if edge.parent_entity == a else 1
        per_thread[(a, b, edge.thread_id)][leg] += 1

    merged: dict[tuple[int, int], list] = {}
    if scope == "per_thread":
        for (a, b, thread_id), (ab, ba) in per_thread.items():
            if ab >= threshold and ba >= threshold:
                entry = merged.setdefault((a, b), [0, 0, set()])
                entry[0] += ab
                entry[1] += ba
                entry[2].add(thread_id)
    else:
        totals: dict[tuple[int, int], list] = defaultdict(lambda: [0, 0, set()])
        for (a, b, thread_id), (ab, ba) in per_thread.items():
            entry = totals[(a, b)]
            entry[0] += ab
            entry[1] += ba
            entry[2].add(thread_id)
        merged = {
            pair: entry for pair, entry in totals.items()
            if entry[0] >= threshold and entry[1] >= threshold
        }
    return [
        DiscussionPair(a, b, ab, ba, frozenset(threads))
        for (a, b), (ab, ba, threads) in sorted(merged.items())
    ]


THREAD_SCHEMA = SchemaDef(
    root="thread",
    elements={
        "thread": ElementDef(attrs=[("id", "string")], children=[("msg", "one")]),
        "msg": ElementDef(
            attrs=[("date", "date"), ("id", "string")], children=[("msg", "many")]
        ),
    },
)


def thread_to_tree(forest: ThreadForest, thread_id: str) -> TreeNode:
    """One thread as a nested document (built iteratively; chains can be deep)."""
    if thread_id not in forest.nodes or forest.nodes[thread_id].parent is not None:
        raise ThreadsError(f"unknown thread: {thread_id!r}")
    built: dict[str, TreeNode] = {}
    for mid in reversed(forest.thread_members(thread_id)):
        message = forest.nodes[mid].message
        built[mid] = TreeNode(
            "msg",
            {"id": sanitize_text(message.message_id), "date": format_timestamp(message.date)},
            children=[built[kid] for kid in forest.nodes[mid].children],
        )
    return TreeNode("thread", {"id": sanitize_text(thread_id)}, children=[built[thread_id]])

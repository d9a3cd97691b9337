"""Small DTD-like schemas for tree documents.

An element declaration lists required typed attributes, an ordered child
declaration, and optionally a leaf content type.  Leaf types are string,
int, and date.  Child cardinalities are one, optional, and many; a valid
node presents its children grouped by name in the declared order.  A node
may satisfy either the child declaration or the content type, so one name
can be a leaf in one place and a composite elsewhere.  Attributes beyond
the declared ones are permitted; declared ones are required.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date

from liststand.errors import ListstandError
from liststand.ingest.model import parse_timestamp
from liststand.warehouse.tree import TreeNode, valid_name

LEAF_TYPES = ("string", "int", "date")
CARDINALITIES = ("one", "optional", "many")

_INT_RE = re.compile(r"[+-]?\d+")


class SchemaError(ListstandError):
    """Malformed schema definition, or a tree no schema can describe."""


@dataclass
class ElementDef:
    attrs: list[tuple[str, str]] = field(default_factory=list)
    children: list[tuple[str, str]] = field(default_factory=list)
    content: str | None = None


@dataclass
class SchemaDef:
    root: str
    elements: dict[str, ElementDef]

    def __post_init__(self) -> None:
        if self.root not in self.elements:
            raise SchemaError(f"root element <{self.root}> is not declared")
        for name, edef in self.elements.items():
            if not valid_name(name):
                raise SchemaError(f"invalid element name: {name!r}")
            seen: set[str] = set()
            for attr_name, attr_type in edef.attrs:
                if not valid_name(attr_name):
                    raise SchemaError(f"invalid attribute name: {attr_name!r}")
                if attr_type not in LEAF_TYPES:
                    raise SchemaError(f"unknown attribute type {attr_type!r} on <{name}>")
                if attr_name in seen:
                    raise SchemaError(f"duplicate attribute {attr_name!r} on <{name}>")
                seen.add(attr_name)
            seen = set()
            for child_name, card in edef.children:
                if card not in CARDINALITIES:
                    raise SchemaError(f"unknown cardinality {card!r} on <{name}>")
                if child_name not in self.elements:
                    raise SchemaError(f"child <{child_name}> of <{name}> is not declared")
                if child_name in seen:
                    raise SchemaError(f"duplicate child <{child_name}> on <{name}>")
                seen.add(child_name)
            if edef.content is not None and edef.content not in LEAF_TYPES:
                raise SchemaError(f"unknown content type {edef.content!r} on <{name}>")

    def to_json_dict(self) -> dict:
        elements = {}
        for name, edef in self.elements.items():
            elements[name] = {
                "attrs": [list(pair) for pair in edef.attrs],
                "children": [list(pair) for pair in edef.children],
                "content": edef.content,
            }
        return {"root": self.root, "elements": elements}

    @classmethod
    def from_json_dict(cls, data: dict) -> "SchemaDef":
        try:
            elements = {
                name: ElementDef(
                    attrs=[(str(a), str(t)) for a, t in entry.get("attrs", [])],
                    children=[(str(c), str(k)) for c, k in entry.get("children", [])],
                    content=entry.get("content"),
                )
                for name, entry in data["elements"].items()
            }
            return cls(root=data["root"], elements=elements)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed schema: {exc}") from None


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


def type_error(value: str, leaf_type: str) -> str | None:
    """Why the value does not inhabit the leaf type, or None if it does."""
    if leaf_type == "string":
        return None
    if leaf_type == "int":
        if _INT_RE.fullmatch(value):
            return None
        return f"not an int: {value!r}"
    try:
        if "T" in value:
            parse_timestamp(value)
        else:
            date.fromisoformat(value)
    except ValueError:
        return f"not a date: {value!r}"
    return None


def _child_paths(path: str, kids: list[TreeNode]) -> list[str]:
    # positional suffix only where a name repeats among siblings
    total = Counter(kid.name for kid in kids)
    seen: Counter[str] = Counter()
    paths = []
    for kid in kids:
        seen[kid.name] += 1
        suffix = f"[{seen[kid.name]}]" if total[kid.name] > 1 else ""
        paths.append(f"{path}/{kid.name}{suffix}")
    return paths


def validate(doc: TreeNode, schema: SchemaDef) -> list[Violation]:
    """All violations of the schema in the document; empty means valid."""
    out: list[Violation] = []
    if doc.name != schema.root:
        out.append(Violation("/" + doc.name, f"root element <{doc.name}>, expected <{schema.root}>"))
        return out
    _validate_node(doc, schema, "/" + doc.name, out)
    return out


def _validate_node(node: TreeNode, schema: SchemaDef, path: str, out: list[Violation]) -> None:
    edef = schema.elements.get(node.name)
    if edef is None:
        out.append(Violation(path, f"undeclared element <{node.name}>"))
        return
    for attr_name, attr_type in edef.attrs:
        if attr_name not in node.attrs:
            out.append(Violation(path, f"missing attribute {attr_name!r}"))
            continue
        problem = type_error(node.attrs[attr_name], attr_type)
        if problem:
            out.append(Violation(path, f"attribute {attr_name!r}: {problem}"))
    if node.text is not None:
        if edef.content is None:
            out.append(Violation(path, "text content not allowed"))
        else:
            problem = type_error(node.text, edef.content)
            if problem:
                out.append(Violation(path, f"content: {problem}"))
        return
    kids = node.children
    paths = _child_paths(path, kids)
    declared = {name for name, _ in edef.children}
    index = 0
    for child_name, card in edef.children:
        run = 0
        while index < len(kids) and kids[index].name == child_name:
            index += 1
            run += 1
        if card == "one" and run != 1:
            out.append(Violation(path, f"expected exactly one <{child_name}>, found {run}"))
        elif card == "optional" and run > 1:
            out.append(Violation(path, f"expected at most one <{child_name}>, found {run}"))
    for rest in range(index, len(kids)):
        if kids[rest].name in declared:
            out.append(Violation(paths[rest], "element out of declared order"))
        else:
            out.append(Violation(paths[rest], f"unexpected element <{kids[rest].name}>"))
    for position, kid in enumerate(kids):
        _validate_node(kid, schema, paths[position], out)


def infer_trivial_schema(doc: TreeNode) -> SchemaDef:
    """Loosest schema of this formalism that the document satisfies.

    Everything is typed string.  Attribute declarations take the
    intersection over occurrences of each element name, cardinalities the
    observed count range, and child order a merge of the observed orders.
    Raises SchemaError when no declaration can describe the document: a
    node whose children are not grouped by name, or one element name whose
    occurrences order the same children differently.
    """
    attr_sets: dict[str, set[str]] = {}
    has_text: dict[str, bool] = {}
    orders: dict[str, list[list[str]]] = {}
    counts: dict[str, list[Counter[str]]] = {}
    for node in doc.walk():
        name = node.name
        if name in attr_sets:
            attr_sets[name] &= set(node.attrs)
        else:
            attr_sets[name] = set(node.attrs)
            has_text[name] = False
            orders[name] = []
            counts[name] = []
        if node.text is not None:
            has_text[name] = True
            continue
        order: list[str] = []
        count: Counter[str] = Counter()
        for kid in node.children:
            if kid.name in count and order[-1] != kid.name:
                raise SchemaError(f"children of <{name}> are not grouped by name")
            if kid.name not in count:
                order.append(kid.name)
            count[kid.name] += 1
        orders[name].append(order)
        counts[name].append(count)

    elements: dict[str, ElementDef] = {}
    for name in attr_sets:
        children: list[tuple[str, str]] = []
        for child_name in _merge_orders(name, orders.get(name, [])):
            runs = [count.get(child_name, 0) for count in counts[name]]
            if min(runs) == 1 and max(runs) == 1:
                card = "one"
            elif max(runs) <= 1:
                card = "optional"
            else:
                card = "many"
            children.append((child_name, card))
        elements[name] = ElementDef(
            attrs=[(attr, "string") for attr in sorted(attr_sets[name])],
            children=children,
            content="string" if has_text[name] else None,
        )
    return SchemaDef(root=doc.name, elements=elements)


def _merge_orders(name: str, orders: list[list[str]]) -> list[str]:
    # topological merge of the per-occurrence child orders
    names: list[str] = []
    for order in orders:
        for child in order:
            if child not in names:
                names.append(child)
    succ: dict[str, set[str]] = {child: set() for child in names}
    indeg: dict[str, int] = {child: 0 for child in names}
    for order in orders:
        for left, right in zip(order, order[1:]):
            if right not in succ[left]:
                succ[left].add(right)
                indeg[right] += 1
    ready = [child for child in names if indeg[child] == 0]
    merged: list[str] = []
    while ready:
        child = ready.pop(0)
        merged.append(child)
        for other in sorted(succ[child], key=names.index):
            indeg[other] -= 1
            if indeg[other] == 0:
                ready.append(other)
        ready.sort(key=names.index)
    if len(merged) != len(names):
        raise SchemaError(f"occurrences of <{name}> order their children inconsistently")
    return merged

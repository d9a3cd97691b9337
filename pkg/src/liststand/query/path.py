"""Path expressions over document trees.

A path is a sequence of steps joined by ``/`` (child) or ``//``
(descendant).  Each step names an element (or ``*`` for any name) and may
carry one predicate comparing an attribute (``[@id='x']``) or the text of
a named child (``[subject contains 'xml']``) against a literal.

Paths are relative: evaluation starts from an anchor node and a leading
``//`` searches the anchor's descendants.  Results are returned in
document order with duplicates (by node identity) removed, so a
descendant step never yields the same node twice even when it is
reachable through several intermediate anchors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, datetime, timezone

from liststand.errors import ListstandError
from liststand.ingest.model import parse_timestamp
from liststand.warehouse.tree import TreeNode

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=", "contains")

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.-]*")
_INT_RE = re.compile(r"[+-]?\d+")


class QueryError(ListstandError):
    """Raised for malformed or unevaluable queries."""


class PathSyntaxError(QueryError):
    """Raised when a path expression cannot be parsed."""


@dataclass(frozen=True)
class Predicate:
    """One bracketed comparison attached to a step."""

    target: str  # "attr" or "child"
    name: str
    op: str
    literal: object  # str or int


@dataclass(frozen=True)
class Step:
    axis: str  # "child" or "descendant"
    name: str  # element name or "*"
    predicate: Predicate | None = None


@dataclass(frozen=True)
class PathExpr:
    steps: tuple[Step, ...]


class _Reader:
    """Cursor over the path source with position-aware errors."""

    def __init__(self, source: str) -> None:
        self.source = source
        self.pos = 0

    def fail(self, message: str) -> PathSyntaxError:
        return PathSyntaxError(f"{message} at position {self.pos} in {self.source!r}")

    def done(self) -> bool:
        return self.pos >= len(self.source)

    def peek(self) -> str:
        return self.source[self.pos] if self.pos < len(self.source) else ""

    def take(self, text: str) -> bool:
        if self.source.startswith(text, self.pos):
            self.pos += len(text)
            return True
        return False

    def skip_spaces(self) -> None:
        while self.peek() == " ":
            self.pos += 1

    def name(self) -> str:
        match = _NAME_RE.match(self.source, self.pos)
        if match is None:
            raise self.fail("expected a name")
        self.pos = match.end()
        return match.group()


def parse_path(source: str) -> PathExpr:
    """Parse ``source`` into a PathExpr or raise PathSyntaxError."""

    reader = _Reader(source)
    steps: list[Step] = []
    # Leading "//" starts a descendant step, a bare leading "/" is
    # accepted and means the same as no prefix.
    axis = "descendant" if reader.take("//") else "child"
    if axis == "child":
        reader.take("/")
    while True:
        steps.append(_parse_step(reader, axis))
        if reader.done():
            break
        if reader.take("//"):
            axis = "descendant"
        elif reader.take("/"):
            axis = "child"
        else:
            raise reader.fail("expected '/' or '//'")
        if reader.done():
            raise reader.fail("path ends with a step separator")
    return PathExpr(tuple(steps))


def _parse_step(reader: _Reader, axis: str) -> Step:
    if reader.take("*"):
        name = "*"
    else:
        name = reader.name()
    predicate = None
    if reader.take("["):
        predicate = _parse_predicate(reader)
    return Step(axis, name, predicate)


def _parse_predicate(reader: _Reader) -> Predicate:
    reader.skip_spaces()
    if reader.take("@"):
        target = "attr"
    else:
        target = "child"
    pred_name = reader.name()
    reader.skip_spaces()
    op = _parse_comparator(reader)
    reader.skip_spaces()
    literal = _parse_literal(reader)
    reader.skip_spaces()
    if not reader.take("]"):
        raise reader.fail("expected ']'")
    if op == "contains" and not isinstance(literal, str):
        raise reader.fail("'contains' needs a string literal")
    return Predicate(target, pred_name, op, literal)


def _parse_comparator(reader: _Reader) -> str:
    # Longest match first so "<=" is not read as "<".
    for op in ("<=", ">=", "!=", "<", ">", "="):
        if reader.take(op):
            return op
    if reader.take("contains"):
        return "contains"
    raise reader.fail("expected a comparator")


def _parse_literal(reader: _Reader) -> object:
    quote = reader.peek()
    if quote in ("'", '"'):
        reader.pos += 1
        out: list[str] = []
        while True:
            ch = reader.peek()
            if ch == "":
                raise reader.fail("unterminated string literal")
            reader.pos += 1
            if ch == quote:
                return "".join(out)
            if ch == "\\":
                escaped = reader.peek()
                if escaped not in ("\\", "'", '"'):
                    raise reader.fail("bad escape in string literal")
                reader.pos += 1
                out.append(escaped)
            else:
                out.append(ch)
    match = _INT_RE.match(reader.source, reader.pos)
    if match is None:
        raise reader.fail("expected a literal")
    reader.pos = match.end()
    return int(match.group())


def print_path(path: PathExpr) -> str:
    """Render ``path`` canonically; parse_path round-trips the result."""

    parts: list[str] = []
    for index, step in enumerate(path.steps):
        if step.axis == "descendant":
            parts.append("//")
        elif index > 0:
            parts.append("/")
        parts.append(step.name)
        if step.predicate is not None:
            parts.append(_print_predicate(step.predicate))
    return "".join(parts)


def _print_predicate(predicate: Predicate) -> str:
    prefix = "@" if predicate.target == "attr" else ""
    if isinstance(predicate.literal, int):
        literal = str(predicate.literal)
    else:
        escaped = predicate.literal.replace("\\", "\\\\").replace("'", "\\'")
        literal = f"'{escaped}'"
    if predicate.op == "contains":
        return f"[{prefix}{predicate.name} contains {literal}]"
    return f"[{prefix}{predicate.name}{predicate.op}{literal}]"


def compare_values(value: str, op: str, literal: object, leaf_type: str | None) -> bool:
    """Compare a node-side string against a literal.

    ``leaf_type`` is the declared type of the node side when a schema is
    available; it selects numeric or temporal comparison.  A value that
    does not parse as its declared type simply fails the comparison.
    """

    if op == "contains":
        return isinstance(literal, str) and literal in value
    if leaf_type == "int" or (leaf_type is None and isinstance(literal, int)):
        left = _as_int(value)
        right = literal if isinstance(literal, int) else _as_int(str(literal))
        if left is None or right is None:
            return False
        return _ordered(left, op, right)
    if leaf_type == "date":
        left_dt = _as_datetime(value)
        right_dt = _as_datetime(str(literal))
        if left_dt is None or right_dt is None:
            return False
        return _ordered(left_dt, op, right_dt)
    return _ordered(value, op, str(literal))


def _ordered(left, op: str, right) -> bool:
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    return left >= right


def _as_int(value: str) -> int | None:
    if _INT_RE.fullmatch(value):
        return int(value)
    return None


def _as_datetime(value: str) -> datetime | None:
    try:
        if "T" in value:
            return parse_timestamp(value)
        day = date.fromisoformat(value)
    except ValueError:
        return None
    return datetime(day.year, day.month, day.day, tzinfo=timezone.utc)


def check_predicate(node: TreeNode, predicate: Predicate, schema=None) -> bool:
    """Test a predicate against one node, using schema types when given."""

    if predicate.target == "attr":
        value = node.attrs.get(predicate.name)
        if value is None:
            return False
        leaf_type = _attr_type(schema, node.name, predicate.name)
        return compare_values(value, predicate.op, predicate.literal, leaf_type)
    leaf_type = _content_type(schema, predicate.name)
    for kid in node.children:
        if kid.name != predicate.name:
            continue
        if compare_values(kid.text or "", predicate.op, predicate.literal, leaf_type):
            return True
    return False


def _attr_type(schema, element_name: str, attr_name: str) -> str | None:
    if schema is None:
        return None
    edef = schema.elements.get(element_name)
    if edef is None:
        return None
    for name, leaf_type in edef.attrs:
        if name == attr_name:
            return leaf_type
    return None


def _content_type(schema, element_name: str) -> str | None:
    if schema is None:
        return None
    edef = schema.elements.get(element_name)
    if edef is None:
        return None
    return edef.content


def eval_path(path: PathExpr, anchor: TreeNode, schema=None) -> list[TreeNode]:
    """Evaluate ``path`` from ``anchor``, in document order without duplicates."""

    current = [anchor]
    for step in path.steps:
        matched: list[TreeNode] = []
        seen: set[int] = set()
        for node in current:
            if step.axis == "child":
                pool = node.children
            else:
                pool = [kid for kid in node.walk() if kid is not node]
            for candidate in pool:
                if step.name != "*" and candidate.name != step.name:
                    continue
                if id(candidate) in seen:
                    continue
                if step.predicate is not None and not check_predicate(
                    candidate, step.predicate, schema
                ):
                    continue
                seen.add(id(candidate))
                matched.append(candidate)
        current = matched
    return current

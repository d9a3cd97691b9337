"""The JSON query contract: bindings, filters, grouping, and a template.

A query is a JSON object with exactly the fields ``source``,
``bindings``, ``filters``, ``group_by``, and ``template``:

* ``source`` names a collection or view.
* ``bindings`` is an ordered list of ``{"var", "path", "relative_to"}``
  objects.  Variables look like ``$m``; ``relative_to`` is ``"source"``
  (the default) or an earlier variable, and ``path`` is a path
  expression evaluated from that anchor.  Bindings nest like loops: the
  match set is every tuple of nodes reachable in declaration order.
* ``filters`` is null or a boolean tree of ``and`` / ``or`` / ``not``
  nodes over comparisons.  A comparison holds a left value expression,
  a comparator, and either ``{"lit": ...}`` or ``{"expr": ...}``.
* ``group_by`` lists value expressions; when non-empty, tuples collapse
  into groups keyed by those values.
* ``template`` is a result skeleton written as one XML element whose
  leaf texts may be a single ``{...}`` expression: ``{$m}`` copies the
  bound node, ``{$m@id}`` or ``{$m/from}`` inserts a value, ``{key(1)}``
  a group key, and ``{count($m)}`` / ``{sum(e)}`` / ``{min(e)}`` /
  ``{max(e)}`` an aggregate.

Value expressions are ``$var`` (the node's own text), ``$var@attr``, or
``$var/path`` (text of the first node the relative path reaches).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from liststand.query.path import (
    COMPARATORS,
    PathExpr,
    PathSyntaxError,
    QueryError,
    parse_path,
    print_path,
)
from liststand.warehouse.tree import TreeNode, parse_tree

SPEC_FIELDS = ("source", "bindings", "filters", "group_by", "template")
AGGREGATE_FUNCS = ("count", "sum", "min", "max")

_VAR_RE = re.compile(r"\$[A-Za-z_][A-Za-z0-9_]*")
_KEY_RE = re.compile(r"key\(\s*(\d+)\s*\)$")
_AGG_RE = re.compile(r"(count|sum|min|max)\(\s*(.*?)\s*\)$")


@dataclass(frozen=True)
class ValueExpr:
    """``$var``, ``$var@attr``, or ``$var/path``."""

    var: str
    attr: str | None = None
    path: PathExpr | None = None

    def render(self) -> str:
        if self.attr is not None:
            return f"{self.var}@{self.attr}"
        if self.path is not None:
            printed = print_path(self.path)
            # a descendant-first path already starts with its separator
            sep = "" if printed.startswith("//") else "/"
            return f"{self.var}{sep}{printed}"
        return self.var


def parse_value_expr(source: str) -> ValueExpr:
    text = source.strip()
    match = _VAR_RE.match(text)
    if match is None or match.start() != 0:
        raise QueryError(f"bad value expression {source!r}: expected $var")
    var = match.group()
    rest = text[match.end() :]
    if rest == "":
        return ValueExpr(var)
    if rest.startswith("@"):
        name = rest[1:]
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.-]*", name):
            raise QueryError(f"bad attribute name in value expression {source!r}")
        return ValueExpr(var, attr=name)
    if rest.startswith("/"):
        # parse_path treats a single leading "/" as a child step and a
        # double one as a descendant step, which is exactly what
        # "$m/from" and "$m//tag" should mean.
        try:
            return ValueExpr(var, path=parse_path(rest))
        except PathSyntaxError as exc:
            raise QueryError(f"bad path in value expression {source!r}: {exc}") from exc
    raise QueryError(f"bad value expression {source!r}")


@dataclass(frozen=True)
class Aggregate:
    func: str  # count, sum, min, or max
    expr: ValueExpr

    def render(self) -> str:
        return f"{self.func}({self.expr.render()})"


@dataclass(frozen=True)
class Comparison:
    """left <cmp> right, where right is a literal or another expression."""

    left: ValueExpr
    cmp: str
    right: object  # str | int literal, or ValueExpr


@dataclass(frozen=True)
class BoolFilter:
    op: str  # "and" or "or"
    args: tuple


@dataclass(frozen=True)
class NotFilter:
    arg: object


@dataclass(frozen=True)
class Binding:
    var: str
    relative_to: str  # "source" or an earlier var
    path: PathExpr


@dataclass(frozen=True)
class TemplateNode:
    """One element of the result skeleton.

    Exactly one of ``expr``, ``text``, or ``children`` is meaningful; a
    bare element has none of them.  ``expr`` is a ValueExpr (value
    insertion), an Aggregate, ``("node", var)`` for a node copy, or
    ``("key", index)`` for a zero-based group key reference.
    """

    name: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: tuple = ()
    text: str | None = None
    expr: object = None


@dataclass(frozen=True)
class QuerySpec:
    source: str
    bindings: tuple[Binding, ...]
    filters: object  # Comparison | BoolFilter | NotFilter | None
    group_by: tuple[ValueExpr, ...]
    template: TemplateNode
    template_text: str

    def to_json_dict(self) -> dict:
        return {
            "source": self.source,
            "bindings": [
                {
                    "var": b.var,
                    "relative_to": b.relative_to,
                    "path": print_path(b.path),
                }
                for b in self.bindings
            ],
            "filters": _filter_to_json(self.filters),
            "group_by": [expr.render() for expr in self.group_by],
            "template": self.template_text,
        }


def _filter_to_json(node) -> dict | None:
    if node is None:
        return None
    if isinstance(node, BoolFilter):
        return {"op": node.op, "args": [_filter_to_json(a) for a in node.args]}
    if isinstance(node, NotFilter):
        return {"op": "not", "arg": _filter_to_json(node.arg)}
    right = (
        {"expr": node.right.render()}
        if isinstance(node.right, ValueExpr)
        else {"lit": node.right}
    )
    return {"op": "cmp", "left": node.left.render(), "cmp": node.cmp, "right": right}


def parse_query_spec(data: dict) -> QuerySpec:
    """Validate and parse a query object; raises QueryError on any flaw."""

    if not isinstance(data, dict):
        raise QueryError("query must be a JSON object")
    unknown = set(data) - set(SPEC_FIELDS)
    if unknown:
        raise QueryError(f"unknown query field(s): {', '.join(sorted(unknown))}")
    for required in ("source", "bindings", "template"):
        if required not in data:
            raise QueryError(f"query is missing the {required!r} field")

    source = data["source"]
    if not isinstance(source, str) or not source:
        raise QueryError("source must be a non-empty string")

    bindings = _parse_bindings(data["bindings"])
    bound = [b.var for b in bindings]

    filters = _parse_filter(data.get("filters"), bound)
    group_by = _parse_group_by(data.get("group_by", []), bound)
    template_text = data["template"]
    if not isinstance(template_text, str):
        raise QueryError("template must be a string")
    template = _parse_template(template_text, bound, len(group_by))
    return QuerySpec(source, bindings, filters, tuple(group_by), template, template_text)


def _parse_bindings(raw) -> tuple[Binding, ...]:
    if not isinstance(raw, list) or not raw:
        raise QueryError("bindings must be a non-empty list")
    bindings: list[Binding] = []
    seen: set[str] = set()
    for index, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise QueryError(f"binding {index} must be an object")
        extra = set(entry) - {"var", "relative_to", "path"}
        if extra:
            raise QueryError(f"binding {index} has unknown field(s): {', '.join(sorted(extra))}")
        var = entry.get("var")
        if not isinstance(var, str) or not _VAR_RE.fullmatch(var):
            raise QueryError(f"binding {index} needs a var like $m")
        if var in seen:
            raise QueryError(f"variable {var} is bound twice")
        relative_to = entry.get("relative_to", "source")
        if relative_to != "source":
            if relative_to not in seen:
                raise QueryError(
                    f"binding {index} is relative to {relative_to!r}, "
                    "which is not bound earlier"
                )
        path_text = entry.get("path")
        if not isinstance(path_text, str):
            raise QueryError(f"binding {index} needs a path string")
        try:
            path = parse_path(path_text)
        except PathSyntaxError as exc:
            raise QueryError(f"binding {index}: {exc}") from exc
        seen.add(var)
        bindings.append(Binding(var, relative_to, path))
    return tuple(bindings)


def _require_bound(expr: ValueExpr, bound: list[str], where: str) -> None:
    if expr.var not in bound:
        raise QueryError(f"{where} references unbound variable {expr.var}")


def _parse_filter(raw, bound: list[str]):
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise QueryError("filters must be null or an object")
    op = raw.get("op")
    if op in ("and", "or"):
        args = raw.get("args")
        if not isinstance(args, list) or not args:
            raise QueryError(f"{op} filter needs a non-empty args list")
        return BoolFilter(op, tuple(_parse_filter(a, bound) for a in args))
    if op == "not":
        if "arg" not in raw:
            raise QueryError("not filter needs an arg")
        return NotFilter(_parse_filter(raw["arg"], bound))
    if op == "cmp":
        left_text = raw.get("left")
        if not isinstance(left_text, str):
            raise QueryError("cmp filter needs a left expression string")
        left = parse_value_expr(left_text)
        _require_bound(left, bound, "filter")
        cmp = raw.get("cmp")
        if cmp not in COMPARATORS:
            raise QueryError(f"unknown comparator {cmp!r}")
        right_raw = raw.get("right")
        if not isinstance(right_raw, dict) or len(right_raw) != 1:
            raise QueryError("cmp filter right side must be {'lit': ...} or {'expr': ...}")
        if "lit" in right_raw:
            right = right_raw["lit"]
            if not isinstance(right, (str, int)) or isinstance(right, bool):
                raise QueryError("literal must be a string or an integer")
            if cmp == "contains" and not isinstance(right, str):
                raise QueryError("'contains' needs a string literal")
        elif "expr" in right_raw:
            right = parse_value_expr(right_raw["expr"])
            _require_bound(right, bound, "filter")
        else:
            raise QueryError("cmp filter right side must be {'lit': ...} or {'expr': ...}")
        return Comparison(left, cmp, right)
    raise QueryError(f"unknown filter op {op!r}")


def _parse_group_by(raw, bound: list[str]) -> list[ValueExpr]:
    if not isinstance(raw, list):
        raise QueryError("group_by must be a list")
    exprs = []
    for text in raw:
        if not isinstance(text, str):
            raise QueryError("group_by entries must be strings")
        expr = parse_value_expr(text)
        _require_bound(expr, bound, "group_by")
        exprs.append(expr)
    return exprs


def _parse_template(text: str, bound: list[str], key_count: int) -> TemplateNode:
    try:
        doc = parse_tree(text)
    except Exception as exc:
        raise QueryError(f"template is not a well-formed element: {exc}") from exc
    return _convert_template(doc, bound, key_count)


def _convert_template(node: TreeNode, bound: list[str], key_count: int) -> TemplateNode:
    if node.children:
        kids = tuple(_convert_template(kid, bound, key_count) for kid in node.children)
        return TemplateNode(node.name, dict(node.attrs), children=kids)
    text = node.text
    if text is not None and text.startswith("{") and text.endswith("}"):
        expr = _parse_template_expr(text[1:-1].strip(), bound, key_count)
        return TemplateNode(node.name, dict(node.attrs), expr=expr)
    if text is not None and ("{" in text or "}" in text):
        raise QueryError(
            f"template leaf <{node.name}> mixes text and braces; "
            "a leaf is either plain text or a single {expression}"
        )
    return TemplateNode(node.name, dict(node.attrs), text=text)


def _parse_template_expr(body: str, bound: list[str], key_count: int):
    key_match = _KEY_RE.fullmatch(body)
    if key_match:
        index = int(key_match.group(1))
        if index < 1 or index > key_count:
            raise QueryError(
                f"key({index}) is out of range; the query groups by {key_count} value(s)"
            )
        return ("key", index - 1)
    agg_match = _AGG_RE.fullmatch(body)
    if agg_match:
        func, inner = agg_match.groups()
        expr = parse_value_expr(inner)
        _require_bound(expr, bound, "template")
        if func == "count" and (expr.attr is not None or expr.path is not None):
            raise QueryError("count takes a bare variable, like count($m)")
        return Aggregate(func, expr)
    if _VAR_RE.fullmatch(body):
        if body not in bound:
            raise QueryError(f"template references unbound variable {body}")
        return ("node", body)
    expr = parse_value_expr(body)
    _require_bound(expr, bound, "template")
    return expr


def template_aggregates(template: TemplateNode) -> list[Aggregate]:
    """All aggregates anywhere in the skeleton, in document order."""

    found: list[Aggregate] = []
    stack = [template]
    while stack:
        node = stack.pop()
        if isinstance(node.expr, Aggregate):
            found.append(node.expr)
        stack.extend(reversed(node.children))
    return found

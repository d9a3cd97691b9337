"""Query evaluation over resolved document snapshots.

Evaluation is pure: it reads a frozen snapshot from a resolver, never
mutates it, and two calls over equal snapshots return equal results.
Bindings enumerate match tuples by nested iteration in declaration
order, filters drop tuples, and the template is instantiated once per
tuple, once per group (sorted by key), or once over the whole match set
when aggregates appear without grouping.

Inside one instantiation an expression leaf expands to one element per
value in scope.  Aggregates range over the distinct nodes bound to
their variable within the scope, counted by node identity, so a
variable multiplied by a later sibling binding is not double counted.

When the source carries a schema, every literal in predicates and
filters is checked against the declared type of the compared side
before evaluation starts; a mismatch raises QueryError without running
the query.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Protocol

from liststand.ingest.model import parse_timestamp
from liststand.query.path import (
    PathExpr,
    QueryError,
    compare_values,
    eval_path,
)
from liststand.query.spec import (
    Aggregate,
    BoolFilter,
    Comparison,
    NotFilter,
    QuerySpec,
    TemplateNode,
    ValueExpr,
)
from liststand.warehouse.schema import SchemaDef
from liststand.warehouse.tree import TreeNode


@dataclass(frozen=True)
class ResolvedSource:
    """What a resolver hands back for a source name."""

    documents: tuple[TreeNode, ...]
    schema: SchemaDef | None
    version: int


class SourceResolver(Protocol):
    def resolve(self, name: str) -> ResolvedSource | None:
        """Return the named source, or None when there is no such source."""


class WarehouseResolver:
    """Resolver over warehouse collections only."""

    def __init__(self, warehouse) -> None:
        self.warehouse = warehouse

    def resolve(self, name: str) -> ResolvedSource | None:
        if not self.warehouse.exists(name):
            return None
        snap = self.warehouse.snapshot(name)
        return ResolvedSource(snap.documents, snap.schema, snap.version)


class TypeContext:
    """Static type lookups for value expressions against a data schema."""

    def __init__(self, spec: QuerySpec, schema: SchemaDef | None) -> None:
        self.schema = schema
        self.var_elem: dict[str, str | None] = {}
        for binding in spec.bindings:
            last = binding.path.steps[-1].name
            self.var_elem[binding.var] = None if last == "*" else last

    def attr_type(self, element: str | None, attr: str) -> str | None:
        if self.schema is None or element is None:
            return None
        edef = self.schema.elements.get(element)
        if edef is None:
            return None
        for name, leaf_type in edef.attrs:
            if name == attr:
                return leaf_type
        return None

    def content_type(self, element: str | None) -> str | None:
        if self.schema is None or element is None:
            return None
        edef = self.schema.elements.get(element)
        if edef is None:
            return None
        return edef.content

    def value_type(self, expr: ValueExpr) -> str | None:
        element = self.var_elem.get(expr.var)
        if expr.attr is not None:
            return self.attr_type(element, expr.attr)
        if expr.path is not None:
            last = expr.path.steps[-1].name
            return self.content_type(None if last == "*" else last)
        return self.content_type(element)


def evaluate(spec: QuerySpec, resolver: SourceResolver) -> list[TreeNode]:
    """Run ``spec`` against ``resolver`` and return the result documents."""

    source = resolver.resolve(spec.source)
    if source is None:
        raise QueryError(f"unknown source {spec.source!r}")
    ctx = TypeContext(spec, source.schema)
    if source.schema is not None:
        _static_checks(spec, ctx)

    tuples = _match_tuples(spec, source)
    if spec.filters is not None:
        tuples = [t for t in tuples if _eval_filter(spec.filters, t, ctx)]

    if spec.group_by:
        return _grouped_documents(spec, tuples, ctx)
    if _has_aggregate(spec.template):
        return _expand(spec.template, tuples, None, ctx, per_tuple=False)
    docs: list[TreeNode] = []
    for t in tuples:
        docs.extend(_expand(spec.template, [t], None, ctx, per_tuple=True))
    return docs


def _match_tuples(spec: QuerySpec, source: ResolvedSource) -> list[dict]:
    # The anchor is a synthetic node whose children are the documents,
    # so a binding path like "message" selects each document root.
    anchor = TreeNode("collection", children=list(source.documents))
    tuples: list[dict] = [{}]
    for binding in spec.bindings:
        grown: list[dict] = []
        for t in tuples:
            base = anchor if binding.relative_to == "source" else t[binding.relative_to]
            for node in eval_path(binding.path, base, source.schema):
                child = dict(t)
                child[binding.var] = node
                grown.append(child)
        tuples = grown
    return tuples


def value_of(expr: ValueExpr, node: TreeNode, schema=None) -> str | None:
    """Apply a value expression to the node bound to its variable."""

    if expr.attr is not None:
        return node.attrs.get(expr.attr)
    if expr.path is not None:
        hits = eval_path(expr.path, node, schema)
        if not hits:
            return None
        return hits[0].text or ""
    return node.text or ""


def _eval_filter(node, t: dict, ctx: TypeContext) -> bool:
    if isinstance(node, BoolFilter):
        if node.op == "and":
            return all(_eval_filter(a, t, ctx) for a in node.args)
        return any(_eval_filter(a, t, ctx) for a in node.args)
    if isinstance(node, NotFilter):
        return not _eval_filter(node.arg, t, ctx)
    assert isinstance(node, Comparison)
    left = value_of(node.left, t[node.left.var], ctx.schema)
    if left is None:
        return False
    if isinstance(node.right, ValueExpr):
        right = value_of(node.right, t[node.right.var], ctx.schema)
        if right is None:
            return False
    else:
        right = node.right
    return compare_values(left, node.cmp, right, ctx.value_type(node.left))


def _has_aggregate(template: TemplateNode) -> bool:
    stack = [template]
    while stack:
        node = stack.pop()
        if isinstance(node.expr, Aggregate):
            return True
        stack.extend(node.children)
    return False


def _grouped_documents(spec: QuerySpec, tuples: list[dict], ctx: TypeContext) -> list[TreeNode]:
    groups: dict[tuple, list[dict]] = {}
    for t in tuples:
        key = tuple(value_of(e, t[e.var], ctx.schema) for e in spec.group_by)
        groups.setdefault(key, []).append(t)
    key_types = [ctx.value_type(e) for e in spec.group_by]
    ordered = sorted(
        groups,
        key=lambda key: tuple(
            _sort_component(value, leaf_type)
            for value, leaf_type in zip(key, key_types)
        ),
    )
    docs: list[TreeNode] = []
    for key in ordered:
        docs.extend(_expand(spec.template, groups[key], key, ctx, per_tuple=False))
    return docs


def _sort_component(value: str | None, leaf_type: str | None) -> tuple:
    # Absent keys sort first; values that fail their declared type sort
    # last, among themselves as plain strings.
    if value is None:
        return (0, "")
    if leaf_type == "int":
        try:
            return (1, int(value))
        except ValueError:
            return (2, value)
    if leaf_type == "date":
        try:
            if "T" in value:
                return (1, parse_timestamp(value))
            return (1, parse_timestamp(date.fromisoformat(value).isoformat() + "T00:00:00Z"))
        except ValueError:
            return (2, value)
    return (1, value)


def _copy_node(node: TreeNode) -> TreeNode:
    return TreeNode(
        node.name,
        dict(node.attrs),
        text=node.text,
        children=[_copy_node(kid) for kid in node.children],
    )


def _distinct_nodes(var: str, scope: list[dict]) -> list[TreeNode]:
    seen: set[int] = set()
    nodes: list[TreeNode] = []
    for t in scope:
        node = t[var]
        if id(node) not in seen:
            seen.add(id(node))
            nodes.append(node)
    return nodes


def _expand(
    node: TemplateNode,
    scope: list[dict],
    key: tuple | None,
    ctx: TypeContext,
    per_tuple: bool,
) -> list[TreeNode]:
    """Expand one template node into zero or more result elements."""

    if node.children:
        kids: list[TreeNode] = []
        for child in node.children:
            kids.extend(_expand(child, scope, key, ctx, per_tuple))
        return [TreeNode(node.name, dict(node.attrs), children=kids)]
    if node.expr is None:
        return [TreeNode(node.name, dict(node.attrs), text=node.text)]
    expr = node.expr
    if isinstance(expr, tuple) and expr[0] == "key":
        assert key is not None
        return [TreeNode(node.name, dict(node.attrs), text=key[expr[1]])]
    if isinstance(expr, tuple) and expr[0] == "node":
        nodes = _distinct_nodes(expr[1], scope)
        return [
            TreeNode(node.name, dict(node.attrs), children=[_copy_node(n)])
            for n in nodes
        ]
    if isinstance(expr, Aggregate):
        return _expand_aggregate(node, expr, scope, ctx)
    assert isinstance(expr, ValueExpr)
    nodes = _distinct_nodes(expr.var, scope)
    if per_tuple:
        # The lone tuple always yields its element, empty when the value
        # is absent, so per-tuple leaves stay exactly-one.
        value = value_of(expr, nodes[0], ctx.schema)
        return [TreeNode(node.name, dict(node.attrs), text=value)]
    out: list[TreeNode] = []
    for n in nodes:
        value = value_of(expr, n, ctx.schema)
        if value is None:
            continue
        out.append(TreeNode(node.name, dict(node.attrs), text=value))
    return out


def _expand_aggregate(
    node: TemplateNode, agg: Aggregate, scope: list[dict], ctx: TypeContext
) -> list[TreeNode]:
    nodes = _distinct_nodes(agg.expr.var, scope)
    if agg.func == "count":
        return [TreeNode(node.name, dict(node.attrs), text=str(len(nodes)))]
    values = [value_of(agg.expr, n, ctx.schema) for n in nodes]
    values = [v for v in values if v is not None]
    if agg.func == "sum":
        total = 0
        for value in values:
            try:
                total += int(value)
            except ValueError:
                raise QueryError(
                    f"sum({agg.expr.render()}) hit a non-numeric value {value!r}"
                ) from None
        return [TreeNode(node.name, dict(node.attrs), text=str(total))]
    # min and max render the original string of the chosen value and
    # yield nothing at all when no value is present.
    if not values:
        return []
    leaf_type = ctx.value_type(agg.expr)
    picked = (min if agg.func == "min" else max)(
        values, key=lambda v: _sort_component(v, leaf_type)
    )
    return [TreeNode(node.name, dict(node.attrs), text=picked)]


def _static_checks(spec: QuerySpec, ctx: TypeContext) -> None:
    for binding in spec.bindings:
        _check_path_predicates(binding.path, ctx)
    _check_filter(spec.filters, ctx)
    for expr in spec.group_by:
        if expr.path is not None:
            _check_path_predicates(expr.path, ctx)
    _check_template(spec.template, ctx)


def _check_template(node: TemplateNode, ctx: TypeContext) -> None:
    for child in node.children:
        _check_template(child, ctx)
    expr = node.expr
    if isinstance(expr, ValueExpr) and expr.path is not None:
        _check_path_predicates(expr.path, ctx)
    if isinstance(expr, Aggregate):
        if expr.expr.path is not None:
            _check_path_predicates(expr.expr.path, ctx)
        if expr.func == "sum":
            leaf_type = ctx.value_type(expr.expr)
            if leaf_type not in (None, "int"):
                raise QueryError(
                    f"sum({expr.expr.render()}) needs an int-typed expression, "
                    f"not {leaf_type}"
                )


def _check_filter(node, ctx: TypeContext) -> None:
    if node is None:
        return
    if isinstance(node, BoolFilter):
        for arg in node.args:
            _check_filter(arg, ctx)
        return
    if isinstance(node, NotFilter):
        _check_filter(node.arg, ctx)
        return
    assert isinstance(node, Comparison)
    if node.left.path is not None:
        _check_path_predicates(node.left.path, ctx)
    left_type = ctx.value_type(node.left)
    if isinstance(node.right, ValueExpr):
        if node.right.path is not None:
            _check_path_predicates(node.right.path, ctx)
        right_type = ctx.value_type(node.right)
        if left_type and right_type and left_type != right_type:
            raise QueryError(
                f"comparison mixes {left_type} and {right_type}: "
                f"{node.left.render()} {node.cmp} {node.right.render()}"
            )
        return
    _check_literal(node.right, node.cmp, left_type, node.left.render())


def _check_path_predicates(path: PathExpr, ctx: TypeContext) -> None:
    for step in path.steps:
        pred = step.predicate
        if pred is None:
            continue
        if pred.target == "attr":
            element = None if step.name == "*" else step.name
            leaf_type = ctx.attr_type(element, pred.name)
            where = f"@{pred.name} of <{step.name}>"
        else:
            leaf_type = ctx.content_type(pred.name)
            where = f"<{pred.name}> under <{step.name}>"
        _check_literal(pred.literal, pred.op, leaf_type, where)


def _check_literal(literal, op: str, leaf_type: str | None, where: str) -> None:
    if isinstance(literal, ValueExpr):
        return
    if op == "contains":
        if leaf_type in ("int", "date"):
            raise QueryError(f"'contains' cannot apply to the {leaf_type}-typed {where}")
        return
    if leaf_type == "int" and not isinstance(literal, int):
        raise QueryError(f"{where} is int-typed; compare it against an integer literal")
    if leaf_type == "date":
        if not isinstance(literal, str) or not _parses_as_date(literal):
            raise QueryError(f"{where} is date-typed; {literal!r} is not a date")
    if leaf_type == "string" and isinstance(literal, int):
        raise QueryError(f"{where} is string-typed; quote the literal {literal}")


def _parses_as_date(value: str) -> bool:
    try:
        if "T" in value:
            parse_timestamp(value)
        else:
            date.fromisoformat(value)
    except ValueError:
        return False
    return True

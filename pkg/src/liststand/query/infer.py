"""Result schema inference for query templates.

Every document a query produces validates against the schema inferred
here.  The skeleton fixes the element tree; what varies is how often an
expression leaf repeats and what its text looks like, so inference
derives cardinalities and leaf types:

* structural elements and static leaves are exactly-one, typed string;
* ``count`` and ``sum`` leaves are int and exactly-one;
* ``min`` / ``max`` leaves are optional (omitted when no value is in
  scope) and carry the expression's declared type;
* group-key leaves are exactly-one with the key expression's type;
* value and node leaves under grouping or whole-set aggregation repeat,
  so they are many; in per-tuple mode their cardinality follows the
  multiplicity of the variable's binding path through the data schema
  (a path through a declared exactly-one child chain stays one, an
  optional link makes it optional, anything else is many).

Node-copy leaves pull the copied element's declarations, and everything
reachable from them, out of the data schema; without a data schema a
node copy has no describable shape and inference refuses.  All other
leaves fall back to string/many when no data schema is available.
"""

from __future__ import annotations

from liststand.query.evaluate import TypeContext
from liststand.query.path import PathExpr, QueryError
from liststand.query.spec import (
    Aggregate,
    QuerySpec,
    TemplateNode,
    ValueExpr,
    template_aggregates,
)
from liststand.warehouse.schema import ElementDef, SchemaDef, SchemaError, _merge_orders

_RANK = {"one": 0, "optional": 1, "many": 2}


def infer_result_schema(spec: QuerySpec, data_schema: SchemaDef | None) -> SchemaDef:
    """Schema every result document of ``spec`` is guaranteed to satisfy."""

    ctx = TypeContext(spec, data_schema)
    per_tuple = not spec.group_by and not template_aggregates(spec.template)
    mults = _binding_multiplicities(spec, data_schema)
    elements: dict[str, ElementDef] = {}
    _declare(spec.template, spec, ctx, data_schema, mults, per_tuple, elements)
    try:
        return SchemaDef(root=spec.template.name, elements=elements)
    except SchemaError as exc:
        raise QueryError(f"template does not yield a coherent schema: {exc}") from exc


def _declare(
    node: TemplateNode,
    spec: QuerySpec,
    ctx: TypeContext,
    data_schema: SchemaDef | None,
    mults: dict[str, str],
    per_tuple: bool,
    elements: dict[str, ElementDef],
) -> str:
    """Register declarations for this template node; return its cardinality."""

    attrs = [(name, "string") for name in node.attrs]
    if node.children:
        entries: list[tuple[str, str]] = []
        for child in node.children:
            card = _declare(child, spec, ctx, data_schema, mults, per_tuple, elements)
            entries.append((child.name, card))
        _register(elements, node.name, ElementDef(attrs, _collapse(entries), None))
        return "one"

    expr = node.expr
    if expr is None:
        content = "string" if node.text is not None else None
        _register(elements, node.name, ElementDef(attrs, [], content))
        return "one"

    if isinstance(expr, tuple) and expr[0] == "key":
        leaf_type = ctx.value_type(spec.group_by[expr[1]]) or "string"
        _register(elements, node.name, ElementDef(attrs, [], leaf_type))
        return "one"

    if isinstance(expr, tuple) and expr[0] == "node":
        inner = _copied_element_name(spec, expr[1])
        if data_schema is None:
            raise QueryError(
                f"cannot infer a result schema for {{{expr[1]}}} without a data schema"
            )
        _merge_reachable(elements, data_schema, inner)
        _register(elements, node.name, ElementDef(attrs, [(inner, "one")], None))
        return mults.get(expr[1], "many") if per_tuple else "many"

    if isinstance(expr, Aggregate):
        if expr.func in ("count", "sum"):
            _register(elements, node.name, ElementDef(attrs, [], "int"))
            return "one"
        leaf_type = ctx.value_type(expr.expr) or "string"
        _register(elements, node.name, ElementDef(attrs, [], leaf_type))
        return "optional"

    assert isinstance(expr, ValueExpr)
    leaf_type = ctx.value_type(expr) or "string"
    _register(elements, node.name, ElementDef(attrs, [], leaf_type))
    if per_tuple and data_schema is not None:
        return mults.get(expr.var, "many")
    return "many"


def _copied_element_name(spec: QuerySpec, var: str) -> str:
    for binding in spec.bindings:
        if binding.var == var:
            last = binding.path.steps[-1].name
            if last == "*":
                raise QueryError(
                    f"cannot infer a result schema for {{{var}}}: "
                    "its binding path ends in a wildcard"
                )
            return last
    raise QueryError(f"unbound variable {var}")


def _collapse(entries: list[tuple[str, str]]) -> list[tuple[str, str]]:
    # A child name used twice in one template parent repeats per
    # instantiation, so the merged declaration must be many.
    order: list[str] = []
    cards: dict[str, str] = {}
    counts: dict[str, int] = {}
    for name, card in entries:
        if name not in cards:
            order.append(name)
            cards[name] = card
            counts[name] = 1
        else:
            cards[name] = _loosest(cards[name], card)
            counts[name] += 1
    return [
        (name, "many" if counts[name] > 1 else cards[name])
        for name in order
    ]


def _loosest(a: str, b: str) -> str:
    return a if _RANK[a] >= _RANK[b] else b


def _register(elements: dict[str, ElementDef], name: str, new: ElementDef) -> None:
    old = elements.get(name)
    if old is None:
        elements[name] = new
        return
    elements[name] = _merge_defs(name, old, new)


def _merge_defs(name: str, old: ElementDef, new: ElementDef) -> ElementDef:
    # Declared attributes are required, so only attributes present with
    # the same type in every occurrence stay declared.
    attrs = [pair for pair in old.attrs if pair in new.attrs]
    if old.content is None:
        content = new.content
    elif new.content is None or new.content == old.content:
        content = old.content
    else:
        content = "string"
    # A childless occurrence can instantiate with neither text nor
    # children (an empty leaf), and such an instance is checked against
    # the child declaration, so no child may stay required after a merge.
    bare = not old.children or not new.children
    if not old.children:
        children = list(new.children)
    elif not new.children:
        children = list(old.children)
    elif old.children == new.children:
        children = list(old.children)
    else:
        try:
            merged_order = _merge_orders(
                name,
                [[n for n, _ in old.children], [n for n, _ in new.children]],
            )
        except SchemaError as exc:
            raise QueryError(str(exc)) from exc
        old_cards = dict(old.children)
        new_cards = dict(new.children)
        children = []
        for child in merged_order:
            if child in old_cards and child in new_cards:
                card = _loosest(old_cards[child], new_cards[child])
            else:
                # present in only one variant of the element, so absent
                # instances must be allowed
                card = old_cards.get(child) or new_cards[child]
                card = _loosest(card, "optional")
            children.append((child, card))
    if bare and children:
        children = [(child, _loosest(card, "optional")) for child, card in children]
    return ElementDef(attrs, children, content)


def _merge_reachable(
    elements: dict[str, ElementDef], data_schema: SchemaDef, root: str
) -> None:
    if root not in data_schema.elements:
        raise QueryError(f"element <{root}> is not declared in the data schema")
    queue = [root]
    seen: set[str] = set()
    while queue:
        name = queue.pop(0)
        if name in seen:
            continue
        seen.add(name)
        edef = data_schema.elements[name]
        _register(
            elements,
            name,
            ElementDef(list(edef.attrs), list(edef.children), edef.content),
        )
        queue.extend(child for child, _ in edef.children)


def _compose(a: str, b: str) -> str:
    if a == "many" or b == "many":
        return "many"
    if a == "optional" or b == "optional":
        return "optional"
    return "one"


def _binding_multiplicities(spec: QuerySpec, schema: SchemaDef | None) -> dict[str, str]:
    """Per variable: how many nodes its own binding path can yield.

    In per-tuple mode each result document holds exactly one instance of
    a leaf, so any cardinality here is sound; the binding's own path
    multiplicity is the most informative one that stays sound, and it is
    not composed with the anchor's multiplicity.
    """

    mults: dict[str, str] = {}
    if schema is None:
        return {binding.var: "many" for binding in spec.bindings}
    elems: dict[str, str | None] = {}
    for binding in spec.bindings:
        if binding.relative_to == "source":
            base_elem: str | None = None
            from_collection = True
        else:
            base_elem = elems[binding.relative_to]
            from_collection = False
        mults[binding.var] = _path_multiplicity(
            binding.path, base_elem, schema, from_collection
        )
        last = binding.path.steps[-1].name
        elems[binding.var] = None if last == "*" else last
    return mults


def _path_multiplicity(
    path: PathExpr, start: str | None, schema: SchemaDef, from_collection: bool
) -> str:
    """How many nodes the path can reach from one anchor, as a cardinality."""

    mult = "one"
    elem = start
    first = True
    for step in path.steps:
        if (first and from_collection) or step.axis == "descendant" or step.name == "*":
            step_mult = "many"
        elif elem is None:
            step_mult = "many"
        else:
            edef = schema.elements.get(elem)
            declared = dict(edef.children) if edef is not None else {}
            # an undeclared child never matches a valid document
            step_mult = declared.get(step.name, "optional")
        if step.predicate is not None and step_mult == "one":
            step_mult = "optional"
        mult = _compose(mult, step_mult)
        elem = None if step.name == "*" else step.name
        first = False
    return mult

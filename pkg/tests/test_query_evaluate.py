"""Query evaluation: tuples, filters, grouping, aggregates, purity."""

import copy

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liststand.query.evaluate import ResolvedSource, evaluate, value_of
from liststand.query.path import QueryError
from liststand.query.spec import parse_query_spec, parse_value_expr
from liststand.warehouse.schema import ElementDef, SchemaDef, validate
from liststand.warehouse.tree import TreeNode, serialize_tree


def message_schema():
    return SchemaDef(
        root="message",
        elements={
            "message": ElementDef(
                attrs=[("id", "string"), ("date", "date"), ("size", "int")],
                children=[("from", "one"), ("subject", "optional"), ("tags", "optional")],
            ),
            "from": ElementDef(content="string"),
            "subject": ElementDef(content="string"),
            "tags": ElementDef(children=[("tag", "many")]),
            "tag": ElementDef(content="string"),
        },
    )


def message(mid, date, size, sender, subject=None, tags=()):
    kids = [TreeNode("from", text=sender)]
    if subject is not None:
        kids.append(TreeNode("subject", text=subject))
    if tags:
        kids.append(TreeNode("tags", children=[TreeNode("tag", text=t) for t in tags]))
    return TreeNode(
        "message",
        {"id": mid, "date": date, "size": str(size)},
        children=kids,
    )


def corpus():
    return (
        message("a", "2002-04-01T10:00:00Z", 10, "alice@x", "xml rocks", tags=("x",)),
        message("b", "2002-04-02T10:00:00Z", 9, "bob@x", "re: xml rocks"),
        message("c", "2002-04-03T10:00:00Z", 100, "alice@x", tags=("y", "x")),
    )


class DictResolver:
    def __init__(self, **sources):
        self.sources = sources

    def resolve(self, name):
        return self.sources.get(name)


def resolver(docs=None, schema="default"):
    if docs is None:
        docs = corpus()
    if schema == "default":
        schema = message_schema()
    return DictResolver(m=ResolvedSource(tuple(docs), schema, 1))


def q(**overrides):
    data = {
        "source": "m",
        "bindings": [{"var": "$m", "path": "message"}],
        "filters": None,
        "group_by": [],
        "template": "<n>{count($m)}</n>",
    }
    data.update(overrides)
    return parse_query_spec(data)


def rendered(docs):
    return [serialize_tree(doc) for doc in docs]


def test_count_over_three_documents():
    docs = evaluate(q(), resolver())
    assert rendered(docs) == ["<n>3</n>"]


def test_identity_template_wraps_the_document():
    only = corpus()[:1]
    docs = evaluate(q(template="<copy>{$m}</copy>"), resolver(docs=only))
    assert len(docs) == 1
    assert docs[0].name == "copy"
    assert docs[0].children[0] == only[0]
    assert docs[0].children[0] is not only[0]  # deep copy, not the snapshot node


def test_per_tuple_rows_follow_document_order():
    docs = evaluate(
        q(template="<row><id>{$m@id}</id><addr>{$m/from}</addr></row>"),
        resolver(),
    )
    assert rendered(docs) == [
        "<row><id>a</id><addr>alice@x</addr></row>",
        "<row><id>b</id><addr>bob@x</addr></row>",
        "<row><id>c</id><addr>alice@x</addr></row>",
    ]


def test_missing_value_renders_empty_in_per_tuple_mode():
    docs = evaluate(q(template="<s>{$m/subject}</s>"), resolver())
    assert rendered(docs) == ["<s>xml rocks</s>", "<s>re: xml rocks</s>", "<s/>"]


def test_filter_contains_on_child_text():
    spec = q(
        template="<id>{$m@id}</id>",
        filters={"op": "cmp", "left": "$m/subject", "cmp": "contains", "right": {"lit": "xml"}},
    )
    assert rendered(evaluate(spec, resolver())) == ["<id>a</id>", "<id>b</id>"]


def test_filter_numeric_uses_declared_type():
    spec = q(
        template="<id>{$m@id}</id>",
        filters={"op": "cmp", "left": "$m@size", "cmp": ">", "right": {"lit": 9}},
    )
    # "100" < "9" as strings; int typing gets both 10 and 100
    assert rendered(evaluate(spec, resolver())) == ["<id>a</id>", "<id>c</id>"]


def test_filter_date_accepts_plain_date_literals():
    spec = q(
        template="<id>{$m@id}</id>",
        filters={"op": "cmp", "left": "$m@date", "cmp": ">=", "right": {"lit": "2002-04-02"}},
    )
    assert rendered(evaluate(spec, resolver())) == ["<id>b</id>", "<id>c</id>"]


def test_filter_expr_against_expr():
    spec = q(
        bindings=[
            {"var": "$a", "path": "message"},
            {"var": "$b", "path": "message"},
        ],
        template="<pair><x>{$a@id}</x><y>{$b@id}</y></pair>",
        filters={
            "op": "and",
            "args": [
                {"op": "cmp", "left": "$a/from", "cmp": "=", "right": {"expr": "$b/from"}},
                {"op": "cmp", "left": "$a@id", "cmp": "<", "right": {"expr": "$b@id"}},
            ],
        },
    )
    assert rendered(evaluate(spec, resolver())) == [
        "<pair><x>a</x><y>c</y></pair>",
    ]


def test_boolean_not_and_or():
    spec = q(
        template="<id>{$m@id}</id>",
        filters={
            "op": "or",
            "args": [
                {"op": "cmp", "left": "$m@id", "cmp": "=", "right": {"lit": "b"}},
                {"op": "not", "arg": {"op": "cmp", "left": "$m/from", "cmp": "contains", "right": {"lit": "alice"}}},
            ],
        },
    )
    assert rendered(evaluate(spec, resolver())) == ["<id>b</id>"]


def test_chained_binding_iterates_matches():
    # a bare variable in a template copies the bound node itself
    spec = q(
        bindings=[
            {"var": "$m", "path": "message"},
            {"var": "$t", "relative_to": "$m", "path": "tags/tag"},
        ],
        template="<pair><id>{$m@id}</id><t>{$t}</t></pair>",
    )
    assert rendered(evaluate(spec, resolver())) == [
        "<pair><id>a</id><t><tag>x</tag></t></pair>",
        "<pair><id>c</id><t><tag>y</tag></t></pair>",
        "<pair><id>c</id><t><tag>x</tag></t></pair>",
    ]


def test_binding_path_predicate_applies():
    spec = q(
        bindings=[{"var": "$m", "path": "message[@size>9]"}],
        template="<id>{$m@id}</id>",
    )
    assert rendered(evaluate(spec, resolver())) == ["<id>a</id>", "<id>c</id>"]


def test_group_by_sender_tallies():
    spec = q(
        group_by=["$m/from"],
        template="<row><addr>{key(1)}</addr><n>{count($m)}</n></row>",
    )
    assert rendered(evaluate(spec, resolver())) == [
        "<row><addr>alice@x</addr><n>2</n></row>",
        "<row><addr>bob@x</addr><n>1</n></row>",
    ]


def test_group_by_matches_brute_force_tally():
    docs = corpus()
    tally = {}
    for doc in docs:
        sender = doc.child("from").text
        tally[sender] = tally.get(sender, 0) + 1
    spec = q(
        group_by=["$m/from"],
        template="<row><addr>{key(1)}</addr><n>{count($m)}</n></row>",
    )
    out = evaluate(spec, resolver(docs=docs))
    got = {row.child("addr").text: int(row.child("n").text) for row in out}
    assert got == tally
    assert [row.child("addr").text for row in out] == sorted(tally)


def test_group_keys_sort_by_declared_type():
    spec = q(
        group_by=["$m@size"],
        template="<row><s>{key(1)}</s></row>",
    )
    # as strings the order would be 10, 100, 9
    assert rendered(evaluate(spec, resolver())) == [
        "<row><s>9</s></row>",
        "<row><s>10</s></row>",
        "<row><s>100</s></row>",
    ]


def test_absent_group_key_sorts_first_and_renders_empty():
    spec = q(
        group_by=["$m/subject"],
        template="<row><s>{key(1)}</s><n>{count($m)}</n></row>",
    )
    assert rendered(evaluate(spec, resolver())) == [
        "<row><s/><n>1</n></row>",
        "<row><s>re: xml rocks</s><n>1</n></row>",
        "<row><s>xml rocks</s><n>1</n></row>",
    ]


def test_whole_set_aggregates_without_grouping():
    spec = q(template="<t><total>{sum($m@size)}</total><n>{count($m)}</n></t>")
    assert rendered(evaluate(spec, resolver())) == [
        "<t><total>119</total><n>3</n></t>"
    ]


def test_min_max_render_original_strings():
    spec = q(template="<t><lo>{min($m@date)}</lo><hi>{max($m@date)}</hi></t>")
    assert rendered(evaluate(spec, resolver())) == [
        "<t><lo>2002-04-01T10:00:00Z</lo><hi>2002-04-03T10:00:00Z</hi></t>"
    ]


def test_min_over_empty_scope_is_omitted():
    spec = q(
        template="<t><lo>{min($m@date)}</lo><n>{count($m)}</n></t>",
        filters={"op": "cmp", "left": "$m@id", "cmp": "=", "right": {"lit": "nope"}},
    )
    assert rendered(evaluate(spec, resolver())) == ["<t><n>0</n></t>"]


def test_whole_set_value_leaf_expands_per_distinct_node():
    spec = q(template="<t><n>{count($m)}</n><addr>{$m/from}</addr></t>")
    assert rendered(evaluate(spec, resolver())) == [
        "<t><n>3</n><addr>alice@x</addr><addr>bob@x</addr><addr>alice@x</addr></t>"
    ]


def test_aggregate_counts_distinct_nodes_not_tuples():
    # $t multiplies the tuples, count($m) must not inflate
    spec = q(
        bindings=[
            {"var": "$m", "path": "message"},
            {"var": "$t", "relative_to": "$m", "path": "tags/tag"},
        ],
        template="<t><msgs>{count($m)}</msgs><tags>{count($t)}</tags></t>",
    )
    assert rendered(evaluate(spec, resolver())) == [
        "<t><msgs>2</msgs><tags>3</tags></t>"
    ]


def test_grouped_node_leaf_copies_each_member():
    spec = q(
        group_by=["$m/from"],
        template="<row><addr>{key(1)}</addr><copy>{$m}</copy></row>",
    )
    out = evaluate(spec, resolver())
    assert [row.child("addr").text for row in out] == ["alice@x", "bob@x"]
    alice = out[0]
    copies = alice.children_named("copy")
    assert [c.children[0].attrs["id"] for c in copies] == ["a", "c"]


def test_unknown_source():
    with pytest.raises(QueryError, match="unknown source"):
        evaluate(q(source="nope"), resolver())


def test_literal_type_mismatches_fail_before_evaluation():
    checks = [
        {"op": "cmp", "left": "$m@size", "cmp": "=", "right": {"lit": "abc"}},
        {"op": "cmp", "left": "$m@date", "cmp": ">", "right": {"lit": "not a date"}},
        {"op": "cmp", "left": "$m/from", "cmp": "=", "right": {"lit": 3}},
        {"op": "cmp", "left": "$m@size", "cmp": "contains", "right": {"lit": "1"}},
        {"op": "cmp", "left": "$m@size", "cmp": "=", "right": {"expr": "$m@date"}},
    ]
    for filters in checks:
        with pytest.raises(QueryError):
            evaluate(q(filters=filters), resolver())


def test_sum_needs_int_typed_expression():
    with pytest.raises(QueryError, match="int-typed"):
        evaluate(q(template="<t>{sum($m@id)}</t>"), resolver())


def test_binding_predicate_literal_checked():
    spec = q(bindings=[{"var": "$m", "path": "message[@size='big']"}])
    with pytest.raises(QueryError, match="integer literal"):
        evaluate(spec, resolver())


def test_untyped_source_skips_static_checks_and_coerces():
    spec = q(
        template="<id>{$m@id}</id>",
        filters={"op": "cmp", "left": "$m@size", "cmp": ">", "right": {"lit": 9}},
    )
    out = evaluate(spec, resolver(schema=None))
    assert rendered(out) == ["<id>a</id>", "<id>c</id>"]


def test_sum_over_untyped_non_numeric_raises_at_runtime():
    spec = q(template="<t>{sum($m@id)}</t>")
    with pytest.raises(QueryError, match="non-numeric"):
        evaluate(spec, resolver(schema=None))


def test_evaluate_is_pure():
    docs = corpus()
    before = copy.deepcopy(docs)
    res = resolver(docs=docs)
    spec = q(
        group_by=["$m/from"],
        template="<row><addr>{key(1)}</addr><copy>{$m}</copy></row>",
    )
    first = evaluate(spec, res)
    first[0].children[1].children[0].attrs["id"] = "mutated"
    second = evaluate(spec, res)
    assert docs == before  # snapshot untouched, even after result mutation
    assert rendered(second) == rendered(evaluate(spec, res))
    assert "mutated" not in "".join(rendered(second))


def test_adding_a_conjunct_never_grows_the_result():
    base_filter = {"op": "cmp", "left": "$m@size", "cmp": ">", "right": {"lit": 5}}
    extra = {
        "op": "and",
        "args": [
            base_filter,
            {"op": "cmp", "left": "$m/from", "cmp": "contains", "right": {"lit": "alice"}},
        ],
    }
    loose = rendered(evaluate(q(template="<id>{$m@id}</id>", filters=base_filter), resolver()))
    tight = rendered(evaluate(q(template="<id>{$m@id}</id>", filters=extra), resolver()))
    assert set(tight) <= set(loose)
    assert len(tight) <= len(loose)


sizes = st.lists(st.integers(0, 30), min_size=0, max_size=8)


@st.composite
def filter_pool(draw):
    cmp = draw(st.sampled_from(["=", "!=", "<", "<=", ">", ">="]))
    lit = draw(st.integers(0, 30))
    return {"op": "cmp", "left": "$m@size", "cmp": cmp, "right": {"lit": lit}}


@settings(max_examples=60, deadline=None)
@given(sizes, filter_pool(), filter_pool())
def test_filter_monotonicity_property(values, f1, f2):
    docs = tuple(
        message(f"m{i}", "2002-04-01T10:00:00Z", size, "p@x")
        for i, size in enumerate(values)
    )
    res = resolver(docs=docs)
    loose = rendered(evaluate(q(template="<id>{$m@id}</id>", filters=f1), res))
    tight = rendered(
        evaluate(
            q(template="<id>{$m@id}</id>", filters={"op": "and", "args": [f1, f2]}),
            res,
        )
    )
    assert set(tight) <= set(loose)


def test_results_validate_against_data_derived_expectations():
    # cross-check value_of against hand reads
    doc = corpus()[0]
    assert value_of(parse_value_expr("$m@id"), doc) == "a"
    assert value_of(parse_value_expr("$m/from"), doc) == "alice@x"
    assert value_of(parse_value_expr("$m/tags/tag"), doc) == "x"
    assert value_of(parse_value_expr("$m/nope"), doc) is None


def test_schema_validation_of_sample_corpus():
    # fixture sanity: the corpus must satisfy its own schema
    schema = message_schema()
    for doc in corpus():
        assert validate(doc, schema) == []

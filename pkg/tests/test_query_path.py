"""Path expression parsing, printing, and evaluation."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from liststand.query.path import (
    PathExpr,
    PathSyntaxError,
    Predicate,
    Step,
    eval_path,
    parse_path,
    print_path,
)
from liststand.warehouse.schema import ElementDef, SchemaDef
from liststand.warehouse.tree import TreeNode


def test_two_child_steps():
    path = parse_path("message/from")
    assert path == PathExpr(
        (Step("child", "message"), Step("child", "from"))
    )


def test_descendant_step_with_attribute_predicate():
    path = parse_path("//message[@list='xquery']")
    assert path == PathExpr(
        (Step("descendant", "message", Predicate("attr", "list", "=", "xquery")),)
    )


def test_trailing_separator_is_a_syntax_error():
    with pytest.raises(PathSyntaxError):
        parse_path("message//")
    with pytest.raises(PathSyntaxError):
        parse_path("message/")


@pytest.mark.parametrize(
    "bad",
    ["", "/", "//", "message[", "[x=1]", "message[@=1]", "message[@a?1]",
     "message[@a='x'", "a b", "message[@a='x]"],
)
def test_malformed_paths_raise(bad):
    with pytest.raises(PathSyntaxError):
        parse_path(bad)


def test_syntax_errors_carry_a_position():
    with pytest.raises(PathSyntaxError) as err:
        parse_path("message[@a='x'")
    assert "position" in str(err.value)


def test_all_comparators_parse():
    for op in ("=", "!=", "<", "<=", ">", ">="):
        path = parse_path(f"m[@n{op}3]")
        assert path.steps[0].predicate.op == op
    path = parse_path("m[@n contains 'x']")
    assert path.steps[0].predicate.op == "contains"


def test_child_predicate_and_leading_slash():
    path = parse_path("/message[subject contains 'xml']")
    pred = path.steps[0].predicate
    assert pred == Predicate("child", "subject", "contains", "xml")


def test_contains_rejects_int_literal():
    with pytest.raises(PathSyntaxError):
        parse_path("m[@a contains 3]")


def test_print_round_trips_directed():
    for source in (
        "message/from",
        "//message[@list='xquery']",
        "a/b//c[@n>=10]/d",
        "m[subject contains 'it\\'s']",
        "*/x[@k!='a\\\\b']",
    ):
        path = parse_path(source)
        assert parse_path(print_path(path)) == path


names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_-]{0,5}", fullmatch=True)
literals = st.one_of(
    st.integers(-999, 999),
    st.text(alphabet=st.characters(min_codepoint=0x20, max_codepoint=0x7E), max_size=6),
)


@st.composite
def paths(draw):
    steps = []
    for index in range(draw(st.integers(1, 4))):
        axis = draw(st.sampled_from(["child", "descendant"]))
        name = draw(st.one_of(st.just("*"), names))
        predicate = None
        if draw(st.booleans()):
            target = draw(st.sampled_from(["attr", "child"]))
            op = draw(st.sampled_from(["=", "!=", "<", "<=", ">", ">=", "contains"]))
            literal = draw(literals)
            if op == "contains" and not isinstance(literal, str):
                literal = str(literal)
            predicate = Predicate(target, draw(names), op, literal)
        steps.append(Step(axis, name, predicate))
    return PathExpr(tuple(steps))


@given(paths())
def test_print_parse_round_trip(path):
    assert parse_path(print_path(path)) == path


def sample_doc():
    return TreeNode(
        "message",
        {"id": "a", "size": "10"},
        children=[
            TreeNode("from", text="alice@x"),
            TreeNode("subject", text="xml rocks"),
            TreeNode(
                "tags",
                children=[TreeNode("tag", text="x"), TreeNode("tag", text="y")],
            ),
        ],
    )


def test_child_axis_walks_one_level():
    doc = sample_doc()
    hits = eval_path(parse_path("tags/tag"), doc)
    assert [node.text for node in hits] == ["x", "y"]
    assert eval_path(parse_path("tag"), doc) == []


def test_descendant_axis_reaches_deep_and_excludes_anchor():
    doc = sample_doc()
    hits = eval_path(parse_path("//tag"), doc)
    assert [node.text for node in hits] == ["x", "y"]
    assert eval_path(parse_path("//message"), doc) == []


def test_descendant_chains_do_not_duplicate():
    inner = TreeNode("a", children=[TreeNode("b")])
    doc = TreeNode("a", children=[inner])
    root_holder = TreeNode("r", children=[doc])
    hits = eval_path(parse_path("//a//b"), root_holder)
    assert len(hits) == 1


def test_wildcard_matches_any_name():
    doc = sample_doc()
    hits = eval_path(parse_path("*"), doc)
    assert [node.name for node in hits] == ["from", "subject", "tags"]


def test_attribute_predicate_filters():
    doc = sample_doc()
    assert len(eval_path(parse_path("//tag[@x='1']"), doc)) == 0
    holder = TreeNode("r", children=[doc])
    assert len(eval_path(parse_path("message[@id='a']"), holder)) == 1
    assert len(eval_path(parse_path("message[@id='b']"), holder)) == 0
    assert len(eval_path(parse_path("message[@missing='a']"), holder)) == 0


def test_child_predicate_checks_text_of_any_matching_child():
    holder = TreeNode("r", children=[sample_doc()])
    assert len(eval_path(parse_path("message[subject contains 'xml']"), holder)) == 1
    assert len(eval_path(parse_path("message[subject contains 'pdf']"), holder)) == 0
    assert len(eval_path(parse_path("message[from='alice@x']"), holder)) == 1


def typed_schema():
    return SchemaDef(
        root="message",
        elements={
            "message": ElementDef(
                attrs=[("id", "string"), ("size", "int")],
                children=[("from", "one"), ("subject", "optional"), ("tags", "optional")],
            ),
            "from": ElementDef(content="string"),
            "subject": ElementDef(content="string"),
            "tags": ElementDef(children=[("tag", "many")]),
            "tag": ElementDef(content="string"),
        },
    )


def test_numeric_comparison_needs_the_schema():
    # "10" < "9" as strings, but 10 > 9 as ints
    holder = TreeNode("r", children=[sample_doc()])
    untyped = eval_path(parse_path("message[@size>9]"), holder)
    assert len(untyped) == 1  # int literal forces numeric even without a schema
    typed = eval_path(parse_path("message[@size>9]"), holder, typed_schema())
    assert len(typed) == 1
    as_string = eval_path(parse_path("message[@id>'Z']"), holder)
    assert len(as_string) == 1  # plain string comparison: "a" > "Z"


def test_date_comparison_mixes_date_and_timestamp_forms():
    doc = TreeNode("event", {"at": "2002-04-01T10:00:00Z"})
    holder = TreeNode("r", children=[doc])
    schema = SchemaDef(
        root="event",
        elements={"event": ElementDef(attrs=[("at", "date")])},
    )
    assert len(eval_path(parse_path("event[@at>='2002-04-01']"), holder, schema)) == 1
    assert len(eval_path(parse_path("event[@at<'2002-04-01']"), holder, schema)) == 0
    # lexicographic comparison would get this wrong without the schema
    assert len(eval_path(parse_path("event[@at<'2002-4-2']"), holder, schema)) == 0


def test_unparseable_value_fails_typed_comparison():
    doc = TreeNode("event", {"at": "not-a-date", "n": "abc"})
    holder = TreeNode("r", children=[doc])
    schema = SchemaDef(
        root="event",
        elements={"event": ElementDef(attrs=[("at", "date"), ("n", "int")])},
    )
    assert eval_path(parse_path("event[@at>='2002-04-01']"), holder, schema) == []
    assert eval_path(parse_path("event[@n=3]"), holder, schema) == []

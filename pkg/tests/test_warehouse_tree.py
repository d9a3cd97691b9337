"""Tree model and canonical text form."""

import pytest
from hypothesis import given, strategies as st

from liststand.warehouse import TreeError, TreeNode, parse_tree, serialize_tree


def test_serialize_simple():
    doc = TreeNode("a", {"x": "1"}, children=[TreeNode("b", text="hi")])
    assert serialize_tree(doc) == '<a x="1"><b>hi</b></a>'


def test_attributes_sorted_by_key():
    doc = TreeNode("n", {"b": "2", "a": "1"})
    assert serialize_tree(doc) == '<n a="1" b="2"/>'


def test_empty_element_self_closes():
    assert serialize_tree(TreeNode("n")) == "<n/>"


def test_empty_text_means_no_text():
    assert TreeNode("n", text="").text is None
    assert serialize_tree(TreeNode("n", text="")) == "<n/>"


def test_newlines_become_character_references():
    doc = TreeNode("n", {"k": "a\nb"}, children=[TreeNode("m", text="l1\nl2\r")])
    line = serialize_tree(doc)
    assert line == '<n k="a&#10;b"><m>l1&#10;l2&#13;</m></n>'
    assert "\n" not in line


def test_markup_characters_escaped():
    doc = TreeNode("n", {"q": 'say "hi" <now>'}, text=None, children=[TreeNode("m", text="a < b & c > d")])
    line = serialize_tree(doc)
    assert "&lt;" in line and "&amp;" in line and "&quot;" in line
    assert parse_tree(line) == doc


def test_round_trip_directed():
    doc = TreeNode(
        "msg",
        {"id": "m1", "date": "2002-04-01T12:00:00Z"},
        children=[
            TreeNode("subject", text="grouping & sorting"),
            TreeNode("body", text="line one\nline two"),
            TreeNode("refs", children=[TreeNode("ref", text="<a@x>"), TreeNode("ref", text="<b@x>")]),
        ],
    )
    assert parse_tree(serialize_tree(doc)) == doc


def test_parse_pretty_printed_whitespace_is_insignificant():
    doc = parse_tree("<a>\n  <b>hi</b>\n  <c/>\n</a>")
    assert doc == TreeNode("a", children=[TreeNode("b", text="hi"), TreeNode("c")])


def test_parse_rejects_mixed_content():
    with pytest.raises(TreeError):
        parse_tree("<a>text<b/></a>")


def test_parse_rejects_garbage():
    with pytest.raises(TreeError):
        parse_tree("<a><b></a>")


def test_constructor_rejects_mixed_content():
    with pytest.raises(TreeError):
        TreeNode("a", text="t", children=[TreeNode("b")])


def test_constructor_rejects_bad_names():
    with pytest.raises(TreeError):
        TreeNode("")
    with pytest.raises(TreeError):
        TreeNode("1bad")
    with pytest.raises(TreeError):
        TreeNode("a", {"bad name": "v"})


def test_constructor_rejects_uncarryable_characters():
    with pytest.raises(TreeError):
        TreeNode("a", text="nul\x00")
    with pytest.raises(TreeError):
        TreeNode("a", {"k": "\x1b"})


def test_walk_is_document_order():
    doc = TreeNode("a", children=[TreeNode("b", children=[TreeNode("c")]), TreeNode("d")])
    assert [node.name for node in doc.walk()] == ["a", "b", "c", "d"]


def test_child_helpers():
    doc = TreeNode("a", children=[TreeNode("b", text="x"), TreeNode("b", text="y"), TreeNode("c")])
    assert doc.child("b").text == "x"
    assert doc.child("zz") is None
    assert [kid.text for kid in doc.children_named("b")] == ["x", "y"]
    assert doc.child_text("c") == ""
    assert doc.child_text("zz") is None


names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_-]{0,6}", fullmatch=True)
xml_text = st.text(
    alphabet=st.one_of(
        st.sampled_from("\t\n\r"),
        st.characters(min_codepoint=0x20, blacklist_categories=("Cs",)),
    ),
    max_size=40,
)
attr_dicts = st.dictionaries(names, xml_text, max_size=3)


def trees():
    leaves = st.builds(TreeNode, names, attr_dicts, st.one_of(st.none(), xml_text))
    return st.recursive(
        leaves,
        lambda kids: st.builds(
            lambda name, attrs, children: TreeNode(name, attrs, None, children),
            names,
            attr_dicts,
            st.lists(kids, max_size=4),
        ),
        max_leaves=25,
    )


@given(trees())
def test_round_trip_property(doc):
    line = serialize_tree(doc)
    assert "\n" not in line and "\r" not in line
    assert parse_tree(line) == doc

"""Document shapes for the built-in collections.

Messages and sourced facts each get a fixed tree shape plus the schema
that the corresponding collection is created with.  Conversions are
inverses of each other, except that characters the text form cannot carry
are replaced with U+FFFD on the way in.
"""

from __future__ import annotations

from liststand.ingest.model import Message, format_timestamp, parse_timestamp
from liststand.provenance import Attribution, Fact, SourcedFact
from liststand.warehouse.schema import ElementDef, SchemaDef
from liststand.warehouse.tree import TreeNode, sanitize_text

MESSAGE_SCHEMA = SchemaDef(
    root="message",
    elements={
        "message": ElementDef(
            attrs=[("date", "date"), ("id", "string"), ("offset", "int"), ("source", "string")],
            children=[
                ("from", "one"),
                ("in_reply_to", "optional"),
                ("references", "optional"),
                ("subject", "one"),
                ("subject_norm", "one"),
                ("body", "one"),
                ("flags", "optional"),
            ],
        ),
        "from": ElementDef(attrs=[("display", "string")], content="string"),
        "in_reply_to": ElementDef(content="string"),
        "references": ElementDef(children=[("ref", "many")]),
        "ref": ElementDef(content="string"),
        "subject": ElementDef(content="string"),
        "subject_norm": ElementDef(content="string"),
        "body": ElementDef(content="string"),
        "flags": ElementDef(children=[("flag", "many")]),
        "flag": ElementDef(content="string"),
    },
)

FACT_SCHEMA = SchemaDef(
    root="fact",
    elements={
        "fact": ElementDef(
            attrs=[("id", "int")],
            children=[
                ("subject", "one"),
                ("predicate", "one"),
                ("object", "one"),
                ("event_time", "optional"),
                ("chain", "one"),
            ],
        ),
        "subject": ElementDef(content="string"),
        "predicate": ElementDef(content="string"),
        "object": ElementDef(content="string"),
        "event_time": ElementDef(content="date"),
        "chain": ElementDef(children=[("attribution", "many")]),
        "attribution": ElementDef(
            attrs=[("agent", "string"), ("kind", "string"), ("time", "date")]
        ),
    },
)


def message_to_tree(message: Message) -> TreeNode:
    children = [
        TreeNode(
            "from",
            {"display": sanitize_text(message.from_display or "")},
            text=sanitize_text(message.from_address),
        )
    ]
    if message.in_reply_to:
        children.append(TreeNode("in_reply_to", text=sanitize_text(message.in_reply_to)))
    if message.references:
        children.append(
            TreeNode(
                "references",
                children=[TreeNode("ref", text=sanitize_text(ref)) for ref in message.references],
            )
        )
    children.append(TreeNode("subject", text=sanitize_text(message.subject_raw)))
    children.append(TreeNode("subject_norm", text=sanitize_text(message.subject_norm)))
    children.append(TreeNode("body", text=sanitize_text(message.body_text)))
    if message.flags:
        children.append(
            TreeNode("flags", children=[TreeNode("flag", text=flag) for flag in message.flags])
        )
    return TreeNode(
        "message",
        {
            "id": sanitize_text(message.message_id),
            "date": format_timestamp(message.date),
            "source": sanitize_text(message.source_id),
            "offset": str(message.offset),
        },
        children=children,
    )


def tree_to_message(doc: TreeNode) -> Message:
    from_el = doc.child("from")
    references_el = doc.child("references")
    flags_el = doc.child("flags")
    return Message(
        message_id=doc.attrs["id"],
        in_reply_to=doc.child_text("in_reply_to"),
        references=[ref.text or "" for ref in references_el.children] if references_el else [],
        from_display=(from_el.attrs.get("display") or None) if from_el else None,
        from_address=(from_el.text or "") if from_el else "",
        date=parse_timestamp(doc.attrs["date"]),
        subject_raw=doc.child_text("subject") or "",
        subject_norm=doc.child_text("subject_norm") or "",
        body_text=doc.child_text("body") or "",
        source_id=doc.attrs["source"],
        offset=int(doc.attrs["offset"]),
        flags=[flag.text or "" for flag in flags_el.children] if flags_el else [],
    )


def fact_to_tree(sourced: SourcedFact) -> TreeNode:
    children = [
        TreeNode("subject", text=sanitize_text(sourced.fact.subject)),
        TreeNode("predicate", text=sanitize_text(sourced.fact.predicate)),
        TreeNode("object", text=sanitize_text(sourced.fact.object)),
    ]
    if sourced.fact.event_time is not None:
        children.append(TreeNode("event_time", text=format_timestamp(sourced.fact.event_time)))
    children.append(
        TreeNode(
            "chain",
            children=[
                TreeNode(
                    "attribution",
                    {
                        "agent": sanitize_text(att.agent),
                        "kind": att.kind,
                        "time": format_timestamp(att.time),
                    },
                )
                for att in sourced.chain
            ],
        )
    )
    return TreeNode("fact", {"id": str(sourced.fact_id)}, children=children)


def tree_to_fact(doc: TreeNode) -> SourcedFact:
    event_raw = doc.child_text("event_time")
    fact = Fact(
        subject=doc.child_text("subject") or "",
        predicate=doc.child_text("predicate") or "",
        object=doc.child_text("object") or "",
        event_time=parse_timestamp(event_raw) if event_raw else None,
    )
    chain_el = doc.child("chain")
    chain = tuple(
        Attribution(
            agent=att.attrs["agent"],
            kind=att.attrs["kind"],
            time=parse_timestamp(att.attrs["time"]),
        )
        for att in (chain_el.children if chain_el else [])
    )
    return SourcedFact(int(doc.attrs["id"]), fact, chain)
